#include "simgroup_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <optional>
#include <system_error>

#include "simgroup/blockmerge.hpp"
#include "simgroup/checkpoint.hpp"
#include "simgroup/config.hpp"
#include "simgroup/datagen.hpp"
#include "simgroup/error.hpp"
#include "simgroup/evaluate.hpp"
#include "simgroup/formats.hpp"
#include "simgroup/gradcheck.hpp"
#include "simgroup/grouping.hpp"
#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/textio.hpp"
#include "simgroup/trainer.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace simgroup::cli {
namespace fs = std::filesystem;
namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Run seed; overrides the config file");
  cmd->add_option("--config", c.config, "key=value config file")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--set", c.sets, "Config override key=value (repeatable)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = RunConfig::from_text(read_file(c.config), c.config);
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  cfg.validate();
  return cfg;
}

// Files with extension `ext` under a directory, sorted by name, or the path
// itself when it names a file.
std::vector<fs::path> expand(const std::vector<std::string>& args, const std::string& ext) {
  std::vector<fs::path> out;
  for (const std::string& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw DataError(a + ": no such file or directory");
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create directory: " + ec.message());
}

Model load_model(const fs::path& dir, const std::string& checkpoint) {
  const fs::path cfg_path = dir / "model.cfg";
  Model model(ModelConfig::from_text(read_file(cfg_path), cfg_path.string()));
  const fs::path weights = checkpoint.empty() ? dir / "model.sgw" : fs::path(checkpoint);
  try {
    model.set_parameters(load_checkpoint(weights));
  } catch (const DataError& e) {
    throw DataError(weights.string() + ": " + e.what());
  }
  return model;
}

std::string sidecar(const fs::path& p, const char* ext) { return p.string() + ext; }

int cmd_gen(const Common& c, std::optional<std::size_t> scenes, bool dbscan_gt,
            std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (scenes) cfg.data_scenes = *scenes;
  const fs::path dir(c.out);
  ensure_dir(dir);
  std::string manifest = "# gen manifest: files and per-scene seeds\n";
  manifest += "format=SPC1\n";
  manifest += "seed=" + std::to_string(cfg.seed) + "\n";
  manifest += "gt_instances=" + std::string(dbscan_gt ? "dbscan" : "generator") + "\n";
  const std::string resolved = cfg.to_text();
  for (std::string_view rest = resolved; !rest.empty();) {
    const std::string_view line = rest.substr(0, rest.find('\n') + 1);
    rest.remove_prefix(line.size());
    if (line.starts_with("data.") || (dbscan_gt && line.starts_with("dbscan."))) {
      manifest += line;
    }
  }
  for (std::size_t i = 0; i < cfg.data_scenes; ++i) {
    const std::uint64_t scene_seed = derive_seed(cfg.seed, i);
    GeneratedScene scene = generate_scene(cfg.data, scene_seed);
    if (dbscan_gt) {
      scene.labels.instance = dbscan_instances(scene.cloud, scene.labels.semantic, cfg.dbscan);
    }
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu.spc", i);
    write_spc(dir / name, scene.cloud, scene.labels);
    manifest += std::string(name) + "=" + std::to_string(scene_seed) + "\n";
  }
  write_file(dir / "manifest.txt", manifest);
  out << "wrote " << cfg.data_scenes << " scenes to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const std::vector<std::string>& data,
              std::optional<std::size_t> epochs, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (epochs) cfg.train.max_epochs = *epochs;
  const auto files = expand(data, ".spc");
  if (files.empty()) throw DataError("train: no .spc files found");
  std::vector<Sample> dataset;
  std::vector<LabelSet> label_sets;
  for (const fs::path& f : files) {
    LabeledCloud lc = read_spc(f);
    if (lc.cloud.dims() != cfg.model.input_dims) {
      throw DataError(f.string() + ": " + std::to_string(lc.cloud.dims()) +
                      " attributes, model.input_dims is " +
                      std::to_string(cfg.model.input_dims));
    }
    if (static_cast<std::size_t>(lc.labels.n_classes) > cfg.model.n_classes) {
      throw DataError(f.string() + ": " + std::to_string(lc.labels.n_classes) +
                      " classes, model.n_classes is " + std::to_string(cfg.model.n_classes));
    }
    label_sets.push_back(lc.labels);
    dataset.push_back({std::move(lc.cloud), std::move(lc.labels)});
  }
  if (cfg.loss.class_weights.empty()) {
    cfg.loss.class_weights = median_frequency_weights(label_sets, cfg.model.n_classes);
  }
  cfg.validate();

  const fs::path dir(c.out);
  ensure_dir(dir);
  write_file(dir / "train.cfg", cfg.to_text());
  Model model = init_model(cfg.model);
  write_file(dir / "model.cfg", model.config().to_text());

  FitOptions opts;
  opts.checkpoint_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  opts.on_epoch = [&](const EpochLog& e) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "epoch " << e.epoch << " step " << e.step << " total "
        << format_fixed(e.loss.total, 5) << " l_sim " << format_fixed(e.loss.l_sim, 5)
        << " l_cf " << format_fixed(e.loss.l_cf, 5) << " l_sem "
        << format_fixed(e.loss.l_sem, 5) << " (" << format_fixed(secs, 1) << "s)" << std::endl;
  };
  const auto log = fit(model, dataset, cfg.train, cfg.loss, opts);
  write_file(dir / "train_log.csv", format_train_log(log));
  save_checkpoint(dir / "model.sgw", model.parameters());
  out << "trained " << log.size() << " epochs on " << dataset.size() << " samples; model in "
      << dir.string() << "\n";
  return kExitOk;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

void write_prediction(const fs::path& path, const Prediction& pred, std::size_t n_classes) {
  ensure_parent(path);
  write_sin(path, pred.instances, pred.boxes);
  write_file(sidecar(path, ".sem"), format_ssm(pred.semantic, n_classes));
}

int cmd_infer(const Common& c, const std::string& model_dir, const std::string& checkpoint,
              const std::string& input, bool gt_as_prediction, std::ostream& out) {
  const RunConfig cfg = resolve(c);
  const LabeledCloud lc = read_spc(input);
  Prediction pred;
  std::size_t n_classes = 0;
  if (gt_as_prediction) {
    pred.instances = instances_from_labels(lc.labels);
    pred.semantic = lc.labels.semantic;
    pred.boxes = boxes_from_instances(lc.cloud, pred.instances);
    n_classes = static_cast<std::size_t>(lc.labels.n_classes);
  } else {
    if (model_dir.empty()) throw ConfigError("infer: --model is required");
    const Model model = load_model(model_dir, checkpoint);
    pred = infer_cloud(model, lc.cloud, cfg.grouping, cfg.seed);
    n_classes = model.config().n_classes;
  }
  write_prediction(c.out, pred, n_classes);
  out << "wrote " << pred.instances.n_instances() << " instances to " << c.out << "\n";
  return kExitOk;
}

int cmd_scene(const Common& c, const std::string& model_dir, const std::string& checkpoint,
              const std::string& input, std::ostream& out) {
  const RunConfig cfg = resolve(c);
  const LabeledCloud lc = read_spc(input);
  const Model model = load_model(model_dir, checkpoint);
  const ScenePrediction sp = infer_scene(model, lc.cloud, cfg.grouping, cfg.scene, cfg.seed);
  write_prediction(c.out, sp.prediction, model.config().n_classes);
  write_file(sidecar(c.out, ".meta"), format_scene_meta(sp, cfg.scene));
  out << "merged " << sp.partition.blocks.size() << " blocks into "
      << sp.prediction.instances.n_instances() << " instances; wrote " << c.out << "\n";
  return kExitOk;
}

int cmd_eval(const Common& c, const std::vector<std::string>& preds,
             const std::vector<std::string>& gts, const std::vector<double>& ious,
             std::ostream& out) {
  resolve(c);
  const auto pred_files = expand(preds, ".sin");
  const auto gt_files = expand(gts, ".spc");
  if (pred_files.size() != gt_files.size()) {
    throw DataError("eval: " + std::to_string(pred_files.size()) + " predictions for " +
                    std::to_string(gt_files.size()) + " ground-truth files");
  }
  if (gt_files.empty()) throw DataError("eval: no inputs");
  EvalInputs in;
  for (std::size_t i = 0; i < gt_files.size(); ++i) {
    LabeledCloud gt = read_spc(gt_files[i]);
    InstanceFile pred = read_sin(pred_files[i]);
    if (pred.instances.point_instance.size() != gt.cloud.n_points()) {
      throw DataError(pred_files[i].string() + ": " +
                      std::to_string(pred.instances.point_instance.size()) + " points, " +
                      gt_files[i].string() + " has " + std::to_string(gt.cloud.n_points()));
    }
    std::vector<int> semantic;
    const std::string sem_path = sidecar(pred_files[i], ".sem");
    if (fs::exists(sem_path)) {
      semantic = parse_ssm(read_file(sem_path), sem_path);
      if (semantic.size() != gt.cloud.n_points()) {
        throw DataError(sem_path + ": point count mismatch");
      }
    } else {
      semantic.assign(gt.cloud.n_points(), -1);
      for (std::size_t p = 0; p < semantic.size(); ++p) {
        const int id = pred.instances.point_instance[p];
        if (id >= 0) semantic[p] = pred.instances.instance_class[static_cast<std::size_t>(id)];
      }
    }
    in.n_classes = std::max(in.n_classes, static_cast<std::size_t>(gt.labels.n_classes));
    in.predictions.push_back(std::move(pred.instances));
    in.semantic_predictions.push_back(std::move(semantic));
    in.clouds.push_back(std::move(gt.cloud));
    in.gts.push_back(std::move(gt.labels));
  }
  MatchConfig mc;
  if (!ious.empty()) mc.iou_thresholds = ious;
  const std::string report = format_eval_report(in, mc);
  if (c.out.empty()) {
    out << report;
  } else {
    ensure_parent(c.out);
    write_file(c.out, report);
    out << "wrote " << c.out << "\n";
  }
  return kExitOk;
}

int cmd_export_ply(const Common& c, const std::string& input, const std::string& labels,
                   std::ostream& out) {
  resolve(c);
  const LabeledCloud lc = read_spc(input);
  std::vector<int> ids;
  if (labels.empty()) {
    ids = instances_from_labels(lc.labels).point_instance;
  } else {
    ids = read_sin(labels).instances.point_instance;
  }
  ensure_parent(c.out);
  export_ply(c.out, lc.cloud, ids);
  out << "wrote " << lc.cloud.n_points() << " vertices to " << c.out << "\n";
  return kExitOk;
}

int cmd_check_grad(const Common& c, std::size_t points, std::size_t trials, double step,
                   double tolerance, std::size_t entries, std::ostream& out) {
  const RunConfig cfg = resolve(c);
  if (points < 2) throw ConfigError("check-grad: --points must be >= 2");
  GradCheckOptions opts;
  opts.step = step;
  opts.max_entries_per_parameter = entries;
  std::string report = "trial,max_rel_error,checked,excluded\n";
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed(cfg.seed, t);
    ModelConfig mc = cfg.model;
    mc.seed = s;
    const Model model = init_model(mc);
    const GeneratedScene sample =
        random_labeled_cloud(points, mc.input_dims, mc.n_classes, s);
    Graph graph;
    const FeatureNodes nodes = model.build(graph, sample.cloud);
    build_losses(graph, nodes, sample.labels, cfg.loss, cfg.loss.alpha_initial);
    const GradReport r = check_gradients(graph, opts);
    worst = std::max(worst, r.max_rel_error);
    report += std::to_string(t) + "," + format_double(r.max_rel_error) + "," +
              std::to_string(r.total_checked) + "," + std::to_string(r.total_excluded) + "\n";
  }
  report += "max," + format_double(worst) + ",,\n";
  if (c.out.empty()) {
    out << report;
  } else {
    ensure_parent(c.out);
    write_file(c.out, report);
  }
  out << (worst < tolerance ? "PASS" : "FAIL") << " max relative error "
      << format_double(worst) << " (tolerance " << format_double(tolerance) << ")\n";
  return kExitOk;
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud instance segmentation via similarity group proposals"};
  app.require_subcommand(0, 1);
  app.set_help_all_flag("--help-all", "Expand all help");
  app.footer("Config keys: run with --help-config to list them.");
  bool help_config = false;
  app.add_flag("--help-config", help_config, "List every config key with its default");

  Common common;
  std::optional<std::size_t> scenes;
  std::optional<std::size_t> epochs;
  bool dbscan_gt = false;
  bool gt_as_prediction = false;
  std::vector<std::string> data;
  std::vector<std::string> preds;
  std::vector<std::string> gts;
  std::vector<double> ious;
  std::string model_dir;
  std::string checkpoint;
  std::string input;
  std::string labels;
  std::size_t points = 16;
  std::size_t trials = 20;
  std::size_t entries = 0;
  double step = 1e-4;
  double tolerance = 1e-3;

  auto* gen = app.add_subcommand("gen", "Write synthetic labeled scenes (SPC1) and a manifest");
  add_common(gen, common, true);
  gen->add_option("--scenes", scenes, "Number of scenes; overrides data.scenes");
  gen->add_flag("--dbscan-instances", dbscan_gt,
                "Derive instance labels by DBSCAN within each semantic class");

  auto* train = app.add_subcommand("train", "Train a model on SPC1 scenes");
  add_common(train, common, true);
  train->add_option("--data", data, "SPC1 files or directories")->required();
  train->add_option("--epochs", epochs, "Epochs; overrides train.max_epochs");

  auto* infer = app.add_subcommand("infer", "Segment one cloud, writing SIN1");
  add_common(infer, common, true);
  infer->add_option("--model", model_dir, "Directory holding model.cfg and model.sgw");
  infer->add_option("--checkpoint", checkpoint, "Weights file overriding model.sgw");
  infer->add_option("--input", input, "SPC1 cloud")->required();
  infer->add_flag("--gt-as-prediction", gt_as_prediction,
                  "Emit the input's own labels as the prediction; no model needed");

  auto* scene = app.add_subcommand("scene", "Segment a large scene block by block and stitch");
  add_common(scene, common, true);
  scene->add_option("--model", model_dir, "Directory holding model.cfg and model.sgw")
      ->required();
  scene->add_option("--checkpoint", checkpoint, "Weights file overriding model.sgw");
  scene->add_option("--input", input, "SPC1 scene")->required();

  auto* eval = app.add_subcommand("eval", "Score SIN1 predictions against SPC1 ground truth");
  add_common(eval, common, false);
  eval->add_option("--pred", preds, "SIN1 files or directories")->required();
  eval->add_option("--gt", gts, "SPC1 files or directories, paired in order")->required();
  eval->add_option("--iou", ious, "IoU thresholds")->delimiter(',');

  auto* ply = app.add_subcommand("export-ply", "Write a PLY colored by instance");
  add_common(ply, common, true);
  ply->add_option("--input", input, "SPC1 cloud")->required();
  ply->add_option("--labels", labels, "SIN1 instances; defaults to the cloud's own labels");

  auto* grad = app.add_subcommand("check-grad", "Compare analytic and numeric gradients");
  add_common(grad, common, false);
  grad->add_option("--points", points, "Points per random cloud");
  grad->add_option("--trials", trials, "Random instances");
  grad->add_option("--step", step, "Central difference step");
  grad->add_option("--tolerance", tolerance, "Relative error reported as PASS below this");
  grad->add_option("--entries", entries, "Max checked entries per parameter; 0 = all");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (help_config) {
    for (const std::string& key : RunConfig::keys()) out << RunConfig::describe(key) << "\n";
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(common, scenes, dbscan_gt, out);
    if (train->parsed()) return cmd_train(common, data, epochs, out);
    if (infer->parsed()) {
      return cmd_infer(common, model_dir, checkpoint, input, gt_as_prediction, out);
    }
    if (scene->parsed()) return cmd_scene(common, model_dir, checkpoint, input, out);
    if (eval->parsed()) return cmd_eval(common, preds, gts, ious, out);
    if (ply->parsed()) return cmd_export_ply(common, input, labels, out);
    if (grad->parsed()) {
      return cmd_check_grad(common, points, trials, step, tolerance, entries, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace simgroup::cli
