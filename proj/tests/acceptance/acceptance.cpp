// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--only N` runs a single criterion; `--work DIR` sets the
// scratch directory for the end-to-end runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "simgroup/blockmerge.hpp"
#include "simgroup/datagen.hpp"
#include "simgroup/evaluate.hpp"
#include "simgroup/gradcheck.hpp"
#include "simgroup/grouping.hpp"
#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/rng.hpp"
#include "simgroup/trainer.hpp"
#include "simgroup_cli/cli.hpp"

using namespace simgroup;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-3;
constexpr double kGradStep = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr double kLossTolerance = 1e-9;
constexpr double kMinAp50 = 0.90;
constexpr double kMinSemanticAccuracy = 0.95;
constexpr std::size_t kMaxTrainSteps = 3000;
constexpr double kTrainSeconds = 600.0;
constexpr double kMinRandIndex = 0.99;
constexpr double kMetricTolerance = 1e-9;
constexpr double kBoxIouTolerance = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// 1. Gradient correctness.
Outcome gradients() {
  ModelConfig mc;
  mc.input_dims = 6;
  mc.backbone_widths = {16, 16};
  mc.shared_dim = 16;
  mc.head_dim = 4;  // N_f
  mc.n_classes = 3;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    mc.seed = derive_seed(1, trial);
    const Model model = init_model(mc);
    const GeneratedScene s = random_labeled_cloud(16, 6, 3, derive_seed(2, trial));
    Graph g;
    const LossNodes nodes = build_losses(g, model.build(g, s.cloud), s.labels, {}, 2.0);
    g.set_root(nodes.total);
    GradCheckOptions opt;
    opt.step = kGradStep;
    const GradReport r = check_gradients(g, opt);
    worst = std::max(worst, r.max_rel_error);
    checked += r.total_checked;
    excluded += r.total_excluded;
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTolerance && secs < kGradSeconds && checked > 0,
          "max_rel_error=" + fmt(worst) + " checked=" + std::to_string(checked) +
              " excluded=" + std::to_string(excluded) + " time=" + fmt(secs, 3) + "s"};
}

LabelSet labels_of(std::vector<int> semantic, std::vector<int> instance, int n_classes) {
  LabelSet l;
  l.semantic = std::move(semantic);
  l.instance = std::move(instance);
  l.n_classes = n_classes;
  return l;
}

// 2. Loss values on the hand-built examples.
Outcome loss_examples() {
  std::vector<std::pair<std::string, double>> errors;
  auto sim = [](const Matrix& f, const LabelSet& l) {
    Graph g;
    g.set_root(loss_sim(g, g.pairwise_distance(g.input(f)), build_pair_classes(l), 2.0, 1.0, 2.0));
    return g.forward()[0];
  };
  errors.push_back({"sim_zero", std::abs(sim(Matrix{{0}, {0}}, labels_of({0, 0}, {0, 0}, 1)))});
  errors.push_back(
      {"sim_2.4", std::abs(sim(Matrix{{0}, {0.4}}, labels_of({0, 0}, {0, 1}, 1)) - 2.4)});
  errors.push_back(
      {"sim_saturated", std::abs(sim(Matrix{{0}, {2.5}}, labels_of({0, 1}, {0, 1}, 2)))});

  const Matrix d = oracle::naive_distances(Matrix{{0}, {0.5}, {1.0}, {1.5}, {5.0}});
  const auto t = confidence_targets(
      d, build_groups(labels_of({0, 0, 0, 0, 0}, {1, 0, 0, 0, 2}, 1)), 0.6);
  errors.push_back({"cf_half", std::abs(t[1] - 0.5)});
  errors.push_back({"cf_equal", std::abs(t[4] - 1.0)});
  const auto tb = confidence_targets(oracle::naive_distances(Matrix{{0}, {5}}),
                                     build_groups(labels_of({0, 0}, {-1, 0}, 1)), 1.0);
  errors.push_back({"cf_background", std::abs(tb[0])});

  auto sem = [](const Matrix& logits, std::vector<int> labels, std::vector<double> w) {
    Graph g;
    g.set_root(loss_sem(g, g.input(logits), labels, w));
    return g.forward()[0];
  };
  errors.push_back({"sem_ln4", std::abs(sem(Matrix(2, 4, 0.0), {0, 3}, {1, 1, 1, 1}) -
                                        std::log(4.0))});
  errors.push_back(
      {"sem_2ln2", std::abs(sem(Matrix(2, 2, 0.0), {0, 0}, {2, 1}) - 2.0 * std::log(2.0))});

  const std::vector<LabelSet> freq = {
      labels_of({0, 0, 1, 1, 1, 2, 2, 2, 2, 2}, {0, 0, 1, 1, 1, 2, 2, 2, 2, 2}, 3)};
  const auto w = median_frequency_weights(freq, 3);
  errors.push_back({"weights", std::max({std::abs(w[0] - 1.5), std::abs(w[1] - 1.0),
                                          std::abs(w[2] - 0.6)})});

  const LossConfig lc;
  errors.push_back({"alpha", std::abs(alpha_at_epoch(0, lc) - 2.0) +
                                 std::abs(alpha_at_epoch(5, lc) - 4.0) +
                                 std::abs(alpha_at_epoch(14, lc) - 6.0)});

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : errors) {
    if (!(e <= worst)) {
      worst = e;
      worst_name = name;
    }
  }
  return {worst <= kLossTolerance, std::to_string(errors.size()) + " examples, max_abs_error=" +
                                       fmt(worst) + (worst_name.empty() ? "" : " (" + worst_name + ")")};
}

// 3. Learning benchmark.
struct BenchmarkRun {
  double ap50 = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
  std::size_t steps = 0;
};

BenchmarkRun train_and_score(const std::vector<Sample>& train, const std::vector<Sample>& test,
                             std::size_t warmup_epochs) {
  ModelConfig mc;  // defaults: 6 dims, 3 classes
  TrainConfig tc;
  tc.max_epochs = kMaxTrainSteps * tc.batch_size / train.size();
  tc.max_steps = kMaxTrainSteps;
  tc.warmup_epochs = warmup_epochs;
  LossConfig lc;
  std::vector<LabelSet> labels;
  for (const Sample& s : train) labels.push_back(s.labels);
  lc.class_weights = median_frequency_weights(labels, mc.n_classes);

  Model model = init_model(mc);
  const auto t0 = std::chrono::steady_clock::now();
  const auto log = fit(model, train, tc, lc);
  BenchmarkRun run;
  run.seconds = seconds_since(t0);
  run.steps = log.empty() ? 0 : log.back().step;

  const GroupingConfig gc;
  std::vector<InstanceResult> preds;
  std::vector<std::vector<int>> semantic;
  std::vector<LabelSet> gts;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const Prediction p = infer_cloud(model, test[k].cloud, gc, 0);
    preds.push_back(p.instances);
    semantic.push_back(p.semantic);
    gts.push_back(test[k].labels);
  }
  run.ap50 = instance_ap_summary(preds, gts, mc.n_classes, 0.5).mean;
  run.accuracy = semantic_miou(semantic, gts, mc.n_classes).accuracy;
  return run;
}

Outcome learning_benchmark() {
  // Same scenes as `simgroup gen --seed 0 --scenes 220`: scene i uses
  // derive_seed(0, i); the first 200 train, the last 20 are held out.
  const SceneSpec spec;
  std::vector<Sample> train;
  std::vector<Sample> test;
  for (std::uint64_t i = 0; i < 220; ++i) {
    GeneratedScene s = generate_scene(spec, derive_seed(0, i));
    (i < 200 ? train : test).push_back({std::move(s.cloud), std::move(s.labels)});
  }
  const BenchmarkRun main = train_and_score(train, test, TrainConfig{}.warmup_epochs);
  std::cout << "  learning: AP50=" << fmt(main.ap50) << " accuracy=" << fmt(main.accuracy)
            << " steps=" << main.steps << " time=" << fmt(main.seconds, 4) << "s" << std::endl;
  const BenchmarkRun ablation = train_and_score(train, test, 0);
  std::cout << "  no-warmup ablation: AP50=" << fmt(ablation.ap50)
            << " accuracy=" << fmt(ablation.accuracy) << " time=" << fmt(ablation.seconds, 4)
            << "s" << std::endl;
  const bool pass = main.ap50 >= kMinAp50 && main.accuracy >= kMinSemanticAccuracy &&
                    main.steps <= kMaxTrainSteps && main.seconds < kTrainSeconds &&
                    ablation.steps > 0;
  return {pass, "AP50=" + fmt(main.ap50) + " accuracy=" + fmt(main.accuracy) +
                    " steps=" + std::to_string(main.steps) + " train_time=" +
                    fmt(main.seconds, 4) + "s; no-warmup AP50=" + fmt(ablation.ap50) +
                    " (delta " + fmt(ablation.ap50 - main.ap50) + ", not gated)"};
}

// 4. GroupMerging against exhaustive NMS.
Outcome group_merging() {
  std::size_t mismatches = 0;
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(derive_seed(4, seed));
    const std::size_t n_points = 1 + uniform_index(rng, 12);
    const std::size_t n_props = 1 + uniform_index(rng, 12);
    GroupProposalSet set;
    for (std::size_t k = 0; k < n_props; ++k) {
      Proposal p;
      for (std::size_t i = 0; i < n_points; ++i) {
        if (uniform01(rng) < 0.5) p.members.push_back(i);
      }
      if (p.members.empty()) p.members.push_back(uniform_index(rng, n_points));
      p.seed_point = uniform_index(rng, n_points);
      p.confidence = uniform01(rng);
      set.proposals.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < n_points; ++i) {
      set.point_classes.push_back(static_cast<int>(uniform_index(rng, 3)));
    }
    GroupingConfig gc;
    gc.th_m1 = uniform(rng, 0.1, 0.9);
    const auto survivors = nms_survivors(set.proposals, gc.th_m1);
    std::vector<std::vector<std::size_t>> got;
    for (std::size_t s : survivors) got.push_back(set.proposals[s].members);
    if (got != oracle::nms(set.proposals, gc.th_m1)) ++mismatches;
    for (std::size_t a = 0; a < got.size(); ++a) {
      for (std::size_t b = a + 1; b < got.size(); ++b) {
        if (set_iou(got[a], got[b]) > gc.th_m1) ++violations;
      }
    }
    const InstanceResult r = group_merge(set, gc, seed);
    if (r.point_instance.size() != n_points) ++violations;
  }
  return {mismatches == 0 && violations == 0,
          "500 sets, survivor mismatches=" + std::to_string(mismatches) +
              " iou_violations=" + std::to_string(violations)};
}

// 5. BlockMerging with ground-truth block labels.
Outcome block_merging_consistency() {
  SceneSpec spec;
  spec.room = {4.0, 4.0, 1.0};
  spec.n_points = 2048;
  spec.instances_min = 6;
  spec.instances_max = 12;
  double worst = 1.0;
  std::size_t blocks = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const GeneratedScene s = generate_scene(spec, derive_seed(5, i));
    const BlockPartition part = partition_scene(s.cloud, 1.0, 0.5);
    blocks += part.blocks.size();
    BlockLabels pl;
    for (const Block& b : part.blocks) {
      std::map<int, int> local;
      std::vector<int> labels;
      for (std::size_t p : b.points) {
        const auto [it, fresh] =
            local.emplace(s.labels.instance[p], static_cast<int>(local.size()));
        labels.push_back(it->second);
      }
      pl.push_back(std::move(labels));
    }
    VoxelGrid grid(SceneBounds::of(s.cloud));
    const std::vector<int> merged = block_merging(grid, s.cloud, part, pl, SceneConfig{}.mode_min);
    worst = std::min(worst, oracle::rand_index(merged, s.labels.instance));
  }
  return {worst >= kMinRandIndex, "50 scenes, " + std::to_string(blocks) +
                                      " blocks, min Rand index=" + fmt(worst, 6)};
}

// 6. Similarity-matrix metric properties.
Outcome metric_properties() {
  ModelConfig mc;
  mc.backbone_widths = {32, 32};
  mc.shared_dim = 32;
  mc.head_dim = 8;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    mc.seed = derive_seed(6, k);
    const Model model = init_model(mc);
    const GeneratedScene s = random_labeled_cloud(32, 6, 3, derive_seed(7, k));
    const SimilarityMatrix m = similarity(model.forward(s.cloud));
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(m(i, i)));
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
        for (std::size_t l = 0; l < n; ++l) {
          worst = std::max(worst, m(i, l) - m(i, j) - m(j, l));
        }
      }
    }
  }
  std::size_t inexact = 0;
  mc.seed = 99;
  const Model model = init_model(mc);
  for (std::uint64_t k = 0; k < 20; ++k) {
    const GeneratedScene s = random_labeled_cloud(40, 6, 3, derive_seed(8, k));
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(9, k));
    shuffle(std::span<std::size_t>(perm), rng);
    const FeatureBundle a = model.forward(s.cloud);
    const FeatureBundle b = model.forward(s.cloud.subset(perm));
    const SimilarityMatrix sa = similarity(a);
    const SimilarityMatrix sb = similarity(b);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t c = 0; c < a.sim_features.cols(); ++c) {
        if (b.sim_features(i, c) != a.sim_features(perm[i], c)) ++inexact;
      }
      for (std::size_t c = 0; c < a.logits.cols(); ++c) {
        if (b.logits(i, c) != a.logits(perm[i], c)) ++inexact;
      }
      if (b.confidence(i, 0) != a.confidence(perm[i], 0)) ++inexact;
      for (std::size_t j = 0; j < perm.size(); ++j) {
        if (sb(i, j) != sa(perm[i], perm[j])) ++inexact;
      }
    }
  }
  return {worst <= kMetricTolerance && inexact == 0,
          "100 passes, max metric violation=" + fmt(worst) +
              "; 20 permutations, inexact entries=" + std::to_string(inexact)};
}

// 7. Evaluation against brute-force PR enumeration.
Outcome evaluation() {
  std::size_t mismatches = 0;
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(derive_seed(10, seed));
    std::vector<LabelSet> gts;
    std::vector<InstanceResult> preds;
    std::vector<BoxDetection> gt_boxes;
    std::vector<BoxDetection> pred_boxes;
    const std::size_t samples = 1 + uniform_index(rng, 3);
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t n = 6 + uniform_index(rng, 12);
      const std::size_t n_gt = 1 + uniform_index(rng, 3);
      std::vector<int> gt_class(n_gt);
      for (int& c : gt_class) c = static_cast<int>(uniform_index(rng, 2));
      LabelSet l;
      l.n_classes = 2;
      for (std::size_t p = 0; p < n; ++p) {
        const int id = static_cast<int>(uniform_index(rng, n_gt + 1)) - 1;
        l.instance.push_back(id);
        l.semantic.push_back(id >= 0 ? gt_class[static_cast<std::size_t>(id)] : 0);
      }
      gts.push_back(l);
      InstanceResult r;
      const std::size_t n_pred = uniform_index(rng, 4);
      for (std::size_t p = 0; p < n; ++p) {
        r.point_instance.push_back(static_cast<int>(uniform_index(rng, n_pred + 1)) - 1);
      }
      r.instance_count.assign(n_pred, 0);
      for (std::size_t k = 0; k < n_pred; ++k) {
        r.instance_class.push_back(static_cast<int>(uniform_index(rng, 2)));
        r.instance_confidence.push_back(static_cast<double>(uniform_index(rng, 4)) / 4.0);
      }
      preds.push_back(r);

      const std::size_t n_gt_boxes = 1 + uniform_index(rng, 3);
      for (std::size_t k = 0; k < n_gt_boxes; ++k) {
        const double x = uniform(rng, 0, 2);
        const double y = uniform(rng, 0, 2);
        gt_boxes.push_back({s, Box{{x, y, 0}, {x + 1, y + 1, 1}},
                            static_cast<int>(uniform_index(rng, 2)), 1.0});
      }
      const std::size_t n_pred_boxes = uniform_index(rng, 5);
      for (std::size_t k = 0; k < n_pred_boxes; ++k) {
        const double x = uniform(rng, 0, 2);
        const double y = uniform(rng, 0, 2);
        pred_boxes.push_back({s, Box{{x, y, 0}, {x + 1, y + uniform(rng, 0.5, 1.5), 1}},
                              static_cast<int>(uniform_index(rng, 2)),
                              static_cast<double>(uniform_index(rng, 3)) / 3.0});
      }
    }
    for (int cls = 0; cls < 2; ++cls) {
      for (double t : {0.25, 0.5}) {
        ++cases;
        if (instance_ap(preds, gts, cls, t) != oracle::instance_ap(preds, gts, cls, t)) {
          ++mismatches;
        }
        if (detection_ap(pred_boxes, gt_boxes, cls, t) !=
            oracle::detection_ap(pred_boxes, gt_boxes, cls, t)) {
          ++mismatches;
        }
      }
    }
  }

  double worst = std::abs(box_iou(Box{{0, 0, 0}, {1, 1, 1}}, Box{{0.5, 0, 0}, {1.5, 1, 1}}) -
                          1.0 / 3.0);
  Rng rng(11);
  for (int k = 0; k < 99; ++k) {
    Box a;
    Box b;
    for (int ax = 0; ax < 3; ++ax) {
      a.min[ax] = uniform(rng, 0, 1);
      a.max[ax] = a.min[ax] + uniform(rng, 0.1, 1);
      b.min[ax] = uniform(rng, 0, 1);
      b.max[ax] = b.min[ax] + uniform(rng, 0.1, 1);
    }
    worst = std::max(worst, std::abs(box_iou(a, b) - oracle::box_volume_iou(a, b)));
  }
  return {mismatches == 0 && worst <= kBoxIouTolerance,
          std::to_string(cases) + " AP cases x2, mismatches=" + std::to_string(mismatches) +
              "; 100 box pairs, max IoU error=" + fmt(worst)};
}

// 8. DBSCAN against the transitive-closure reference.
Outcome dbscan_oracle() {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(12, seed));
    const std::size_t n = 1 + uniform_index(rng, 30);
    std::vector<std::array<double, 3>> pts(n);
    Matrix m(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        pts[i][k] = uniform(rng, 0, k == 2 ? 0.2 : 1.0);
        m(i, static_cast<std::size_t>(k)) = pts[i][k];
      }
    }
    DbscanParams params;
    params.eps = uniform(rng, 0.05, 0.35);
    params.min_pts = 1 + uniform_index(rng, 5);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const std::vector<int> got = dbscan(PointCloud(m), all, params);
    if (!oracle::same_partition(got, oracle::dbscan(pts, params.eps, params.min_pts))) {
      ++mismatches;
    }
  }
  return {mismatches == 0, "100 sets, partition mismatches=" + std::to_string(mismatches)};
}

// 9. End-to-end determinism through the command line.
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

bool run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "simgroup");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code == 0;
}

Outcome determinism(const fs::path& work) {
  std::vector<std::vector<std::string>> artifacts(2);
  const std::vector<std::string> files = {"data/manifest.txt", "data/scene_0000.spc",
                                          "data/scene_0007.spc", "model/model.sgw",
                                          "model/epoch_3.sgw",  "model/train_log.csv",
                                          "model/train.cfg",   "model/model.cfg",
                                          "pred.sin",          "pred.sin.sem",
                                          "eval.csv"};
  for (int run = 0; run < 2; ++run) {
    const fs::path d = work / ("determinism_" + std::to_string(run));
    fs::remove_all(d);
    fs::create_directories(d);
    const bool ok =
        run_cli({"gen", "--seed", "5", "--scenes", "8", "--out", (d / "data").string()}) &&
        run_cli({"train", "--seed", "5", "--epochs", "3", "--set", "train.checkpoint_every=3",
                 "--data", (d / "data").string(), "--out", (d / "model").string()}) &&
        run_cli({"infer", "--seed", "5", "--model", (d / "model").string(), "--input",
                 (d / "data" / "scene_0007.spc").string(), "--out", (d / "pred.sin").string()}) &&
        run_cli({"eval", "--pred", (d / "pred.sin").string(), "--gt",
                 (d / "data" / "scene_0007.spc").string(), "--out", (d / "eval.csv").string()});
    if (!ok) return {false, "pipeline run " + std::to_string(run) + " failed"};
    for (const std::string& f : files) artifacts[static_cast<std::size_t>(run)].push_back(slurp(d / f));
  }
  std::size_t differing = 0;
  std::size_t empty = 0;
  for (std::size_t k = 0; k < files.size(); ++k) {
    if (artifacts[0][k] != artifacts[1][k]) ++differing;
    if (artifacts[0][k].empty()) ++empty;
  }
  return {differing == 0 && empty == 0, std::to_string(files.size()) + " artifacts, differing=" +
                                            std::to_string(differing) +
                                            " empty=" + std::to_string(empty)};
}

}  // namespace

int main(int argc, char** argv) {
  simgroup::cli::tune_allocator();
  int only = 0;
  fs::path work = fs::temp_directory_path() / "simgroup_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: simgroup_acceptance [--only N] [--work DIR]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"loss formula oracle", loss_examples},
      {"learning benchmark", learning_benchmark},
      {"group merging oracle", group_merging},
      {"block merging consistency", block_merging_consistency},
      {"similarity metric properties", metric_properties},
      {"evaluation oracle", evaluation},
      {"dbscan oracle", dbscan_oracle},
      {"determinism", [&] { return determinism(work); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (only != 0 && only != id) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
