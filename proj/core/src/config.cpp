#include "simgroup/config.hpp"

#include <functional>
#include <map>

#include "simgroup/error.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {
namespace {

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, const std::string&)> set;
};

std::size_t to_size(std::string_view v, const std::string& ctx) {
  const long long x = parse_int(v, ctx);
  if (x < 0) throw ConfigError(ctx + ": must be nonnegative");
  return static_cast<std::size_t>(x);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

template <typename Section>
Field real(std::string key, std::string help, Section RunConfig::*section, double Section::*m) {
  return {std::move(key), std::move(help),
          [=](const RunConfig& c) { return format_double(c.*section.*m); },
          [=](RunConfig& c, std::string_view v, const std::string& ctx) {
            c.*section.*m = parse_double(v, ctx);
          }};
}

template <typename Section>
Field count(std::string key, std::string help, Section RunConfig::*section,
            std::size_t Section::*m) {
  return {std::move(key), std::move(help),
          [=](const RunConfig& c) { return std::to_string(c.*section.*m); },
          [=](RunConfig& c, std::string_view v, const std::string& ctx) {
            c.*section.*m = to_size(v, ctx);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed", "run seed for model init, shuffling, data and tie-breaks (0)",
                 [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   c.seed = parse_u64(v, ctx);
                   c.model.seed = c.seed;
                   c.train.seed = c.seed;
                 }});

    f.push_back(count("model.input_dims", "attributes per point (6)", &RunConfig::model,
                      &ModelConfig::input_dims));
    f.push_back({"model.backbone_widths", "per-point MLP widths (64,64,128)",
                 [](const RunConfig& c) { return join(c.model.backbone_widths); },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   c.model.backbone_widths.clear();
                   for (long long w : parse_int_list(v, ctx)) {
                     if (w < 0) throw ConfigError(ctx + ": must be nonnegative");
                     c.model.backbone_widths.push_back(static_cast<std::size_t>(w));
                   }
                 }});
    f.push_back(count("model.shared_dim", "width of the shared feature F (128)",
                      &RunConfig::model, &ModelConfig::shared_dim));
    f.push_back(count("model.head_dim", "width of each head; N_f for F_SIM (32)",
                      &RunConfig::model, &ModelConfig::head_dim));
    f.push_back(count("model.n_classes", "semantic classes (3)", &RunConfig::model,
                      &ModelConfig::n_classes));

    f.push_back(real("loss.k1", "margin for same-class pairs (1)", &RunConfig::loss,
                     &LossConfig::k1));
    f.push_back(real("loss.k2", "margin for different-class pairs (2)", &RunConfig::loss,
                     &LossConfig::k2));
    f.push_back(real("loss.alpha_initial", "initial same-class weight alpha (2)",
                     &RunConfig::loss, &LossConfig::alpha_initial));
    f.push_back(real("loss.alpha_step", "alpha increment (2)", &RunConfig::loss,
                     &LossConfig::alpha_step));
    f.push_back(count("loss.alpha_every_epochs", "epochs between alpha increments (5)",
                      &RunConfig::loss, &LossConfig::alpha_every_epochs));
    f.push_back({"loss.class_weights",
                 "semantic class weights, comma separated; empty means median frequency "
                 "balancing at train time ()",
                 [](const RunConfig& c) { return join(c.loss.class_weights); },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   c.loss.class_weights =
                       trim(v).empty() ? std::vector<double>{} : parse_double_list(v, ctx);
                 }});
    f.push_back(real("loss.sim_norm", "divisor of the pair-loss sum; 0 means N_p (0)",
                     &RunConfig::loss, &LossConfig::sim_norm));
    f.push_back(real("loss.cf_th_s", "threshold for confidence targets; 0 means k1 (0)",
                     &RunConfig::loss, &LossConfig::cf_th_s));

    f.push_back(real("train.lr_initial", "initial learning rate (0.0005)", &RunConfig::train,
                     &TrainConfig::lr_initial));
    f.push_back(real("train.adam_beta1", "ADAM beta1 (0.9)", &RunConfig::train,
                     &TrainConfig::adam_beta1));
    f.push_back(real("train.adam_beta2", "ADAM beta2 (0.999)", &RunConfig::train,
                     &TrainConfig::adam_beta2));
    f.push_back(real("train.adam_eps", "ADAM epsilon (1e-08)", &RunConfig::train,
                     &TrainConfig::adam_eps));
    f.push_back(count("train.batch_size", "samples per step (4)", &RunConfig::train,
                      &TrainConfig::batch_size));
    f.push_back(count("train.lr_halve_every_epochs", "epochs between learning-rate halvings (20)",
                      &RunConfig::train, &TrainConfig::lr_halve_every_epochs));
    f.push_back(count("train.warmup_epochs", "leading epochs trained on the pair loss only (5)",
                      &RunConfig::train, &TrainConfig::warmup_epochs));
    f.push_back(count("train.max_epochs", "epochs (60)", &RunConfig::train,
                      &TrainConfig::max_epochs));
    f.push_back(count("train.max_steps", "step cap; 0 means none (0)", &RunConfig::train,
                      &TrainConfig::max_steps));
    f.push_back(count("train.checkpoint_every", "epochs between checkpoints; 0 disables (0)",
                      &RunConfig::train, &TrainConfig::checkpoint_every));

    f.push_back(real("group.th_c", "minimum proposal confidence (0.1)", &RunConfig::grouping,
                     &GroupingConfig::th_c));
    f.push_back(real("group.th_m1", "NMS IoU threshold (0.6)", &RunConfig::grouping,
                     &GroupingConfig::th_m1));
    f.push_back(count("group.th_m2", "minimum proposal cardinality (20)", &RunConfig::grouping,
                      &GroupingConfig::th_m2));
    f.push_back({"group.th_s_mode", "fixed or histogram (histogram)",
                 [](const RunConfig& c) {
                   return std::string(c.grouping.th_s_mode == ThresholdMode::kFixed ? "fixed"
                                                                                    : "histogram");
                 },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   const std::string_view t = trim(v);
                   if (t == "fixed") {
                     c.grouping.th_s_mode = ThresholdMode::kFixed;
                   } else if (t == "histogram") {
                     c.grouping.th_s_mode = ThresholdMode::kHistogram;
                   } else {
                     throw ConfigError(ctx + ": expected 'fixed' or 'histogram', got '" +
                                       std::string(t) + "'");
                   }
                 }});
    f.push_back(real("group.th_s_fixed", "Th_S in fixed mode (1)", &RunConfig::grouping,
                     &GroupingConfig::th_s_fixed));
    f.push_back(real("group.th_s_min", "lower clamp of estimated Th_S (0.1)",
                     &RunConfig::grouping, &GroupingConfig::th_s_min));
    f.push_back(real("group.th_s_max", "exclusive upper clamp of estimated Th_S (1)",
                     &RunConfig::grouping, &GroupingConfig::th_s_max));
    f.push_back(real("group.histogram_max", "upper end of the distance histogram (2)",
                     &RunConfig::grouping, &GroupingConfig::histogram_max));
    f.push_back(count("group.histogram_bins", "distance histogram bins (64)",
                      &RunConfig::grouping, &GroupingConfig::histogram_bins));
    f.push_back(real("group.histogram_min_separability",
                     "below this Otsu separability a class uses th_s_fixed (0.75)",
                     &RunConfig::grouping, &GroupingConfig::histogram_min_separability));

    f.push_back(real("scene.block_size", "block edge in meters (1)", &RunConfig::scene,
                     &SceneConfig::block_size));
    f.push_back(real("scene.stride", "block stride in meters (0.5)", &RunConfig::scene,
                     &SceneConfig::stride));
    f.push_back({"scene.voxel_resolution", "voxel grid cells per axis (400)",
                 [](const RunConfig& c) { return std::to_string(c.scene.voxel_resolution); },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   const std::size_t r = to_size(v, ctx);
                   if (r > 1u << 20) throw ConfigError(ctx + ": resolution too large");
                   c.scene.voxel_resolution = static_cast<std::uint32_t>(r);
                 }});
    f.push_back(count("scene.mode_min", "minimum mode count to reuse an id (5)",
                      &RunConfig::scene, &SceneConfig::mode_min));

    f.push_back({"data.scenes", "scenes written by gen (200)",
                 [](const RunConfig& c) { return std::to_string(c.data_scenes); },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   c.data_scenes = to_size(v, ctx);
                 }});
    f.push_back(count("data.n_points", "points per scene (512)", &RunConfig::data,
                      &SceneSpec::n_points));
    f.push_back(count("data.n_classes", "semantic classes (3)", &RunConfig::data,
                      &SceneSpec::n_classes));
    f.push_back(count("data.instances_min", "fewest instances per scene (4)", &RunConfig::data,
                      &SceneSpec::instances_min));
    f.push_back(count("data.instances_max", "most instances per scene (8)", &RunConfig::data,
                      &SceneSpec::instances_max));
    f.push_back({"data.room", "room extents x,y,z in meters (2,2,1)",
                 [](const RunConfig& c) {
                   return join(std::vector<double>(c.data.room.begin(), c.data.room.end()));
                 },
                 [](RunConfig& c, std::string_view v, const std::string& ctx) {
                   const auto r = parse_double_list(v, ctx);
                   if (r.size() != 3) throw ConfigError(ctx + ": expected three values");
                   c.data.room = {r[0], r[1], r[2]};
                 }});
    f.push_back(real("data.min_separation", "minimum center distance in meters (0.6)",
                     &RunConfig::data, &SceneSpec::min_separation));
    f.push_back(real("data.noise_sigma", "position noise sigma (0.005)", &RunConfig::data,
                     &SceneSpec::noise_sigma));
    f.push_back(real("data.color_sigma", "color noise sigma (0.03)", &RunConfig::data,
                     &SceneSpec::color_sigma));
    f.push_back(real("data.background_fraction", "share of background scatter points (0)",
                     &RunConfig::data, &SceneSpec::background_fraction));

    f.push_back(real("dbscan.eps", "neighborhood radius in meters (0.05)", &RunConfig::dbscan,
                     &DbscanParams::eps));
    f.push_back(count("dbscan.min_pts", "core point threshold (4)", &RunConfig::dbscan,
                      &DbscanParams::min_pts));
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  train.validate();
  grouping.validate();
  scene.validate();
  data.validate();
  dbscan.validate();
  if (model.n_classes != data.n_classes) {
    throw ConfigError("model.n_classes (" + std::to_string(model.n_classes) +
                      ") differs from data.n_classes (" + std::to_string(data.n_classes) + ")");
  }
  if (!loss.class_weights.empty() && loss.class_weights.size() != model.n_classes) {
    throw ConfigError("loss.class_weights needs one weight per class");
  }
}

void RunConfig::set(std::string_view key, std::string_view value, std::string_view source) {
  const Field* f = find_field(trim(key));
  if (f == nullptr) {
    throw ConfigError(std::string(source) + ": unknown key '" + std::string(trim(key)) + "'");
  }
  const std::string ctx = std::string(source) + ": " + f->key;
  try {
    f->set(*this, trim(value), ctx);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::from_text(std::string_view text, std::string_view source) {
  RunConfig c;
  std::vector<std::pair<std::string, std::string>> entries;
  try {
    entries = parse_key_values(text, source);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [key, value] : entries) c.set(key, value, source);
  return c;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

std::string RunConfig::describe(std::string_view key) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
  return f->key + ": " + f->help;
}

}  // namespace simgroup
