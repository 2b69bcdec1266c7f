#include "simgroup/model.hpp"

#include <cmath>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {
namespace {

struct LayerShape {
  std::string name;
  std::size_t fan_in;
  std::size_t fan_out;
};

std::vector<LayerShape> layer_shapes(const ModelConfig& c) {
  std::vector<LayerShape> layers;
  std::size_t width = c.input_dims;
  for (std::size_t k = 0; k < c.backbone_widths.size(); ++k) {
    layers.push_back({"backbone." + std::to_string(k), width, c.backbone_widths[k]});
    width = c.backbone_widths[k];
  }
  layers.push_back({"shared", 2 * width, c.shared_dim});
  layers.push_back({"sim", c.shared_dim, c.head_dim});
  layers.push_back({"cf", c.shared_dim, c.head_dim});
  layers.push_back({"sem", c.shared_dim, c.head_dim});
  layers.push_back({"logits", c.head_dim, c.n_classes});
  layers.push_back({"confidence", c.head_dim, 1});
  return layers;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dims < 3) throw ConfigError("model: input_dims must be >= 3");
  if (backbone_widths.empty()) throw ConfigError("model: backbone_widths must not be empty");
  for (std::size_t w : backbone_widths) {
    if (w < 1) throw ConfigError("model: backbone widths must be >= 1");
  }
  if (shared_dim < 1) throw ConfigError("model: shared_dim must be >= 1");
  if (head_dim < 2) throw ConfigError("model: head_dim must be >= 2");
  if (n_classes < 1) throw ConfigError("model: n_classes must be >= 1");
}

std::string ModelConfig::to_text() const {
  std::string out;
  out += "input_dims=" + std::to_string(input_dims) + "\n";
  out += "backbone_widths=" + join_sizes(backbone_widths) + "\n";
  out += "shared_dim=" + std::to_string(shared_dim) + "\n";
  out += "head_dim=" + std::to_string(head_dim) + "\n";
  out += "n_classes=" + std::to_string(n_classes) + "\n";
  out += "seed=" + std::to_string(seed) + "\n";
  return out;
}

ModelConfig ModelConfig::from_text(std::string_view text, std::string_view source) {
  ModelConfig c;
  for (const auto& [key, value] : parse_key_values(text, source)) {
    const std::string ctx = std::string(source) + ": " + key;
    auto as_size = [&](std::string_view v) {
      const long long x = parse_int(v, ctx);
      if (x < 0) throw ConfigError(ctx + " must be nonnegative");
      return static_cast<std::size_t>(x);
    };
    if (key == "input_dims") {
      c.input_dims = as_size(value);
    } else if (key == "backbone_widths") {
      c.backbone_widths.clear();
      for (long long w : parse_int_list(value, ctx)) {
        if (w < 0) throw ConfigError(ctx + " must be nonnegative");
        c.backbone_widths.push_back(static_cast<std::size_t>(w));
      }
    } else if (key == "shared_dim") {
      c.shared_dim = as_size(value);
    } else if (key == "head_dim") {
      c.head_dim = as_size(value);
    } else if (key == "n_classes") {
      c.n_classes = as_size(value);
    } else if (key == "seed") {
      c.seed = parse_u64(value, ctx);
    } else {
      throw ConfigError(std::string(source) + ": unknown model key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const auto& layer : layer_shapes(config_)) {
    params_.emplace_back(layer.name + ".weight", Matrix(layer.fan_in, layer.fan_out));
    params_.emplace_back(layer.name + ".bias", Matrix(1, layer.fan_out));
  }
}

void Model::set_parameters(std::vector<NamedMatrix> params) {
  if (params.size() != params_.size()) {
    throw DataError("model expects " + std::to_string(params_.size()) + " parameters, got " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != params_[i].first ||
        !params[i].second.same_shape(params_[i].second)) {
      throw DataError("parameter mismatch at '" + params[i].first + "' (" +
                      params[i].second.shape_string() + "), expected '" + params_[i].first +
                      "' (" + params_[i].second.shape_string() + ")");
    }
    if (!params[i].second.all_finite()) {
      throw DataError("parameter '" + params[i].first + "' has non-finite values");
    }
  }
  params_ = std::move(params);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : params_) n += m.size();
  return n;
}

FeatureNodes Model::build(Graph& graph, const PointCloud& cloud) const {
  if (cloud.dims() != config_.input_dims) {
    throw DataError("model expects " + std::to_string(config_.input_dims) +
                    "-dim points, cloud has " + std::to_string(cloud.dims()));
  }
  FeatureNodes out;
  for (const auto& [name, m] : params_) out.parameters.push_back(graph.parameter(name, m));

  std::size_t next = 0;
  auto affine = [&](NodeId x) {
    const NodeId w = out.parameters[next++];
    const NodeId b = out.parameters[next++];
    return graph.add_bias(graph.matmul(x, w), b);
  };

  NodeId x = graph.input(cloud.attrs, "points");
  for (std::size_t k = 0; k < config_.backbone_widths.size(); ++k) x = graph.relu(affine(x));
  const NodeId global = graph.max_rows(x);
  const NodeId joined = graph.concat_cols(x, graph.tile_rows(global, cloud.n_points()));
  out.features = graph.relu(affine(joined));
  out.sim_features = graph.relu(affine(out.features));
  out.cf_features = graph.relu(affine(out.features));
  out.sem_features = graph.relu(affine(out.features));
  out.logits = affine(out.sem_features);
  out.confidence = affine(out.cf_features);
  graph.label(out.sim_features, "F_SIM");
  graph.label(out.logits, "logits");
  graph.label(out.confidence, "confidence");
  return out;
}

FeatureBundle Model::forward(const PointCloud& cloud) const {
  Graph graph;
  const FeatureNodes nodes = build(graph, cloud);
  graph.set_root(nodes.confidence);
  graph.forward();
  FeatureBundle bundle;
  bundle.features = graph.value(nodes.features);
  bundle.sim_features = graph.value(nodes.sim_features);
  bundle.cf_features = graph.value(nodes.cf_features);
  bundle.sem_features = graph.value(nodes.sem_features);
  bundle.logits = graph.value(nodes.logits);
  bundle.confidence = graph.value(nodes.confidence);
  return bundle;
}

Model init_model(const ModelConfig& config) {
  Model model(config);
  Rng rng(config.seed);
  for (auto& [name, m] : model.mutable_parameters()) {
    if (name.ends_with(".bias")) continue;
    const double s = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.values()) v = uniform(rng, -s, s);
  }
  return model;
}

SimilarityMatrix similarity(const Matrix& sim_features) {
  return SimilarityMatrix{pairwise_distances(sim_features)};
}

SimilarityMatrix similarity(const FeatureBundle& bundle) {
  return similarity(bundle.sim_features);
}

std::vector<int> predicted_classes(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace simgroup
