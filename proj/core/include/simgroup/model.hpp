#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "simgroup/checkpoint.hpp"
#include "simgroup/graph.hpp"
#include "simgroup/matrix.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

struct ModelConfig {
  std::size_t input_dims = 6;
  std::vector<std::size_t> backbone_widths = {64, 64, 128};
  std::size_t shared_dim = 128;
  std::size_t head_dim = 32;
  std::size_t n_classes = 3;
  std::uint64_t seed = 0;

  void validate() const;
  // `key=value` lines, the model.cfg format.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text, std::string_view source);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Forward outputs for one cloud.
struct FeatureBundle {
  Matrix features;      // F, N_p x N_F
  Matrix sim_features;  // F_SIM, N_p x N_f
  Matrix cf_features;   // F_CF
  Matrix sem_features;  // F_SEM
  Matrix logits;        // N_p x N_C
  Matrix confidence;    // N_p x 1, unclamped
};

// Node ids of a forward pass recorded into a Graph.
struct FeatureNodes {
  NodeId features = 0;
  NodeId sim_features = 0;
  NodeId cf_features = 0;
  NodeId sem_features = 0;
  NodeId logits = 0;
  NodeId confidence = 0;
  std::vector<NodeId> parameters;  // same order as Model::parameters()
};

// Pairwise L2 distances between F_SIM rows.
struct SimilarityMatrix {
  Matrix distances;

  std::size_t size() const { return distances.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return distances(i, j); }
};

// Per-point MLP, global max-pool, concatenation and a shared layer producing
// F, then one affine+ReLU layer per head. The semantic logits and the
// confidence are affine maps of F_SEM and F_CF.
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const std::vector<NamedMatrix>& parameters() const { return params_; }
  std::vector<NamedMatrix>& mutable_parameters() { return params_; }
  // Replaces parameters; names and shapes must match exactly.
  void set_parameters(std::vector<NamedMatrix> params);
  std::size_t parameter_count() const;

  FeatureNodes build(Graph& graph, const PointCloud& cloud) const;
  FeatureBundle forward(const PointCloud& cloud) const;

 private:
  ModelConfig config_;
  std::vector<NamedMatrix> params_;
};

Model init_model(const ModelConfig& config);

SimilarityMatrix similarity(const FeatureBundle& bundle);
SimilarityMatrix similarity(const Matrix& sim_features);

// Argmax over logits rows, ties to the lowest class id.
std::vector<int> predicted_classes(const Matrix& logits);

}  // namespace simgroup
