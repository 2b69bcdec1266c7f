#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simgroup/matrix.hpp"

namespace simgroup {

using NodeId = std::size_t;

enum class OpKind {
  kInput,
  kParameter,
  kMatmul,
  kAddBias,
  kAdd,
  kSub,
  kHadamard,
  kScale,
  kAddScalar,
  kRelu,
  kSquare,
  kMaxRows,
  kTileRows,
  kConcatCols,
  kSum,
  kMean,
  kPairwiseDistance,
  kSoftmaxCrossEntropy,
  kPairHinge,
};

std::string_view op_name(OpKind op);

// Row-to-row Euclidean distances via ||a||^2 + ||b||^2 - 2 a.b, with negative
// round-off clamped to zero and an exactly zero diagonal.
Matrix pairwise_distances(const Matrix& x);

// A reverse-mode differentiation tape over dense matrices.
//
// Nodes are appended in construction order, which is a valid topological
// order. Builders only record; values are computed lazily by forward().
// Leaf values may be replaced with set_value(), which invalidates everything
// downstream.
//
// Subgradient conventions: relu and hinge terms have derivative 0 at the
// kink, max_rows routes to the lowest row index on ties, and the pairwise
// distance has derivative 0 where the distance is 0.
class Graph {
 public:
  NodeId input(Matrix value, std::string name = {});
  NodeId parameter(std::string name, Matrix value);

  NodeId matmul(NodeId a, NodeId b);
  // x (n x c) plus a 1 x c row vector added to every row.
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId add_scalar(NodeId a, double s);
  NodeId relu(NodeId a);
  NodeId square(NodeId a);
  // Columnwise max over rows: n x c -> 1 x c.
  NodeId max_rows(NodeId a);
  // Repeats a 1 x c row n times.
  NodeId tile_rows(NodeId a, std::size_t n);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // Euclidean distances between rows: n x f -> n x n.
  NodeId pairwise_distance(NodeId a);
  // Mean over rows of weight[label] * -log softmax(row)[label].
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                               std::vector<double> class_weights);

  // Sum over all ordered pairs of the three-way pair loss on a distance
  // matrix: d for class 1, alpha * max(0, k1 - d) for class 2 and
  // max(0, k2 - d) for class 3. `pair_classes` is row-major n x n.
  NodeId pair_hinge(NodeId distances, std::vector<std::uint8_t> pair_classes, double alpha,
                    double k1, double k2);

  void set_root(NodeId id);
  NodeId root() const;

  void set_value(NodeId leaf, Matrix value);
  void label(NodeId id, std::string name);

  const Matrix& forward();
  // Requires a scalar root. Parameter and input gradients accumulate across
  // calls until zero_grad().
  void backward();
  void zero_grad();

  const Matrix& value(NodeId id) const;
  const Matrix& grad(NodeId id) const;
  OpKind op(NodeId id) const { return nodes_.at(id).op; }
  const std::string& name(NodeId id) const { return nodes_.at(id).name; }
  std::string describe(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& parameters() const { return parameters_; }
  std::optional<NodeId> find_parameter(std::string_view name) const;

  // Hash of every branch decision taken by kinked ops (relu masks, max_rows
  // argmaxes, zero distances) in the last forward pass.
  std::uint64_t kink_signature() const;
  // True if any kinked op had an input exactly at its kink.
  bool at_kink() const;
  // First node whose value holds a NaN or Inf, if any.
  std::optional<NodeId> first_non_finite() const;

 private:
  struct Node {
    OpKind op = OpKind::kInput;
    std::vector<NodeId> inputs;
    Matrix value;
    Matrix grad;
    std::string name;
    double scalar = 0.0;
    std::size_t count = 0;
    std::vector<int> labels;
    std::vector<double> class_weights;
    std::vector<std::uint8_t> pair_classes;
    double k1 = 0.0;
    double k2 = 0.0;
    std::vector<std::size_t> argmax;
    Matrix cache;
    std::uint64_t kink_hash = 0;
    bool kink_hit = false;
  };

  NodeId push(OpKind op, std::vector<NodeId> inputs);
  void check_id(NodeId id) const;
  void evaluate(NodeId id);
  void propagate(NodeId id);

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
  std::optional<NodeId> root_;
  std::size_t evaluated_ = 0;
};

}  // namespace simgroup
