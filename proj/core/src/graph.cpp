#include "simgroup/graph.hpp"

#include <algorithm>
#include <cmath>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"

namespace simgroup {
namespace {

void accumulate(Matrix& dst, const Matrix& src, double s = 1.0) {
  auto d = dst.values();
  auto v = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * v[i];
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ v); }

}  // namespace

Matrix pairwise_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  const Matrix gram = matmul_nt(x, x);
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sq = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      const double dist = sq > 0.0 ? std::sqrt(sq) : 0.0;
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kHadamard: return "hadamard";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kSquare: return "square";
    case OpKind::kMaxRows: return "max_rows";
    case OpKind::kTileRows: return "tile_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kPairwiseDistance: return "pairwise_distance";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::kPairHinge: return "pair_hinge";
  }
  return "unknown";
}

NodeId Graph::push(OpKind op, std::vector<NodeId> inputs) {
  for (NodeId in : inputs) check_id(in);
  Node node;
  node.op = op;
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) {
    throw ShapeError("graph: reference to unknown node " + std::to_string(id));
  }
}

NodeId Graph::input(Matrix value, std::string name) {
  if (!value.all_finite()) {
    throw DataError("graph input '" + name + "' contains non-finite values");
  }
  const NodeId id = push(OpKind::kInput, {});
  nodes_[id].value = std::move(value);
  nodes_[id].name = std::move(name);
  return id;
}

NodeId Graph::parameter(std::string name, Matrix value) {
  if (!value.all_finite()) {
    throw DataError("graph parameter '" + name + "' contains non-finite values");
  }
  const NodeId id = push(OpKind::kParameter, {});
  nodes_[id].value = std::move(value);
  nodes_[id].name = std::move(name);
  parameters_.push_back(id);
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(OpKind::kMatmul, {a, b}); }
NodeId Graph::add_bias(NodeId x, NodeId bias) { return push(OpKind::kAddBias, {x, bias}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::kAdd, {a, b}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(OpKind::kSub, {a, b}); }
NodeId Graph::hadamard(NodeId a, NodeId b) { return push(OpKind::kHadamard, {a, b}); }
NodeId Graph::relu(NodeId a) { return push(OpKind::kRelu, {a}); }
NodeId Graph::square(NodeId a) { return push(OpKind::kSquare, {a}); }
NodeId Graph::max_rows(NodeId a) { return push(OpKind::kMaxRows, {a}); }
NodeId Graph::concat_cols(NodeId a, NodeId b) { return push(OpKind::kConcatCols, {a, b}); }
NodeId Graph::sum(NodeId a) { return push(OpKind::kSum, {a}); }
NodeId Graph::mean(NodeId a) { return push(OpKind::kMean, {a}); }
NodeId Graph::pairwise_distance(NodeId a) { return push(OpKind::kPairwiseDistance, {a}); }

NodeId Graph::scale(NodeId a, double s) {
  const NodeId id = push(OpKind::kScale, {a});
  nodes_[id].scalar = s;
  return id;
}

NodeId Graph::add_scalar(NodeId a, double s) {
  const NodeId id = push(OpKind::kAddScalar, {a});
  nodes_[id].scalar = s;
  return id;
}

NodeId Graph::tile_rows(NodeId a, std::size_t n) {
  const NodeId id = push(OpKind::kTileRows, {a});
  nodes_[id].count = n;
  return id;
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                                    std::vector<double> class_weights) {
  const NodeId id = push(OpKind::kSoftmaxCrossEntropy, {logits});
  nodes_[id].labels = std::move(labels);
  nodes_[id].class_weights = std::move(class_weights);
  return id;
}

NodeId Graph::pair_hinge(NodeId distances, std::vector<std::uint8_t> pair_classes, double alpha,
                        double k1, double k2) {
  const NodeId id = push(OpKind::kPairHinge, {distances});
  nodes_[id].pair_classes = std::move(pair_classes);
  nodes_[id].scalar = alpha;
  nodes_[id].k1 = k1;
  nodes_[id].k2 = k2;
  return id;
}

void Graph::set_root(NodeId id) {
  check_id(id);
  root_ = id;
}

NodeId Graph::root() const {
  if (root_) return *root_;
  if (nodes_.empty()) throw ShapeError("graph: empty graph has no root");
  return nodes_.size() - 1;
}

void Graph::set_value(NodeId leaf, Matrix value) {
  check_id(leaf);
  Node& node = nodes_[leaf];
  if (node.op != OpKind::kInput && node.op != OpKind::kParameter) {
    throw ShapeError("graph: set_value on non-leaf " + describe(leaf));
  }
  if (!value.all_finite()) {
    throw DataError("graph: non-finite value for " + describe(leaf));
  }
  node.value = std::move(value);
  evaluated_ = std::min(evaluated_, leaf);
}

void Graph::label(NodeId id, std::string name) {
  check_id(id);
  nodes_[id].name = std::move(name);
}

std::string Graph::describe(NodeId id) const {
  const Node& node = nodes_.at(id);
  std::string out = "node " + std::to_string(id) + " (" + std::string(op_name(node.op));
  if (!node.name.empty()) out += " '" + node.name + "'";
  return out + ")";
}

const Matrix& Graph::value(NodeId id) const {
  check_id(id);
  return nodes_[id].value;
}

const Matrix& Graph::grad(NodeId id) const {
  check_id(id);
  return nodes_[id].grad;
}

std::optional<NodeId> Graph::find_parameter(std::string_view name) const {
  for (NodeId id : parameters_) {
    if (nodes_[id].name == name) return id;
  }
  return std::nullopt;
}

const Matrix& Graph::forward() {
  const NodeId r = root();
  for (NodeId id = evaluated_; id < nodes_.size(); ++id) evaluate(id);
  evaluated_ = nodes_.size();
  return nodes_[r].value;
}

void Graph::evaluate(NodeId id) {
  Node& node = nodes_[id];
  node.kink_hash = 0;
  node.kink_hit = false;
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[node.inputs[k]].value; };
  auto fail = [&](const std::string& what) {
    throw ShapeError("graph: " + describe(id) + ": " + what);
  };
  auto require_same = [&]() {
    if (!in(0).same_shape(in(1))) {
      fail("operand shapes " + in(0).shape_string() + " and " + in(1).shape_string() +
           " differ");
    }
  };

  switch (node.op) {
    case OpKind::kInput:
    case OpKind::kParameter:
      break;
    case OpKind::kMatmul:
      if (in(0).cols() != in(1).rows()) {
        fail("cannot multiply " + in(0).shape_string() + " by " + in(1).shape_string());
      }
      node.value = simgroup::matmul(in(0), in(1));
      break;
    case OpKind::kAddBias: {
      const Matrix& x = in(0);
      const Matrix& b = in(1);
      if (b.rows() != 1 || b.cols() != x.cols()) {
        fail("bias " + b.shape_string() + " does not match rows of " + x.shape_string());
      }
      node.value = x;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = node.value.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) row[c] += b[c];
      }
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kHadamard: {
      require_same();
      node.value = in(0);
      auto out = node.value.values();
      auto rhs = in(1).values();
      if (node.op == OpKind::kAdd) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += rhs[i];
      } else if (node.op == OpKind::kSub) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rhs[i];
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= rhs[i];
      }
      break;
    }
    case OpKind::kScale:
      node.value = in(0);
      for (double& v : node.value.values()) v *= node.scalar;
      break;
    case OpKind::kAddScalar:
      node.value = in(0);
      for (double& v : node.value.values()) v += node.scalar;
      break;
    case OpKind::kRelu: {
      node.value = in(0);
      std::uint64_t h = 0;
      std::size_t i = 0;
      for (double& v : node.value.values()) {
        if (v == 0.0) node.kink_hit = true;
        if (v > 0.0) {
          h = mix(h, i);
        } else {
          v = 0.0;
        }
        ++i;
      }
      node.kink_hash = h;
      break;
    }
    case OpKind::kSquare:
      node.value = in(0);
      for (double& v : node.value.values()) v *= v;
      break;
    case OpKind::kMaxRows: {
      const Matrix& x = in(0);
      if (x.rows() == 0) fail("max over zero rows");
      node.value = Matrix(1, x.cols());
      node.argmax.assign(x.cols(), 0);
      std::uint64_t h = 0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < x.rows(); ++r) {
          if (x(r, c) > x(best, c)) {
            best = r;
          } else if (x(r, c) == x(best, c)) {
            node.kink_hit = true;
          }
        }
        node.argmax[c] = best;
        node.value[c] = x(best, c);
        h = mix(h, best * x.cols() + c);
      }
      node.kink_hash = h;
      break;
    }
    case OpKind::kTileRows: {
      const Matrix& x = in(0);
      if (x.rows() != 1) fail("tile_rows expects a row vector, got " + x.shape_string());
      node.value = Matrix(node.count, x.cols());
      for (std::size_t r = 0; r < node.count; ++r) {
        std::copy(x.values().begin(), x.values().end(), node.value.row(r).begin());
      }
      break;
    }
    case OpKind::kConcatCols: {
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      if (a.rows() != b.rows()) {
        fail("row counts " + a.shape_string() + " and " + b.shape_string() + " differ");
      }
      node.value = Matrix(a.rows(), a.cols() + b.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        auto out = node.value.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), out.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), out.begin() + a.cols());
      }
      break;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      double acc = 0.0;
      for (double v : in(0).values()) acc += v;
      if (node.op == OpKind::kMean) {
        if (in(0).empty()) fail("mean of empty matrix");
        acc /= static_cast<double>(in(0).size());
      }
      node.value = Matrix(1, 1, acc);
      break;
    }
    case OpKind::kPairwiseDistance: {
      node.value = pairwise_distances(in(0));
      const std::size_t n = node.value.rows();
      std::uint64_t h = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (node.value(i, j) == 0.0) {
            node.kink_hit = true;
            h = mix(h, i * n + j);
          }
        }
      }
      node.kink_hash = h;
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Matrix& logits = in(0);
      if (node.labels.size() != logits.rows()) {
        fail(std::to_string(node.labels.size()) + " labels for " + logits.shape_string() +
             " logits");
      }
      if (node.class_weights.size() != logits.cols()) {
        fail(std::to_string(node.class_weights.size()) + " class weights for " +
             logits.shape_string() + " logits");
      }
      node.cache = Matrix(logits.rows(), logits.cols());
      double total = 0.0;
      for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int label = node.labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= logits.cols()) {
          fail("label " + std::to_string(label) + " out of range at row " + std::to_string(r));
        }
        const auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        const double log_z = std::log(z);
        auto probs = node.cache.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) probs[c] = std::exp(row[c] - mx - log_z);
        total += node.class_weights[label] * (log_z - (row[label] - mx));
      }
      if (logits.rows() == 0) fail("cross entropy over zero rows");
      node.value = Matrix(1, 1, total / static_cast<double>(logits.rows()));
      break;
    }
    case OpKind::kPairHinge: {
      const Matrix& d = in(0);
      if (d.rows() != d.cols() || node.pair_classes.size() != d.size()) {
        fail("pair classes do not match distance matrix " + d.shape_string());
      }
      double total = 0.0;
      std::uint64_t h = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double dist = d[i];
        switch (node.pair_classes[i]) {
          case 1:
            total += dist;
            break;
          case 2:
            if (dist == node.k1) node.kink_hit = true;
            if (dist < node.k1) {
              total += node.scalar * (node.k1 - dist);
              h = mix(h, i);
            }
            break;
          case 3:
            if (dist == node.k2) node.kink_hit = true;
            if (dist < node.k2) {
              total += node.k2 - dist;
              h = mix(h, i);
            }
            break;
          default:
            fail("pair class " + std::to_string(node.pair_classes[i]) + " not in {1,2,3}");
        }
      }
      node.kink_hash = h;
      node.value = Matrix(1, 1, total);
      break;
    }
  }
}

void Graph::zero_grad() {
  for (Node& node : nodes_) {
    if (node.grad.same_shape(node.value)) {
      node.grad.fill(0.0);
    } else {
      node.grad = Matrix(node.value.rows(), node.value.cols());
    }
  }
}

void Graph::backward() {
  if (evaluated_ != nodes_.size()) {
    throw ShapeError("graph: backward called before forward");
  }
  const NodeId r = root();
  if (nodes_[r].value.rows() != 1 || nodes_[r].value.cols() != 1) {
    throw ShapeError("graph: backward needs a scalar root, " + describe(r) + " is " +
                     nodes_[r].value.shape_string());
  }
  for (NodeId id = 0; id <= r; ++id) {
    Node& node = nodes_[id];
    const bool leaf = node.op == OpKind::kInput || node.op == OpKind::kParameter;
    if (!node.grad.same_shape(node.value)) {
      node.grad = Matrix(node.value.rows(), node.value.cols());
    } else if (!leaf) {
      node.grad.fill(0.0);
    }
  }
  nodes_[r].grad[0] += 1.0;
  for (NodeId id = r + 1; id-- > 0;) propagate(id);
}

void Graph::propagate(NodeId id) {
  Node& node = nodes_[id];
  const Matrix& g = node.grad;
  auto in_value = [&](std::size_t k) -> const Matrix& { return nodes_[node.inputs[k]].value; };
  auto in_grad = [&](std::size_t k) -> Matrix& { return nodes_[node.inputs[k]].grad; };

  switch (node.op) {
    case OpKind::kInput:
    case OpKind::kParameter:
      break;
    case OpKind::kMatmul:
      accumulate(in_grad(0), matmul_nt(g, in_value(1)));
      accumulate(in_grad(1), matmul_tn(in_value(0), g));
      break;
    case OpKind::kAddBias: {
      accumulate(in_grad(0), g);
      Matrix& db = in_grad(1);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto row = g.row(r);
        for (std::size_t c = 0; c < g.cols(); ++c) db[c] += row[c];
      }
      break;
    }
    case OpKind::kAdd:
      accumulate(in_grad(0), g);
      accumulate(in_grad(1), g);
      break;
    case OpKind::kSub:
      accumulate(in_grad(0), g);
      accumulate(in_grad(1), g, -1.0);
      break;
    case OpKind::kHadamard: {
      Matrix& da = in_grad(0);
      Matrix& db = in_grad(1);
      const Matrix& a = in_value(0);
      const Matrix& b = in_value(1);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i] * b[i];
        db[i] += g[i] * a[i];
      }
      break;
    }
    case OpKind::kScale:
      accumulate(in_grad(0), g, node.scalar);
      break;
    case OpKind::kAddScalar:
      accumulate(in_grad(0), g);
      break;
    case OpKind::kRelu: {
      Matrix& da = in_grad(0);
      const Matrix& x = in_value(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) da[i] += g[i];
      }
      break;
    }
    case OpKind::kSquare: {
      Matrix& da = in_grad(0);
      const Matrix& x = in_value(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += 2.0 * x[i] * g[i];
      break;
    }
    case OpKind::kMaxRows: {
      Matrix& da = in_grad(0);
      for (std::size_t c = 0; c < g.cols(); ++c) da(node.argmax[c], c) += g[c];
      break;
    }
    case OpKind::kTileRows: {
      Matrix& da = in_grad(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto row = g.row(r);
        for (std::size_t c = 0; c < g.cols(); ++c) da[c] += row[c];
      }
      break;
    }
    case OpKind::kConcatCols: {
      Matrix& da = in_grad(0);
      Matrix& db = in_grad(1);
      const std::size_t split = da.cols();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto row = g.row(r);
        auto ra = da.row(r);
        auto rb = db.row(r);
        for (std::size_t c = 0; c < split; ++c) ra[c] += row[c];
        for (std::size_t c = split; c < g.cols(); ++c) rb[c - split] += row[c];
      }
      break;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      Matrix& da = in_grad(0);
      double s = g[0];
      if (node.op == OpKind::kMean) s /= static_cast<double>(da.size());
      for (double& v : da.values()) v += s;
      break;
    }
    case OpKind::kPairwiseDistance: {
      const Matrix& x = in_value(0);
      const Matrix& d = node.value;
      Matrix& dx = in_grad(0);
      const std::size_t n = x.rows();
      const std::size_t f = x.cols();
      for (std::size_t i = 0; i < n; ++i) {
        auto gi = dx.row(i);
        const auto xi = x.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i || d(i, j) <= 0.0) continue;
          const double w = (g(i, j) + g(j, i)) / d(i, j);
          if (w == 0.0) continue;
          const auto xj = x.row(j);
          for (std::size_t k = 0; k < f; ++k) gi[k] += w * (xi[k] - xj[k]);
        }
      }
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      Matrix& dl = in_grad(0);
      const double rows = static_cast<double>(node.cache.rows());
      for (std::size_t r = 0; r < node.cache.rows(); ++r) {
        const int label = node.labels[r];
        const double s = g[0] * node.class_weights[label] / rows;
        const auto probs = node.cache.row(r);
        auto out = dl.row(r);
        for (std::size_t c = 0; c < probs.size(); ++c) {
          out[c] += s * (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
        }
      }
      break;
    }
    case OpKind::kPairHinge: {
      const Matrix& d = in_value(0);
      Matrix& dd = in_grad(0);
      const double s = g[0];
      for (std::size_t i = 0; i < d.size(); ++i) {
        switch (node.pair_classes[i]) {
          case 1:
            dd[i] += s;
            break;
          case 2:
            if (d[i] < node.k1) dd[i] -= s * node.scalar;
            break;
          default:
            if (d[i] < node.k2) dd[i] -= s;
            break;
        }
      }
      break;
    }
  }
}

std::uint64_t Graph::kink_signature() const {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    h = mix(h, nodes_[id].kink_hash + id);
  }
  return h;
}

bool Graph::at_kink() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kink_hit; });
}

std::optional<NodeId> Graph::first_non_finite() const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].value.all_finite()) return id;
  }
  return std::nullopt;
}

}  // namespace simgroup
