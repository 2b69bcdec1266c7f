#include "simgroup/losses.hpp"

#include <algorithm>
#include <string>

#include "simgroup/error.hpp"

namespace simgroup {

void LossConfig::validate() const {
  if (!(k1 > 0.0) || !(k2 > k1)) throw ConfigError("loss: need k2 > k1 > 0");
  if (!(alpha_initial >= 1.0)) throw ConfigError("loss: alpha_initial must be >= 1");
  if (alpha_step < 0.0) throw ConfigError("loss: alpha_step must be >= 0");
  if (alpha_every_epochs < 1) throw ConfigError("loss: alpha_every_epochs must be >= 1");
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ConfigError("loss: class weights must be positive");
  }
  if (sim_norm < 0.0) throw ConfigError("loss: sim_norm must be >= 0");
  if (cf_th_s < 0.0) throw ConfigError("loss: cf_th_s must be >= 0");
}

NodeId loss_sim(Graph& graph, NodeId distances, const PairClassMatrix& pair_classes,
                double alpha, double k1, double k2, double norm) {
  const std::size_t n = pair_classes.size();
  std::vector<std::uint8_t> classes(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      classes[i * n + j] = static_cast<std::uint8_t>(pair_classes(i, j));
    }
  }
  NodeId out = graph.pair_hinge(distances, std::move(classes), alpha, k1, k2);
  if (norm != 1.0) out = graph.scale(out, 1.0 / norm);
  graph.label(out, "L_SIM");
  return out;
}

std::vector<double> confidence_targets(const Matrix& distances, const GroundTruthGroups& groups,
                                       double th_s) {
  const std::size_t n = distances.rows();
  if (groups.size() != n) {
    throw DataError("confidence targets: " + std::to_string(groups.size()) +
                    " ground-truth rows for " + std::to_string(n) + " points");
  }
  std::vector<double> targets(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool pred = distances(i, j) < th_s;
      const bool gt = groups(i, j);
      inter += (pred && gt) ? 1 : 0;
      uni += (pred || gt) ? 1 : 0;
    }
    targets[i] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return targets;
}

NodeId loss_cf(Graph& graph, NodeId confidence, const Matrix& distances,
               const GroundTruthGroups& groups, double th_s) {
  if (!(th_s > 0.0)) throw ConfigError("loss_cf: th_s must be positive");
  const auto targets = confidence_targets(distances, groups, th_s);
  const NodeId t = graph.input(Matrix(targets.size(), 1, targets), "cf_targets");
  const NodeId out = graph.mean(graph.square(graph.sub(confidence, t)));
  graph.label(out, "L_CF");
  return out;
}

NodeId loss_sem(Graph& graph, NodeId logits, std::span<const int> semantic,
                std::span<const double> class_weights) {
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    if (semantic[i] == kUnlabeled) {
      throw DataError("semantic loss: point " + std::to_string(i) + " is unlabeled");
    }
  }
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ConfigError("semantic loss: class weights must be positive");
  }
  const NodeId out = graph.softmax_cross_entropy(
      logits, std::vector<int>(semantic.begin(), semantic.end()),
      std::vector<double>(class_weights.begin(), class_weights.end()));
  graph.label(out, "L_SEM");
  return out;
}

std::vector<double> median_frequency_weights(std::span<const LabelSet> samples,
                                             std::size_t n_classes) {
  std::vector<double> class_points(n_classes, 0.0);
  std::vector<double> present_points(n_classes, 0.0);
  for (const LabelSet& s : samples) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (int c : s.semantic) {
      if (c == kUnlabeled) continue;
      if (c < 0 || static_cast<std::size_t>(c) >= n_classes) {
        throw DataError("class id " + std::to_string(c) + " outside [0, " +
                        std::to_string(n_classes) + ")");
      }
      ++counts[static_cast<std::size_t>(c)];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (counts[c] == 0) continue;
      class_points[c] += static_cast<double>(counts[c]);
      present_points[c] += static_cast<double>(s.size());
    }
  }
  std::vector<double> freq(n_classes);
  std::string missing;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_points[c] == 0.0) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(c);
      continue;
    }
    freq[c] = class_points[c] / present_points[c];
  }
  if (!missing.empty()) {
    throw DataError("median frequency balancing: classes absent from every sample: " + missing);
  }
  std::vector<double> sorted = freq;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  std::vector<double> weights(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) weights[c] = median / freq[c];
  return weights;
}

double alpha_at_epoch(std::size_t epoch, const LossConfig& config) {
  return config.alpha_initial +
         config.alpha_step * static_cast<double>(epoch / config.alpha_every_epochs);
}

LossNodes build_losses(Graph& graph, const FeatureNodes& features, const LabelSet& labels,
                       const LossConfig& config, double alpha) {
  const std::size_t n = labels.size();
  LossNodes nodes;
  nodes.distances = graph.pairwise_distance(features.sim_features);
  graph.label(nodes.distances, "S");

  const double norm = config.sim_norm > 0.0 ? config.sim_norm : static_cast<double>(n);
  nodes.l_sim = loss_sim(graph, nodes.distances, build_pair_classes(labels), alpha, config.k1,
                         config.k2, norm);

  graph.set_root(nodes.distances);
  graph.forward();
  const double th_s = config.cf_th_s > 0.0 ? config.cf_th_s : config.k1;
  nodes.l_cf = loss_cf(graph, features.confidence, graph.value(nodes.distances),
                       build_groups(labels), th_s);

  std::vector<double> weights = config.class_weights;
  const std::size_t n_classes = graph.value(features.logits).cols();
  if (weights.empty()) weights.assign(n_classes, 1.0);
  if (weights.size() != n_classes) {
    throw ConfigError("loss: " + std::to_string(weights.size()) + " class weights for " +
                      std::to_string(n_classes) + " classes");
  }
  nodes.l_sem = loss_sem(graph, features.logits, labels.semantic, weights);
  nodes.total = graph.add(graph.add(nodes.l_sim, nodes.l_cf), nodes.l_sem);
  graph.label(nodes.total, "L");
  graph.set_root(nodes.total);
  return nodes;
}

LossValues read_losses(const Graph& graph, const LossNodes& nodes) {
  LossValues v;
  v.l_sim = graph.value(nodes.l_sim)[0];
  v.l_cf = graph.value(nodes.l_cf)[0];
  v.l_sem = graph.value(nodes.l_sem)[0];
  v.total = graph.value(nodes.total)[0];
  return v;
}

}  // namespace simgroup
