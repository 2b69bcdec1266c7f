#include "simgroup/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"

namespace simgroup {

void GroupingConfig::validate() const {
  if (!(th_m1 > 0.0 && th_m1 < 1.0)) throw ConfigError("grouping: th_m1 must lie in (0, 1)");
  if (th_m2 < 1) throw ConfigError("grouping: th_m2 must be >= 1");
  if (!(th_s_fixed > 0.0)) throw ConfigError("grouping: th_s_fixed must be positive");
  if (!(th_s_min > 0.0) || !(th_s_max > th_s_min)) {
    throw ConfigError("grouping: need 0 < th_s_min < th_s_max");
  }
  if (!(histogram_max > 0.0)) throw ConfigError("grouping: histogram_max must be positive");
  if (histogram_bins < 2) throw ConfigError("grouping: histogram_bins must be >= 2");
  if (!(histogram_min_separability >= 0.0 && histogram_min_separability <= 1.0)) {
    throw ConfigError("grouping: histogram_min_separability must be in [0, 1]");
  }
}

OtsuResult otsu(std::span<const double> values, double hi, std::size_t bins, double lo) {
  std::vector<double> hist(bins, 0.0);
  const double width = hi / static_cast<double>(bins);
  for (double v : values) {
    auto b = static_cast<long long>(std::floor(v / width));
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    hist[static_cast<std::size_t>(b)] += 1.0;
  }
  double total = 0.0;
  double total_mass = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    total += hist[b];
    total_mass += hist[b] * (static_cast<double>(b) + 0.5) * width;
  }

  std::vector<double> variance(bins, 0.0);  // index k: split at edge k * width
  double w0 = 0.0;
  double m0 = 0.0;
  double best = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    w0 += hist[k - 1];
    m0 += hist[k - 1] * (static_cast<double>(k - 1) + 0.5) * width;
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = m0 / w0;
    const double mu1 = (total_mass - m0) / w1;
    variance[k] = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    best = std::max(best, variance[k]);
  }
  if (!(best > 0.0)) return {lo, 0.0};

  const double mean = total_mass / total;
  double spread = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double d = (static_cast<double>(b) + 0.5) * width - mean;
    spread += hist[b] * d * d;
  }
  const double tol = best * 1e-12;
  std::size_t first = 1;
  while (variance[first] < best - tol) ++first;
  std::size_t last = first;
  while (last + 1 < bins && variance[last + 1] >= best - tol) ++last;
  // best is w0*w1*(mu0-mu1)^2 on counts; dividing by total^2 gives the
  // variance on probabilities.
  return {0.5 * static_cast<double>(first + last) * width, best / (total * spread)};
}

std::vector<double> estimate_th_s(const SimilarityMatrix& s, std::span<const int> predicted,
                                  std::size_t n_classes, const GroupingConfig& config) {
  const std::size_t n = s.size();
  if (predicted.size() != n) {
    throw DataError("estimate_th_s: " + std::to_string(predicted.size()) + " classes for " +
                    std::to_string(n) + " points");
  }
  std::vector<double> th(n_classes, config.th_s_fixed);
  if (config.th_s_mode == ThresholdMode::kFixed) return th;

  const double upper = std::nextafter(config.th_s_max, 0.0);
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = predicted[i];
    if (c >= 0 && static_cast<std::size_t>(c) < n_classes) {
      members[static_cast<std::size_t>(c)].push_back(i);
    }
  }
  std::vector<double> values;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto& m = members[c];
    if (m.size() < 2) continue;
    values.clear();
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        // Distances are clipped at th_s_max.
        values.push_back(std::min(s(m[a], m[b]), config.th_s_max));
      }
    }
    const OtsuResult r =
        otsu(values, config.histogram_max, config.histogram_bins, config.th_s_min);
    // Separability 0 marks a single-bin histogram, which keeps the lower clamp.
    const bool one_mode =
        r.separability > 0.0 && r.separability < config.histogram_min_separability;
    const double t = one_mode ? config.th_s_fixed : r.threshold;
    th[c] = std::clamp(t, config.th_s_min, upper);
  }
  return th;
}

GroupProposalSet extract_proposals(const SimilarityMatrix& s, std::span<const double> confidence,
                                   std::span<const double> th_s, std::span<const int> predicted,
                                   const GroupingConfig& config) {
  const std::size_t n = s.size();
  if (confidence.size() != n || predicted.size() != n) {
    throw DataError("extract_proposals: confidence/class lengths do not match " +
                    std::to_string(n) + " points");
  }
  GroupProposalSet out;
  out.point_classes.assign(predicted.begin(), predicted.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double conf = std::clamp(confidence[i], 0.0, 1.0);
    if (conf < config.th_c) continue;
    const int c = predicted[i];
    if (c < 0 || static_cast<std::size_t>(c) >= th_s.size()) {
      throw DataError("extract_proposals: class " + std::to_string(c) + " has no threshold");
    }
    const double th = th_s[static_cast<std::size_t>(c)];
    Proposal p;
    p.seed_point = i;
    p.confidence = conf;
    for (std::size_t j = 0; j < n; ++j) {
      if (s(i, j) < th) p.members.push_back(j);
    }
    if (p.members.size() < config.th_m2 || p.members.empty()) continue;
    out.proposals.push_back(std::move(p));
  }
  return out;
}

double set_iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::size_t> nms_survivors(const std::vector<Proposal>& proposals, double th_m1) {
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = proposals[a];
    const auto& pb = proposals[b];
    if (pa.members.size() != pb.members.size()) return pa.members.size() > pb.members.size();
    return pa.seed_point < pb.seed_point;
  });
  std::vector<bool> consumed(proposals.size(), false);
  std::vector<std::size_t> survivors;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t rep = order[k];
    if (consumed[rep]) continue;
    survivors.push_back(rep);
    for (std::size_t q = k + 1; q < order.size(); ++q) {
      const std::size_t other = order[q];
      if (consumed[other]) continue;
      if (set_iou(proposals[rep].members, proposals[other].members) > th_m1) {
        consumed[other] = true;
      }
    }
  }
  return survivors;
}

InstanceResult group_merge(const GroupProposalSet& proposals, const GroupingConfig& config,
                           std::uint64_t seed) {
  const std::size_t n = proposals.point_classes.size();
  const std::vector<std::size_t> survivors = nms_survivors(proposals.proposals, config.th_m1);

  std::vector<std::vector<std::size_t>> claims(n);
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    for (std::size_t p : proposals.proposals[survivors[s]].members) {
      if (p >= n) throw DataError("group_merge: proposal member out of range");
      claims[p].push_back(s);
    }
  }

  InstanceResult result;
  Rng rng(seed);
  std::vector<int> owner(n, -1);
  for (std::size_t p = 0; p < n; ++p) {
    if (claims[p].empty()) continue;
    if (claims[p].size() == 1) {
      owner[p] = static_cast<int>(claims[p][0]);
    } else {
      ++result.multi_claimed;
      owner[p] = static_cast<int>(claims[p][uniform_index(rng, claims[p].size())]);
    }
  }

  // Survivors that lost every point to random assignment are dropped.
  std::vector<std::size_t> counts(survivors.size(), 0);
  for (int o : owner) {
    if (o >= 0) ++counts[static_cast<std::size_t>(o)];
  }
  std::vector<int> dense(survivors.size(), -1);
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    if (counts[s] == 0) continue;
    dense[s] = static_cast<int>(result.instance_count.size());
    result.instance_count.push_back(counts[s]);
    result.instance_confidence.push_back(proposals.proposals[survivors[s]].confidence);
  }
  result.point_instance.assign(n, -1);
  for (std::size_t p = 0; p < n; ++p) {
    if (owner[p] >= 0) result.point_instance[p] = dense[static_cast<std::size_t>(owner[p])];
  }

  std::vector<std::map<int, std::size_t>> votes(result.instance_count.size());
  for (std::size_t p = 0; p < n; ++p) {
    const int id = result.point_instance[p];
    if (id >= 0) ++votes[static_cast<std::size_t>(id)][proposals.point_classes[p]];
  }
  for (const auto& v : votes) {
    int best = -1;
    std::size_t best_count = 0;
    for (const auto& [cls, count] : v) {
      if (count > best_count) {
        best = cls;
        best_count = count;
      }
    }
    result.instance_class.push_back(best);
  }
  return result;
}

std::vector<Box> boxes_from_instances(const PointCloud& cloud, const InstanceResult& result) {
  if (result.point_instance.size() != cloud.n_points()) {
    throw DataError("boxes: instance labels do not match the cloud");
  }
  const std::size_t k = result.n_instances();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<Box> boxes(k);
  std::vector<bool> seen(k, false);
  for (auto& b : boxes) {
    b.min = {inf, inf, inf};
    b.max = {-inf, -inf, -inf};
  }
  for (std::size_t p = 0; p < cloud.n_points(); ++p) {
    const int id = result.point_instance[p];
    if (id < 0) continue;
    if (static_cast<std::size_t>(id) >= k) throw DataError("boxes: instance id out of range");
    Box& b = boxes[static_cast<std::size_t>(id)];
    seen[static_cast<std::size_t>(id)] = true;
    for (int a = 0; a < 3; ++a) {
      b.min[a] = std::min(b.min[a], cloud.attrs(p, a));
      b.max[a] = std::max(b.max[a], cloud.attrs(p, a));
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!seen[i]) throw DataError("boxes: instance " + std::to_string(i) + " has no members");
  }
  return boxes;
}

Prediction infer_cloud(const Model& model, const PointCloud& cloud, const GroupingConfig& config,
                       std::uint64_t seed) {
  config.validate();
  const FeatureBundle bundle = model.forward(cloud);
  const SimilarityMatrix s = similarity(bundle);
  Prediction out;
  out.semantic = predicted_classes(bundle.logits);
  out.th_s = estimate_th_s(s, out.semantic, model.config().n_classes, config);
  const std::vector<double> conf(bundle.confidence.values().begin(),
                                 bundle.confidence.values().end());
  const GroupProposalSet proposals = extract_proposals(s, conf, out.th_s, out.semantic, config);
  out.instances = group_merge(proposals, config, seed);
  out.boxes = boxes_from_instances(cloud, out.instances);
  return out;
}

InstanceResult instances_from_labels(const LabelSet& labels) {
  InstanceResult r;
  std::map<int, int> dense;
  for (int id : labels.instance) {
    if (id >= 0) dense.emplace(id, 0);
  }
  int next = 0;
  for (auto& [id, d] : dense) d = next++;
  r.instance_class.assign(dense.size(), -1);
  r.instance_count.assign(dense.size(), 0);
  r.instance_confidence.assign(dense.size(), 1.0);
  r.point_instance.assign(labels.size(), -1);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const int id = labels.instance[p];
    if (id < 0) continue;
    const int d = dense[id];
    r.point_instance[p] = d;
    r.instance_class[static_cast<std::size_t>(d)] = labels.semantic[p];
    ++r.instance_count[static_cast<std::size_t>(d)];
  }
  return r;
}

}  // namespace simgroup
