#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simgroup/model.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

enum class ThresholdMode { kFixed, kHistogram };

struct GroupingConfig {
  double th_c = 0.1;
  double th_m1 = 0.6;
  std::size_t th_m2 = 20;
  ThresholdMode th_s_mode = ThresholdMode::kHistogram;
  double th_s_fixed = 1.0;
  double th_s_min = 0.1;
  // Exclusive upper bound; estimated thresholds stay strictly below it.
  double th_s_max = 1.0;
  // Upper end of the distance histogram.
  double histogram_max = 2.0;
  std::size_t histogram_bins = 64;
  // Histograms whose Otsu separability (between-class over total variance)
  // falls below this are treated as one mode and get th_s_fixed. A uniform
  // histogram scores 0.75. Zero disables the test.
  double histogram_min_separability = 0.75;

  void validate() const;
  friend bool operator==(const GroupingConfig&, const GroupingConfig&) = default;
};

struct Proposal {
  std::vector<std::size_t> members;  // sorted point indices
  double confidence = 0.0;           // clamped to [0, 1]
  std::size_t seed_point = 0;
};

struct GroupProposalSet {
  std::vector<Proposal> proposals;
  std::vector<int> point_classes;  // predicted semantic class per point
};

struct InstanceResult {
  std::vector<int> point_instance;  // dense ids, -1 unassigned
  std::vector<int> instance_class;
  std::vector<std::size_t> instance_count;
  std::vector<double> instance_confidence;
  // Points claimed by two or more surviving proposals.
  std::size_t multi_claimed = 0;

  std::size_t n_instances() const { return instance_class.size(); }
};

struct Box {
  std::array<double, 3> min{};
  std::array<double, 3> max{};

  friend bool operator==(const Box&, const Box&) = default;
};

struct OtsuResult {
  double threshold = 0.0;
  double separability = 0.0;  // max between-class variance / total variance
};

// Otsu threshold over a fixed-range histogram. The threshold is the midpoint
// of the first run of bin edges maximizing the between-class variance, or
// `lo` (separability 0) when every value falls in one bin.
OtsuResult otsu(std::span<const double> values, double hi, std::size_t bins, double lo);
inline double otsu_threshold(std::span<const double> values, double hi, std::size_t bins,
                             double lo) {
  return otsu(values, hi, bins, lo).threshold;
}

// Per-class Th_S from distances between points predicted as that class.
std::vector<double> estimate_th_s(const SimilarityMatrix& s, std::span<const int> predicted,
                                  std::size_t n_classes, const GroupingConfig& config);

GroupProposalSet extract_proposals(const SimilarityMatrix& s, std::span<const double> confidence,
                                   std::span<const double> th_s, std::span<const int> predicted,
                                   const GroupingConfig& config);

// |a & b| / |a | b| for sorted index sets.
double set_iou(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Indices of the proposals that survive cardinality-ordered NMS, in
// survival order.
std::vector<std::size_t> nms_survivors(const std::vector<Proposal>& proposals, double th_m1);

InstanceResult group_merge(const GroupProposalSet& proposals, const GroupingConfig& config,
                           std::uint64_t seed);

std::vector<Box> boxes_from_instances(const PointCloud& cloud, const InstanceResult& result);

// Full single-cloud inference: forward, thresholds, proposals, merging, boxes.
struct Prediction {
  InstanceResult instances;
  std::vector<int> semantic;
  std::vector<Box> boxes;
  std::vector<double> th_s;
};

Prediction infer_cloud(const Model& model, const PointCloud& cloud, const GroupingConfig& config,
                       std::uint64_t seed);

// Instance result read straight from labels (GT-as-prediction), confidence 1.
InstanceResult instances_from_labels(const LabelSet& labels);

}  // namespace simgroup
