#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simgroup/grouping.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

struct MatchConfig {
  std::vector<double> iou_thresholds = {0.25, 0.5, 0.75};

  void validate() const;
};

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PrPoint> points;  // one per ranked prediction
  double ap = 0.0;
};

// Builds the curve from TP flags in descending-confidence order and computes
// the area under the right-max interpolated precision envelope.
PRCurve pr_curve(const std::vector<bool>& tp_ranked, std::size_t n_gt);

// Point-set AP for one class; std::nullopt when the class has no GT
// instance. Background GT points and unassigned predicted points are not
// part of any instance.
std::optional<double> instance_ap(std::span<const InstanceResult> predictions,
                                  std::span<const LabelSet> gts, int cls, double iou_t);

struct ApSummary {
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;  // over classes with GT instances
};

ApSummary instance_ap_summary(std::span<const InstanceResult> predictions,
                              std::span<const LabelSet> gts, std::size_t n_classes,
                              double iou_t);

struct SemanticScores {
  std::vector<std::optional<double>> per_class_iou;  // nullopt for zero support
  double miou = 0.0;
  double accuracy = 0.0;
};

SemanticScores semantic_miou(std::span<const std::vector<int>> predictions,
                             std::span<const LabelSet> gts, std::size_t n_classes);

double box_iou(const Box& a, const Box& b);

struct BoxDetection {
  std::size_t sample = 0;
  Box box;
  int cls = 0;
  double confidence = 1.0;
};

std::optional<double> detection_ap(std::span<const BoxDetection> predictions,
                                   std::span<const BoxDetection> gts, int cls, double iou_t);

// Boxes of GT instances (tight boxes on the labeled points).
std::vector<BoxDetection> gt_box_detections(const PointCloud& cloud, const LabelSet& labels,
                                            std::size_t sample);
std::vector<BoxDetection> predicted_box_detections(const InstanceResult& result,
                                                   std::span<const Box> boxes,
                                                   std::size_t sample);

struct EvalInputs {
  std::vector<InstanceResult> predictions;
  std::vector<std::vector<int>> semantic_predictions;
  std::vector<PointCloud> clouds;
  std::vector<LabelSet> gts;
  std::size_t n_classes = 0;
};

// CSV: kind,class,iou,value. Rows per (class, threshold) for instance_ap and
// box_ap, mean rows, then semantic summary rows.
std::string format_eval_report(const EvalInputs& inputs, const MatchConfig& config);

}  // namespace simgroup
