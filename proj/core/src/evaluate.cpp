#include "simgroup/evaluate.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "simgroup/error.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {
namespace {

struct Ranked {
  double confidence;
  std::size_t sample;
  std::size_t index;
};

void sort_ranked(std::vector<Ranked>& ranked) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.sample != b.sample) return a.sample < b.sample;
    return a.index < b.index;
  });
}

using Members = std::vector<std::vector<std::size_t>>;

Members members_of(std::span<const int> ids, std::size_t count) {
  Members m(count);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] >= 0) m[static_cast<std::size_t>(ids[p])].push_back(p);
  }
  return m;
}

std::optional<double> mean_of(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

void MatchConfig::validate() const {
  if (iou_thresholds.empty()) throw ConfigError("eval: no IoU thresholds");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("eval: IoU thresholds must lie in (0, 1)");
  }
}

PRCurve pr_curve(const std::vector<bool>& tp_ranked, std::size_t n_gt) {
  PRCurve curve;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < tp_ranked.size(); ++k) {
    if (tp_ranked[k]) ++tp;
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(k + 1),
                            n_gt == 0 ? 0.0
                                      : static_cast<double>(tp) / static_cast<double>(n_gt)});
  }
  // Right-max envelope, then one recall step of 1/n_gt per true positive.
  std::vector<double> envelope(curve.points.size(), 0.0);
  double running = 0.0;
  for (std::size_t k = curve.points.size(); k-- > 0;) {
    running = std::max(running, curve.points[k].precision);
    envelope[k] = running;
  }
  double ap = 0.0;
  if (n_gt > 0) {
    for (std::size_t k = 0; k < tp_ranked.size(); ++k) {
      if (tp_ranked[k]) ap += envelope[k] / static_cast<double>(n_gt);
    }
  }
  curve.ap = ap;
  return curve;
}

std::optional<double> instance_ap(std::span<const InstanceResult> predictions,
                                  std::span<const LabelSet> gts, int cls, double iou_t) {
  if (predictions.size() != gts.size()) {
    throw DataError("instance_ap: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(gts.size()) + " ground truths");
  }
  std::vector<Members> gt_members;
  std::vector<std::vector<int>> gt_class;
  std::vector<Members> pred_members;
  std::size_t n_gt = 0;
  std::vector<Ranked> ranked;
  for (std::size_t s = 0; s < gts.size(); ++s) {
    if (predictions[s].point_instance.size() != gts[s].size()) {
      throw DataError("instance_ap: sample " + std::to_string(s) + " length mismatch");
    }
    const InstanceResult gt = instances_from_labels(gts[s]);
    gt_members.push_back(members_of(gt.point_instance, gt.n_instances()));
    gt_class.push_back(gt.instance_class);
    for (int c : gt.instance_class) n_gt += c == cls ? 1 : 0;

    const InstanceResult& pred = predictions[s];
    pred_members.push_back(members_of(pred.point_instance, pred.n_instances()));
    for (std::size_t i = 0; i < pred.n_instances(); ++i) {
      if (pred.instance_class[i] == cls) ranked.push_back({pred.instance_confidence[i], s, i});
    }
  }
  if (n_gt == 0) return std::nullopt;
  sort_ranked(ranked);

  std::vector<std::vector<bool>> matched(gts.size());
  for (std::size_t s = 0; s < gts.size(); ++s) matched[s].assign(gt_members[s].size(), false);
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& r = ranked[k];
    const auto& pm = pred_members[r.sample][r.index];
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < gt_members[r.sample].size(); ++g) {
      if (matched[r.sample][g] || gt_class[r.sample][g] != cls) continue;
      const double iou = set_iou(pm, gt_members[r.sample][g]);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best > iou_t) {
      tp[k] = true;
      matched[r.sample][best_gt] = true;
    }
  }
  return pr_curve(tp, n_gt).ap;
}

ApSummary instance_ap_summary(std::span<const InstanceResult> predictions,
                              std::span<const LabelSet> gts, std::size_t n_classes,
                              double iou_t) {
  ApSummary out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    out.per_class.push_back(instance_ap(predictions, gts, static_cast<int>(c), iou_t));
  }
  out.mean = mean_of(out.per_class).value_or(0.0);
  return out;
}

SemanticScores semantic_miou(std::span<const std::vector<int>> predictions,
                             std::span<const LabelSet> gts, std::size_t n_classes) {
  if (predictions.size() != gts.size()) {
    throw DataError("semantic_miou: prediction and ground-truth counts differ");
  }
  std::vector<std::size_t> tp(n_classes, 0);
  std::vector<std::size_t> fp(n_classes, 0);
  std::vector<std::size_t> fn(n_classes, 0);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < gts.size(); ++s) {
    if (predictions[s].size() != gts[s].size()) {
      throw DataError("semantic_miou: sample " + std::to_string(s) + " length mismatch");
    }
    for (std::size_t p = 0; p < gts[s].size(); ++p) {
      const int g = gts[s].semantic[p];
      const int q = predictions[s][p];
      if (g == kUnlabeled) continue;
      ++total;
      auto in_range = [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < n_classes; };
      if (g == q) {
        ++correct;
        if (in_range(g)) ++tp[static_cast<std::size_t>(g)];
      } else {
        if (in_range(g)) ++fn[static_cast<std::size_t>(g)];
        if (in_range(q)) ++fp[static_cast<std::size_t>(q)];
      }
    }
  }
  SemanticScores out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) {
      out.per_class_iou.push_back(std::nullopt);
    } else {
      out.per_class_iou.push_back(static_cast<double>(tp[c]) / static_cast<double>(denom));
    }
  }
  out.miou = mean_of(out.per_class_iou).value_or(0.0);
  out.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return out;
}

double box_iou(const Box& a, const Box& b) {
  double inter = 1.0;
  double va = 1.0;
  double vb = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = std::max(a.min[k], b.min[k]);
    const double hi = std::min(a.max[k], b.max[k]);
    inter *= std::max(0.0, hi - lo);
    va *= a.max[k] - a.min[k];
    vb *= b.max[k] - b.min[k];
  }
  const double uni = va + vb - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::optional<double> detection_ap(std::span<const BoxDetection> predictions,
                                   std::span<const BoxDetection> gts, int cls, double iou_t) {
  std::vector<std::size_t> gt_idx;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].cls == cls) gt_idx.push_back(g);
  }
  if (gt_idx.empty()) return std::nullopt;
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].cls == cls) {
      ranked.push_back({predictions[i].confidence, predictions[i].sample, i});
    }
  }
  sort_ranked(ranked);
  std::vector<bool> matched(gts.size(), false);
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const BoxDetection& p = predictions[ranked[k].index];
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g : gt_idx) {
      if (matched[g] || gts[g].sample != p.sample) continue;
      const double iou = box_iou(p.box, gts[g].box);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    tp[k] = best > iou_t;
    if (tp[k]) matched[best_gt] = true;
  }
  return pr_curve(tp, gt_idx.size()).ap;
}

std::vector<BoxDetection> gt_box_detections(const PointCloud& cloud, const LabelSet& labels,
                                            std::size_t sample) {
  const InstanceResult gt = instances_from_labels(labels);
  const std::vector<Box> boxes = boxes_from_instances(cloud, gt);
  std::vector<BoxDetection> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    out.push_back({sample, boxes[i], gt.instance_class[i], 1.0});
  }
  return out;
}

std::vector<BoxDetection> predicted_box_detections(const InstanceResult& result,
                                                   std::span<const Box> boxes,
                                                   std::size_t sample) {
  std::vector<BoxDetection> out;
  for (std::size_t i = 0; i < result.n_instances(); ++i) {
    out.push_back({sample, boxes[i], result.instance_class[i], result.instance_confidence[i]});
  }
  return out;
}

std::string format_eval_report(const EvalInputs& inputs, const MatchConfig& config) {
  config.validate();
  auto fmt = [](const std::optional<double>& v) { return v ? format_fixed(*v, 6) : "nan"; };
  std::vector<BoxDetection> pred_boxes;
  std::vector<BoxDetection> gt_boxes;
  for (std::size_t s = 0; s < inputs.gts.size(); ++s) {
    const auto g = gt_box_detections(inputs.clouds[s], inputs.gts[s], s);
    gt_boxes.insert(gt_boxes.end(), g.begin(), g.end());
    const auto boxes = boxes_from_instances(inputs.clouds[s], inputs.predictions[s]);
    const auto p = predicted_box_detections(inputs.predictions[s], boxes, s);
    pred_boxes.insert(pred_boxes.end(), p.begin(), p.end());
  }

  std::string out = "kind,class,iou,value\n";
  for (double t : config.iou_thresholds) {
    const std::string iou = format_fixed(t, 2);
    const ApSummary ap = instance_ap_summary(inputs.predictions, inputs.gts, inputs.n_classes, t);
    for (std::size_t c = 0; c < inputs.n_classes; ++c) {
      out += "instance_ap," + std::to_string(c) + "," + iou + "," + fmt(ap.per_class[c]) + "\n";
    }
    out += "instance_ap,mean," + iou + "," + fmt(mean_of(ap.per_class)) + "\n";
  }
  for (double t : config.iou_thresholds) {
    const std::string iou = format_fixed(t, 2);
    std::vector<std::optional<double>> per_class;
    for (std::size_t c = 0; c < inputs.n_classes; ++c) {
      per_class.push_back(detection_ap(pred_boxes, gt_boxes, static_cast<int>(c), t));
      out += "box_ap," + std::to_string(c) + "," + iou + "," + fmt(per_class.back()) + "\n";
    }
    out += "box_ap,mean," + iou + "," + fmt(mean_of(per_class)) + "\n";
  }
  const SemanticScores sem =
      semantic_miou(inputs.semantic_predictions, inputs.gts, inputs.n_classes);
  for (std::size_t c = 0; c < inputs.n_classes; ++c) {
    out += "semantic_iou," + std::to_string(c) + ",," + fmt(sem.per_class_iou[c]) + "\n";
  }
  out += "semantic_miou,all,," + format_fixed(sem.miou, 6) + "\n";
  out += "semantic_accuracy,all,," + format_fixed(sem.accuracy, 6) + "\n";
  out += "note,box_ap,,boxes are tight on observed points; amodal GT boxes would differ\n";
  return out;
}

}  // namespace simgroup
