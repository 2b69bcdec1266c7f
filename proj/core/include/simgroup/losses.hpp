#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simgroup/graph.hpp"
#include "simgroup/model.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

struct LossConfig {
  double k1 = 1.0;
  double k2 = 2.0;
  double alpha_initial = 2.0;
  double alpha_step = 2.0;
  std::size_t alpha_every_epochs = 5;
  // Empty means weight 1 for every class.
  std::vector<double> class_weights;
  // Divisor applied to the raw pair sum; 0 means N_p of the sample.
  double sim_norm = 0.0;
  // Threshold defining the predicted group when computing confidence
  // targets; 0 means k1.
  double cf_th_s = 0.0;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossValues {
  double l_sim = 0.0;
  double l_cf = 0.0;
  double l_sem = 0.0;
  double total = 0.0;
};

struct LossNodes {
  NodeId distances = 0;
  NodeId l_sim = 0;
  NodeId l_cf = 0;
  NodeId l_sem = 0;
  NodeId total = 0;
};

// Double-hinge pair loss over all ordered pairs (i, j), divided by `norm`.
NodeId loss_sim(Graph& graph, NodeId distances, const PairClassMatrix& pair_classes,
                double alpha, double k1, double k2, double norm = 1.0);

// IoU between {j : S_ij < th_s} and the ground-truth group of i. Zero when
// the ground-truth group is empty.
std::vector<double> confidence_targets(const Matrix& distances, const GroundTruthGroups& groups,
                                       double th_s);

// Mean squared error between the confidence column and constant targets.
NodeId loss_cf(Graph& graph, NodeId confidence, const Matrix& distances,
               const GroundTruthGroups& groups, double th_s);

// Weighted softmax cross entropy averaged over points.
NodeId loss_sem(Graph& graph, NodeId logits, std::span<const int> semantic,
                std::span<const double> class_weights);

// freq(c) = points of class c / points in samples containing c; the weight
// is the (lower) median freq divided by freq(c).
std::vector<double> median_frequency_weights(std::span<const LabelSet> samples,
                                             std::size_t n_classes);

double alpha_at_epoch(std::size_t epoch, const LossConfig& config);

// Records L_SIM, L_CF, L_SEM and their sum on top of a model forward pass.
// Runs a partial forward to obtain the distances that fix the confidence
// targets.
LossNodes build_losses(Graph& graph, const FeatureNodes& features, const LabelSet& labels,
                       const LossConfig& config, double alpha);

LossValues read_losses(const Graph& graph, const LossNodes& nodes);

}  // namespace simgroup
