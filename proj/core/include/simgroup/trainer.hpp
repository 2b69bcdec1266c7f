#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/rng.hpp"

namespace simgroup {

struct TrainConfig {
  double lr_initial = 0.0005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 4;
  std::size_t lr_halve_every_epochs = 20;
  std::size_t warmup_epochs = 5;
  std::size_t max_epochs = 60;
  // 0 disables the cap.
  std::size_t max_steps = 0;
  // Write epoch_<k>.sgw every this many epochs; 0 disables.
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainState {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  Rng rng;

  static TrainState fresh(const Model& model, std::uint64_t seed);
};

struct Sample {
  PointCloud cloud;
  LabelSet labels;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossValues loss;
  double lr = 0.0;
  double alpha = 0.0;
};

double lr_at_epoch(std::size_t epoch, const TrainConfig& config);

// One bias-corrected ADAM update; increments state.step.
void adam_update(std::vector<NamedMatrix>& params, const std::vector<Matrix>& grads,
                 TrainState& state, double lr, const TrainConfig& config);

// Gradient of the batch-mean loss. With `sim_only` the gradient is that of
// L_SIM alone; all three loss values are reported either way.
LossValues batch_gradients(const Model& model, std::span<const Sample* const> batch,
                           double alpha, bool sim_only, const LossConfig& loss_config,
                           std::vector<Matrix>& grads);

LossValues train_step(Model& model, std::span<const Sample* const> batch, TrainState& state,
                      const TrainConfig& train_config, const LossConfig& loss_config);

struct FitOptions {
  std::filesystem::path checkpoint_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

std::vector<EpochLog> fit(Model& model, std::span<const Sample> dataset,
                          const TrainConfig& train_config, const LossConfig& loss_config,
                          const FitOptions& options = {});

// CSV with header epoch,step,l_sim,l_cf,l_sem,total,lr,alpha.
std::string format_train_log(std::span<const EpochLog> log);

}  // namespace simgroup
