#include "simgroup/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>

#include "simgroup/error.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {

void TrainConfig::validate() const {
  if (!(lr_initial > 0.0)) throw ConfigError("train: lr_initial must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (lr_halve_every_epochs < 1) throw ConfigError("train: lr_halve_every_epochs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train: adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be positive");
}

TrainState TrainState::fresh(const Model& model, std::uint64_t seed) {
  TrainState s;
  for (const auto& [name, m] : model.parameters()) {
    s.first_moment.emplace_back(m.rows(), m.cols());
    s.second_moment.emplace_back(m.rows(), m.cols());
  }
  s.rng.seed(derive_seed(seed, 0x7261696EULL));
  return s;
}

double lr_at_epoch(std::size_t epoch, const TrainConfig& config) {
  const auto halvings = static_cast<int>(epoch / config.lr_halve_every_epochs);
  return config.lr_initial * std::ldexp(1.0, -halvings);
}

void adam_update(std::vector<NamedMatrix>& params, const std::vector<Matrix>& grads,
                 TrainState& state, double lr, const TrainConfig& config) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam: parameter, gradient and moment counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = params[p].second;
    const Matrix& g = grads[p];
    Matrix& m = state.first_moment[p];
    Matrix& v = state.second_moment[p];
    if (!g.same_shape(value) || !m.same_shape(value)) {
      throw ShapeError("adam: shape mismatch for '" + params[p].first + "'");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
      v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

LossValues batch_gradients(const Model& model, std::span<const Sample* const> batch,
                           double alpha, bool sim_only, const LossConfig& loss_config,
                           std::vector<Matrix>& grads) {
  if (batch.empty()) throw DataError("train: empty batch");
  grads.clear();
  for (const auto& [name, m] : model.parameters()) grads.emplace_back(m.rows(), m.cols());

  LossValues mean;
  for (const Sample* sample : batch) {
    Graph graph;
    const FeatureNodes features = model.build(graph, sample->cloud);
    const LossNodes losses = build_losses(graph, features, sample->labels, loss_config, alpha);
    graph.forward();
    if (auto bad = graph.first_non_finite()) {
      throw DataError("train: non-finite value at " + graph.describe(*bad));
    }
    graph.set_root(sim_only ? losses.l_sim : losses.total);
    graph.backward();
    for (std::size_t p = 0; p < grads.size(); ++p) {
      const Matrix& g = graph.grad(features.parameters[p]);
      for (std::size_t i = 0; i < g.size(); ++i) grads[p][i] += g[i];
    }
    const LossValues v = read_losses(graph, losses);
    mean.l_sim += v.l_sim;
    mean.l_cf += v.l_cf;
    mean.l_sem += v.l_sem;
    mean.total += v.total;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (Matrix& g : grads) {
    for (double& x : g.values()) x *= inv;
  }
  mean.l_sim *= inv;
  mean.l_cf *= inv;
  mean.l_sem *= inv;
  mean.total *= inv;
  return mean;
}

LossValues train_step(Model& model, std::span<const Sample* const> batch, TrainState& state,
                      const TrainConfig& train_config, const LossConfig& loss_config) {
  const bool warmup = state.epoch < train_config.warmup_epochs;
  std::vector<Matrix> grads;
  LossValues values = batch_gradients(model, batch, alpha_at_epoch(state.epoch, loss_config),
                                      warmup, loss_config, grads);
  if (!std::isfinite(values.total)) throw DataError("train: non-finite loss");
  adam_update(model.mutable_parameters(), grads, state, lr_at_epoch(state.epoch, train_config),
              train_config);
  return values;
}

std::vector<EpochLog> fit(Model& model, std::span<const Sample> dataset,
                          const TrainConfig& train_config, const LossConfig& loss_config,
                          const FitOptions& options) {
  train_config.validate();
  loss_config.validate();
  std::vector<EpochLog> log;
  if (train_config.max_epochs == 0) return log;
  if (dataset.empty()) throw DataError("train: empty dataset");

  TrainState state = TrainState::fresh(model, train_config.seed);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    if (train_config.max_steps > 0 && state.step >= train_config.max_steps) break;
    state.epoch = epoch;
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), state.rng);

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr_at_epoch(epoch, train_config);
    entry.alpha = alpha_at_epoch(epoch, loss_config);
    std::size_t steps = 0;
    std::vector<const Sample*> batch;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      if (train_config.max_steps > 0 && state.step >= train_config.max_steps) break;
      batch.clear();
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      for (std::size_t k = start; k < end; ++k) batch.push_back(&dataset[order[k]]);
      const LossValues v = train_step(model, batch, state, train_config, loss_config);
      entry.loss.l_sim += v.l_sim;
      entry.loss.l_cf += v.l_cf;
      entry.loss.l_sem += v.l_sem;
      entry.loss.total += v.total;
      ++steps;
    }
    if (steps == 0) break;
    const double inv = 1.0 / static_cast<double>(steps);
    entry.loss.l_sim *= inv;
    entry.loss.l_cf *= inv;
    entry.loss.l_sem *= inv;
    entry.loss.total *= inv;
    entry.step = state.step;
    log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);

    if (train_config.checkpoint_every > 0 && !options.checkpoint_dir.empty() &&
        (epoch + 1) % train_config.checkpoint_every == 0) {
      save_checkpoint(options.checkpoint_dir / ("epoch_" + std::to_string(epoch + 1) + ".sgw"),
                      model.parameters());
    }
  }
  return log;
}

std::string format_train_log(std::span<const EpochLog> log) {
  std::string out = "epoch,step,l_sim,l_cf,l_sem,total,lr,alpha\n";
  for (const EpochLog& e : log) {
    out += std::to_string(e.epoch) + "," + std::to_string(e.step) + "," +
           format_double(e.loss.l_sim) + "," + format_double(e.loss.l_cf) + "," +
           format_double(e.loss.l_sem) + "," + format_double(e.loss.total) + "," +
           format_double(e.lr) + "," + format_double(e.alpha) + "\n";
  }
  return out;
}

}  // namespace simgroup
