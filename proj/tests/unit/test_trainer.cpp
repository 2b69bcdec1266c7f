#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "simgroup/datagen.hpp"
#include "simgroup/error.hpp"
#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/trainer.hpp"

using namespace simgroup;

namespace {

ModelConfig tiny_model() {
  ModelConfig c;
  c.input_dims = 6;
  c.backbone_widths = {8, 8};
  c.shared_dim = 8;
  c.head_dim = 4;
  c.n_classes = 3;
  c.seed = 3;
  return c;
}

std::vector<Sample> tiny_dataset(std::size_t n, std::uint64_t seed) {
  SceneSpec spec;
  spec.n_points = 48;
  spec.instances_min = 2;
  spec.instances_max = 3;
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    GeneratedScene s = generate_scene(spec, seed + i);
    out.push_back({std::move(s.cloud), std::move(s.labels)});
  }
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const TrainConfig c;
  CHECK(lr_at_epoch(0, c) == 0.0005);
  CHECK(lr_at_epoch(19, c) == 0.0005);
  CHECK(lr_at_epoch(20, c) == 0.00025);
  CHECK(lr_at_epoch(39, c) == 0.00025);
  CHECK(lr_at_epoch(40, c) == 0.000125);
}

TEST_CASE("adam matches a hand-rolled reference") {
  const TrainConfig c;
  std::vector<NamedMatrix> params = {{"w", Matrix{{0.5, -1.5}}}};
  TrainState state;
  state.first_moment = {Matrix(1, 2)};
  state.second_moment = {Matrix(1, 2)};

  double x[2] = {0.5, -1.5};
  double m[2] = {0, 0};
  double v[2] = {0, 0};
  for (int t = 1; t <= 25; ++t) {
    // Gradient of 0.5 * ||x - (1, 2)||^2 plus a sign flip to exercise m.
    const double g0 = (x[0] - 1.0) * (t % 3 == 0 ? -1.0 : 1.0);
    const double g1 = x[1] - 2.0;
    adam_update(params, {Matrix{{g0, g1}}}, state, 0.01, c);
    const double g[2] = {g0, g1};
    for (int k = 0; k < 2; ++k) {
      m[k] = 0.9 * m[k] + 0.1 * g[k];
      v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
      const double mh = m[k] / (1.0 - std::pow(0.9, t));
      const double vh = v[k] / (1.0 - std::pow(0.999, t));
      x[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(std::abs(params[0].second[0] - x[0]) <= 1e-12);
    CHECK(std::abs(params[0].second[1] - x[1]) <= 1e-12);
  }
  CHECK(state.step == 25);
}

TEST_CASE("zero gradient with zero moments leaves parameters unchanged") {
  const TrainConfig c;
  std::vector<NamedMatrix> params = {{"w", Matrix{{0.25, 3.0}}}};
  TrainState state;
  state.first_moment = {Matrix(1, 2)};
  state.second_moment = {Matrix(1, 2)};
  adam_update(params, {Matrix(1, 2)}, state, 0.1, c);
  CHECK(params[0].second == Matrix{{0.25, 3.0}});
}

TEST_CASE("adam rejects mismatched gradients") {
  const TrainConfig c;
  std::vector<NamedMatrix> params = {{"w", Matrix(1, 2)}};
  TrainState state;
  state.first_moment = {Matrix(1, 2)};
  state.second_moment = {Matrix(1, 2)};
  CHECK_THROWS_AS(adam_update(params, {Matrix(2, 1)}, state, 0.1, c), DataError);
}

TEST_CASE("warmup steps leave the heads that do not feed L_SIM untouched") {
  Model model = init_model(tiny_model());
  const Model before = model;
  const std::vector<Sample> data = tiny_dataset(2, 10);
  const std::vector<const Sample*> batch = {&data[0], &data[1]};
  TrainConfig tc;
  TrainState state = TrainState::fresh(model, 1);
  state.epoch = 3;
  const LossValues v = train_step(model, batch, state, tc, {});
  CHECK(v.l_cf > 0.0);
  CHECK(v.l_sem > 0.0);
  for (std::size_t p = 0; p < model.parameters().size(); ++p) {
    const auto& [name, value] = model.parameters()[p];
    const bool off_path = name.starts_with("cf.") || name.starts_with("sem.") ||
                          name.starts_with("logits.") || name.starts_with("confidence.");
    if (off_path) {
      CHECK_MESSAGE(value == before.parameters()[p].second, name);
    } else if (name.ends_with(".weight")) {
      CHECK_MESSAGE(value != before.parameters()[p].second, name);
    }
  }

  // After warmup every head moves.
  Model after = init_model(tiny_model());
  TrainState late = TrainState::fresh(after, 1);
  late.epoch = 5;
  train_step(after, batch, late, tc, {});
  for (std::size_t p = 0; p < after.parameters().size(); ++p) {
    if (after.parameters()[p].first.ends_with(".weight")) {
      CHECK(after.parameters()[p].second != before.parameters()[p].second);
    }
  }
}

TEST_CASE("sim-only gradient equals the L_SIM gradient") {
  const Model model = init_model(tiny_model());
  const std::vector<Sample> data = tiny_dataset(1, 20);
  const std::vector<const Sample*> batch = {&data[0]};
  std::vector<Matrix> sim_only;
  batch_gradients(model, batch, 2.0, true, {}, sim_only);

  Graph g;
  const LossNodes nodes = build_losses(g, model.build(g, data[0].cloud), data[0].labels, {}, 2.0);
  g.set_root(nodes.l_sim);
  g.forward();
  g.backward();
  for (std::size_t p = 0; p < sim_only.size(); ++p) {
    CHECK(sim_only[p] == g.grad(g.parameters()[p]));
  }
}

TEST_CASE("identical steps from identical state give identical parameters") {
  const std::vector<Sample> data = tiny_dataset(2, 30);
  const std::vector<const Sample*> batch = {&data[0], &data[1]};
  Model a = init_model(tiny_model());
  Model b = init_model(tiny_model());
  TrainState sa = TrainState::fresh(a, 9);
  TrainState sb = TrainState::fresh(b, 9);
  train_step(a, batch, sa, {}, {});
  train_step(b, batch, sb, {}, {});
  CHECK(a.parameters() == b.parameters());
}

TEST_CASE("fit with zero epochs leaves the model untouched") {
  Model model = init_model(tiny_model());
  const Model before = model;
  TrainConfig tc;
  tc.max_epochs = 0;
  const std::vector<Sample> data = tiny_dataset(2, 40);
  CHECK(fit(model, data, tc, {}).empty());
  CHECK(model.parameters() == before.parameters());
}

TEST_CASE("fit is deterministic, honors max_steps and writes checkpoints") {
  const std::vector<Sample> data = tiny_dataset(6, 50);
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.batch_size = 2;
  tc.warmup_epochs = 1;
  tc.checkpoint_every = 2;
  tc.seed = 5;
  const auto dir = std::filesystem::temp_directory_path() / "simgroup_fit_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  Model a = init_model(tiny_model());
  Model b = init_model(tiny_model());
  std::size_t callbacks = 0;
  const auto la = fit(a, data, tc, {}, {dir, [&](const EpochLog&) { ++callbacks; }});
  const auto lb = fit(b, data, tc, {});
  CHECK(la.size() == 4);
  CHECK(callbacks == 4);
  CHECK(format_train_log(la) == format_train_log(lb));
  CHECK(a.parameters() == b.parameters());
  CHECK(la.back().step == 12);
  CHECK(std::filesystem::exists(dir / "epoch_2.sgw"));
  CHECK(std::filesystem::exists(dir / "epoch_4.sgw"));
  CHECK_FALSE(std::filesystem::exists(dir / "epoch_3.sgw"));

  tc.max_steps = 5;
  Model c = init_model(tiny_model());
  const auto lc = fit(c, data, tc, {});
  CHECK(lc.size() == 2);
  CHECK(lc.back().step == 5);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training lowers the loss on small synthetic scenes") {
  const std::vector<Sample> data = tiny_dataset(8, 60);
  TrainConfig tc;
  tc.max_epochs = 12;
  tc.warmup_epochs = 0;
  tc.lr_initial = 0.005;
  Model model = init_model(tiny_model());
  const auto log = fit(model, data, tc, {});
  CHECK(log.back().loss.total < log.front().loss.total);
}

TEST_CASE("train log header and row") {
  EpochLog e;
  e.epoch = 2;
  e.step = 30;
  e.loss = {1.5, 0.25, 0.5, 2.25};
  e.lr = 0.0005;
  e.alpha = 2;
  const std::vector<EpochLog> log = {e};
  CHECK(format_train_log(log) ==
        "epoch,step,l_sim,l_cf,l_sem,total,lr,alpha\n2,30,1.5,0.25,0.5,2.25,5e-04,2\n");
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.adam_beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
