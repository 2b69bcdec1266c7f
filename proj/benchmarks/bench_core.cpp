#include <benchmark/benchmark.h>

#include "simgroup/datagen.hpp"
#include "simgroup/grouping.hpp"
#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/rng.hpp"

using namespace simgroup;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = uniform(rng, -1.0, 1.0);
  return m;
}

GeneratedScene scene(std::size_t n_points) {
  SceneSpec spec;
  spec.n_points = n_points;
  return generate_scene(spec, 7);
}

// Embedding with one tight cluster per ground-truth instance.
Matrix clustered_features(const LabelSet& labels, std::size_t dims) {
  Rng rng(11);
  const Matrix centers = random_matrix(64, dims, 3);
  Matrix f(labels.size(), dims);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels.instance[i] + 1);
    for (std::size_t k = 0; k < dims; ++k) f(i, k) = centers(c, k) + 0.02 * standard_normal(rng);
  }
  return f;
}

void BM_Similarity(benchmark::State& state) {
  const Matrix f = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 1);
  for (auto _ : state) benchmark::DoNotOptimize(similarity(f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Similarity)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

void BM_GroupProposalsAndMerge(benchmark::State& state) {
  const GeneratedScene g = scene(static_cast<std::size_t>(state.range(0)));
  const SimilarityMatrix s = similarity(clustered_features(g.labels, 32));
  const std::vector<double> confidence(g.labels.size(), 0.9);
  const GroupingConfig config;
  for (auto _ : state) {
    const std::vector<double> th = estimate_th_s(s, g.labels.semantic, 3, config);
    const GroupProposalSet p = extract_proposals(s, confidence, th, g.labels.semantic, config);
    benchmark::DoNotOptimize(group_merge(p, config, 0));
  }
}
BENCHMARK(BM_GroupProposalsAndMerge)->Arg(512)->Arg(2048);

void BM_ForwardBackward(benchmark::State& state) {
  const GeneratedScene g = scene(static_cast<std::size_t>(state.range(0)));
  const Model model = init_model(ModelConfig{});
  const LossConfig losses;
  for (auto _ : state) {
    Graph graph;
    const FeatureNodes f = model.build(graph, g.cloud);
    const LossNodes l = build_losses(graph, f, g.labels, losses, 2.0);
    graph.set_root(l.total);
    graph.forward();
    graph.backward();
    benchmark::DoNotOptimize(graph.value(l.total));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
