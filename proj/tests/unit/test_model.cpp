#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "simgroup/datagen.hpp"
#include "simgroup/error.hpp"
#include "simgroup/model.hpp"
#include "simgroup/rng.hpp"

using namespace simgroup;

namespace {

PointCloud random_cloud(std::size_t n, std::size_t dims, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, dims);
  for (double& v : m.values()) v = uniform(rng, -1.0, 1.0);
  return PointCloud(m);
}

ModelConfig small_config(std::size_t dims) {
  ModelConfig c;
  c.input_dims = dims;
  c.backbone_widths = {8, 16};
  c.shared_dim = 12;
  c.head_dim = 6;
  c.n_classes = 3;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("all-zero weights give a zero similarity matrix") {
  Model model(small_config(3));  // parameters start at zero
  const SimilarityMatrix s = similarity(model.forward(random_cloud(5, 3, 1)));
  for (double v : s.distances.values()) CHECK(v == 0.0);
}

TEST_CASE("forward shapes") {
  ModelConfig c = small_config(3);
  const Model model = init_model(c);
  const FeatureBundle b = model.forward(random_cloud(4, 3, 2));
  CHECK(b.features.rows() == 4);
  CHECK(b.features.cols() == c.shared_dim);
  for (const Matrix* m : {&b.sim_features, &b.cf_features, &b.sem_features}) {
    CHECK(m->rows() == 4);
    CHECK(m->cols() == c.head_dim);
  }
  CHECK(b.logits.cols() == 3);
  CHECK(b.confidence.cols() == 1);
}

TEST_CASE("wrong input dimension is rejected") {
  const Model model = init_model(small_config(6));
  CHECK_THROWS_AS(model.forward(random_cloud(4, 3, 3)), DataError);
}

TEST_CASE("parameter count and names") {
  const Model model = init_model(small_config(3));
  // (3*8+8) + (8*16+16) + (32*12+12) + 3*(12*6+6) + (6*3+3) + (6*1+1)
  CHECK(model.parameter_count() == 32 + 144 + 396 + 234 + 21 + 7);
  CHECK(model.parameters().front().first == "backbone.0.weight");
  CHECK(model.parameters().back().first == "confidence.bias");
}

TEST_CASE("set_parameters rejects mismatched shapes") {
  Model model = init_model(small_config(3));
  auto params = model.parameters();
  params[0].second = Matrix(1, 1);
  CHECK_THROWS_AS(model.set_parameters(params), DataError);
}

TEST_CASE("model config text round trip") {
  ModelConfig c = small_config(6);
  c.backbone_widths = {5, 7, 9};
  CHECK(ModelConfig::from_text(c.to_text(), "m") == c);
}

TEST_CASE("permuting the input permutes every output row") {
  const Model model = init_model(small_config(6));
  const PointCloud cloud = random_cloud(12, 6, 4);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(5);
  shuffle(std::span<std::size_t>(perm), rng);

  const FeatureBundle a = model.forward(cloud);
  const FeatureBundle b = model.forward(cloud.subset(perm));
  const SimilarityMatrix sa = similarity(a);
  const SimilarityMatrix sb = similarity(b);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t k = 0; k < a.sim_features.cols(); ++k) {
      CHECK(b.sim_features(i, k) == doctest::Approx(a.sim_features(perm[i], k)));
    }
    CHECK(b.confidence(i, 0) == doctest::Approx(a.confidence(perm[i], 0)));
    for (std::size_t j = 0; j < perm.size(); ++j) {
      CHECK(sb(i, j) == doctest::Approx(sa(perm[i], perm[j])).epsilon(1e-9));
    }
  }
}

TEST_CASE("duplicating a point leaves the other outputs unchanged") {
  const Model model = init_model(small_config(6));
  const PointCloud cloud = random_cloud(9, 6, 6);
  std::vector<std::size_t> idx(9);
  std::iota(idx.begin(), idx.end(), 0);
  idx.push_back(4);
  const FeatureBundle a = model.forward(cloud);
  const FeatureBundle b = model.forward(cloud.subset(idx));
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t k = 0; k < a.features.cols(); ++k) {
      CHECK(b.features(i, k) == a.features(i, k));
    }
  }
  for (std::size_t k = 0; k < a.features.cols(); ++k) {
    CHECK(b.features(9, k) == doctest::Approx(a.features(4, k)).epsilon(1e-12));
  }
}

TEST_CASE("similarity of the 3-4-5 example") {
  const SimilarityMatrix s = similarity(Matrix{{0, 0}, {3, 4}});
  CHECK(s.distances == Matrix{{0, 5}, {5, 0}});
}

TEST_CASE("identical rows give a zero similarity matrix") {
  const SimilarityMatrix s = similarity(Matrix{{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  for (double v : s.distances.values()) CHECK(v == 0.0);
}

TEST_CASE("similarity matches the naive oracle on random features") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Matrix f(8, 4);
    for (double& v : f.values()) v = uniform(rng, -3.0, 3.0);
    const SimilarityMatrix s = similarity(f);
    const Matrix ref = oracle::naive_distances(f);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(std::abs(s.distances[k] - ref[k]) <= 1e-9);
    }
  }
}

TEST_CASE("similarity matrix invariants hold for forward outputs") {
  const Model model = init_model(small_config(6));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GeneratedScene scene = random_labeled_cloud(24, 6, 3, seed);
    const SimilarityMatrix s = similarity(model.forward(scene.cloud));
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s(i, i) == 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(s(i, j) == s(j, i));
        CHECK(s(i, j) >= 0.0);
        for (std::size_t k = 0; k < n; ++k) CHECK(s(i, k) <= s(i, j) + s(j, k) + 1e-9);
      }
    }
  }
}

TEST_CASE("predicted classes break ties toward the lower id") {
  CHECK(predicted_classes(Matrix{{1, 3, 3}, {0, 0, 0}, {5, 1, 2}}) == std::vector<int>{1, 0, 0});
}

TEST_CASE("initialization is seeded") {
  CHECK(init_model(small_config(3)).parameters() == init_model(small_config(3)).parameters());
  ModelConfig other = small_config(3);
  other.seed = 8;
  CHECK(init_model(other).parameters() != init_model(small_config(3)).parameters());
}
