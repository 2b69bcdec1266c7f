#include <doctest.h>

#include <cmath>
#include <numeric>
#include <map>
#include <set>

#include "oracles.hpp"
#include "simgroup/datagen.hpp"
#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"

using namespace simgroup;

TEST_CASE("generation is deterministic per seed") {
  const SceneSpec spec;
  const GeneratedScene a = generate_scene(spec, 42);
  const GeneratedScene b = generate_scene(spec, 42);
  CHECK(a.cloud == b.cloud);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(generate_scene(spec, 43).cloud == a.cloud);
}

TEST_CASE("generated scenes satisfy the label contract") {
  const SceneSpec spec;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GeneratedScene s = generate_scene(spec, seed);
    CHECK(s.cloud.n_points() == spec.n_points);
    CHECK(s.cloud.dims() == SceneSpec::kDims);
    CHECK_NOTHROW(validate_labels(s.labels, s.cloud.n_points()));
    const int k = s.labels.instance_count();
    CHECK(k >= 4);
    CHECK(k <= 8);
    CHECK(s.placements.size() == static_cast<std::size_t>(k));
    std::set<int> ids(s.labels.instance.begin(), s.labels.instance.end());
    CHECK(ids.size() == static_cast<std::size_t>(k));  // dense, every instance has points
  }
}

TEST_CASE("one instance per scene") {
  SceneSpec spec;
  spec.instances_min = 1;
  spec.instances_max = 1;
  const GeneratedScene s = generate_scene(spec, 5);
  for (int id : s.labels.instance) CHECK(id == 0);
}

TEST_CASE("instances are separated and stay inside their primitives") {
  const SceneSpec spec;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GeneratedScene s = generate_scene(spec, seed);
    for (std::size_t a = 0; a < s.placements.size(); ++a) {
      for (std::size_t b = a + 1; b < s.placements.size(); ++b) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double t = s.placements[a].center[k] - s.placements[b].center[k];
          d += t * t;
        }
        CHECK(std::sqrt(d) >= spec.min_separation);
      }
    }
    const double slack = 3.0 * spec.noise_sigma + 1e-12;
    for (std::size_t p = 0; p < s.cloud.n_points(); ++p) {
      const auto& pl = s.placements[static_cast<std::size_t>(s.labels.instance[p])];
      CHECK(s.labels.semantic[p] == pl.cls);
      for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(s.cloud.attrs(p, k) - pl.center[k]) <= pl.half_extent[k] + slack);
      }
    }
  }
}

TEST_CASE("background scatter is labeled background") {
  SceneSpec spec;
  spec.background_fraction = 0.25;
  const GeneratedScene s = generate_scene(spec, 9);
  std::size_t bg = 0;
  for (std::size_t p = 0; p < s.cloud.n_points(); ++p) {
    if (s.labels.instance[p] < 0) {
      ++bg;
      CHECK(s.labels.semantic[p] == 0);
    }
  }
  CHECK(bg == 128);
}

TEST_CASE("impossible placement is a data error") {
  SceneSpec spec;
  spec.room = {0.5, 0.5, 0.5};
  spec.instances_min = 8;
  CHECK_THROWS_AS(generate_scene(spec, 1), DataError);
}

TEST_CASE("scene spec validation") {
  SceneSpec spec;
  spec.instances_min = 9;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SceneSpec{};
  spec.background_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("random labeled clouds are valid") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GeneratedScene s = random_labeled_cloud(16, 6, 3, seed);
    CHECK_NOTHROW(validate_labels(s.labels, 16));
    CHECK(s.labels.instance_count() >= 1);
    CHECK(s.labels.instance_count() <= 8);
  }
}

namespace {

PointCloud cloud_of(const std::vector<std::array<double, 3>>& pts) {
  Matrix m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) m(i, static_cast<std::size_t>(k)) = pts[i][k];
  }
  return PointCloud(m);
}

}  // namespace

TEST_CASE("dbscan separates distant clusters and follows chains") {
  DbscanParams params;
  params.eps = 0.1;
  params.min_pts = 3;
  std::vector<std::array<double, 3>> pts;
  for (int k = 0; k < 5; ++k) pts.push_back({0.05 * k, 0, 0});
  for (int k = 0; k < 5; ++k) pts.push_back({1.0 + 0.05 * k, 0, 0});
  const std::vector<int> sem(10, 0);
  const std::vector<int> ids = dbscan_instances(cloud_of(pts), sem, params);
  CHECK(std::set<int>(ids.begin(), ids.begin() + 5) == std::set<int>{0});
  CHECK(std::set<int>(ids.begin() + 5, ids.end()) == std::set<int>{1});

  std::vector<std::array<double, 3>> chain;
  for (int k = 0; k < 30; ++k) chain.push_back({0.09 * k, 0, 0});
  const std::vector<int> sem2(30, 0);
  for (int id : dbscan_instances(cloud_of(chain), sem2, params)) CHECK(id == 0);
}

TEST_CASE("dbscan ids are dense across classes and skip unlabeled points") {
  DbscanParams params;
  params.eps = 0.1;
  params.min_pts = 2;
  const std::vector<std::array<double, 3>> pts = {
      {0, 0, 0}, {0.05, 0, 0}, {5, 0, 0}, {5.05, 0, 0}, {9, 9, 9}, {9, 9, 9.01}};
  const std::vector<int> sem = {1, 1, 0, 0, -1, -1};
  CHECK(dbscan_instances(cloud_of(pts), sem, params) == std::vector<int>{1, 1, 0, 0, -1, -1});
}

TEST_CASE("dbscan matches the transitive-closure oracle on small random sets") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + uniform_index(rng, 29);
    std::vector<std::array<double, 3>> pts(n);
    for (auto& p : pts) p = {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 0.2)};
    DbscanParams params;
    params.eps = uniform(rng, 0.05, 0.3);
    params.min_pts = 1 + uniform_index(rng, 5);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const std::vector<int> got = dbscan(cloud_of(pts), all, params);
    const std::vector<int> want = oracle::dbscan(pts, params.eps, params.min_pts);
    CHECK(got == want);
    CHECK(oracle::same_partition(got, want));
  }
}

TEST_CASE("grid-hashed dbscan agrees with a brute-force union-find reference") {
  Rng rng(77);
  std::vector<std::array<double, 3>> pts;
  for (int c = 0; c < 40; ++c) {
    const double cx = uniform(rng, 0, 6);
    const double cy = uniform(rng, 0, 6);
    for (int k = 0; k < 300; ++k) {
      pts.push_back({cx + 0.1 * standard_normal(rng), cy + 0.1 * standard_normal(rng),
                     0.05 * standard_normal(rng)});
    }
  }
  const std::size_t n = pts.size();
  REQUIRE(n >= 10000);
  const double eps = 0.03;
  const std::size_t min_pts = 4;
  auto near = [&](std::size_t a, std::size_t b) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += (pts[a][k] - pts[b][k]) * (pts[a][k] - pts[b][k]);
    return d <= eps * eps;
  };
  std::vector<std::size_t> count(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) count[a] += near(a, b) ? 1 : 0;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (count[a] < min_pts) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (count[b] >= min_pts && near(a, b)) parent[find(a)] = find(b);
    }
  }
  // Cluster order follows the smallest core index of each component.
  std::map<std::size_t, int> cluster_of_root;
  std::vector<int> want(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    if (count[a] < min_pts) continue;
    const auto [it, fresh] =
        cluster_of_root.emplace(find(a), static_cast<int>(cluster_of_root.size()));
    want[a] = it->second;
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (count[a] >= min_pts) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (count[b] >= min_pts && near(a, b) && (want[a] < 0 || want[b] < want[a])) {
        want[a] = want[b];
      }
    }
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  DbscanParams params;
  params.eps = eps;
  params.min_pts = min_pts;
  const std::vector<int> got = dbscan(cloud_of(pts), all, params);
  CHECK(got == want);
}
