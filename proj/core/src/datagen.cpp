#include "simgroup/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <tuple>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"

namespace simgroup {
namespace {

constexpr int kMaxPlacementAttempts = 1000;
constexpr std::size_t kMinPointsPerInstance = 16;
constexpr std::size_t kGridThreshold = 10000;

double squared_distance(const PointCloud& cloud, std::size_t a, std::size_t b) {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double t = cloud.attrs(a, k) - cloud.attrs(b, k);
    d += t * t;
  }
  return d;
}

// Neighborhoods (including the point itself) by brute force or, for large
// inputs, a uniform grid with cell size eps. Both return the same sets.
std::vector<std::vector<std::size_t>> neighborhoods(const PointCloud& cloud,
                                                    std::span<const std::size_t> points,
                                                    double eps) {
  const double eps2 = eps * eps;
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> out(n);
  if (n < kGridThreshold) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (squared_distance(cloud, points[a], points[b]) <= eps2) out[a].push_back(b);
      }
    }
    return out;
  }
  using Key = std::tuple<long long, long long, long long>;
  auto key_of = [&](std::size_t local) {
    const auto p = cloud.xyz(points[local]);
    return Key{static_cast<long long>(std::floor(p[0] / eps)),
               static_cast<long long>(std::floor(p[1] / eps)),
               static_cast<long long>(std::floor(p[2] / eps))};
  };
  std::map<Key, std::vector<std::size_t>> grid;
  for (std::size_t a = 0; a < n; ++a) grid[key_of(a)].push_back(a);
  for (std::size_t a = 0; a < n; ++a) {
    const auto [x, y, z] = key_of(a);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(Key{x + dx, y + dy, z + dz});
          if (it == grid.end()) continue;
          for (std::size_t b : it->second) {
            if (squared_distance(cloud, points[a], points[b]) <= eps2) out[a].push_back(b);
          }
        }
      }
    }
    std::sort(out[a].begin(), out[a].end());
  }
  return out;
}

}  // namespace

ClassShape default_class_shape(std::size_t cls) {
  static constexpr std::array<std::array<double, 3>, 6> kPalette = {{
      {0.85, 0.25, 0.20},
      {0.20, 0.75, 0.30},
      {0.20, 0.35, 0.85},
      {0.90, 0.80, 0.20},
      {0.70, 0.30, 0.80},
      {0.20, 0.80, 0.80},
  }};
  ClassShape s;
  s.primitive = cls % 2 == 0 ? Primitive::kBox : Primitive::kEllipsoid;
  s.half_extent_min = 0.08 + 0.01 * static_cast<double>(cls % 3);
  s.half_extent_max = 0.15 + 0.01 * static_cast<double>(cls % 3);
  s.color = kPalette[cls % kPalette.size()];
  return s;
}

void SceneSpec::validate() const {
  if (n_classes < 1) throw ConfigError("scene spec: n_classes must be >= 1");
  if (instances_min < 1 || instances_max < instances_min) {
    throw ConfigError("scene spec: need 1 <= instances_min <= instances_max");
  }
  if (!(min_separation > 0.0)) throw ConfigError("scene spec: min_separation must be > 0");
  if (!(background_fraction >= 0.0 && background_fraction < 1.0)) {
    throw ConfigError("scene spec: background_fraction must lie in [0, 1)");
  }
  if (noise_sigma < 0.0 || color_sigma < 0.0) {
    throw ConfigError("scene spec: noise must be nonnegative");
  }
  for (double r : room) {
    if (!(r > 0.0)) throw ConfigError("scene spec: room extents must be positive");
  }
  const auto background = static_cast<std::size_t>(
      std::llround(background_fraction * static_cast<double>(n_points)));
  if ((n_points - background) / instances_max < kMinPointsPerInstance) {
    throw ConfigError("scene spec: fewer than 16 points per instance");
  }
  if (!shapes.empty() && shapes.size() != n_classes) {
    throw ConfigError("scene spec: shape list does not match n_classes");
  }
}

ClassShape SceneSpec::shape(std::size_t cls) const {
  return shapes.empty() ? default_class_shape(cls) : shapes[cls];
}

GeneratedScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, 0x5343454EULL));
  GeneratedScene scene;

  const std::size_t k =
      spec.instances_min + uniform_index(rng, spec.instances_max - spec.instances_min + 1);
  for (std::size_t i = 0; i < k; ++i) {
    GeneratedScene::Placement pl;
    pl.cls = static_cast<int>(uniform_index(rng, spec.n_classes));
    const ClassShape shape = spec.shape(static_cast<std::size_t>(pl.cls));
    pl.primitive = shape.primitive;
    for (double& h : pl.half_extent) h = uniform(rng, shape.half_extent_min, shape.half_extent_max);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      for (int a = 0; a < 3; ++a) {
        const double lo = pl.half_extent[a];
        const double hi = spec.room[a] - pl.half_extent[a];
        pl.center[a] = hi > lo ? uniform(rng, lo, hi) : 0.5 * spec.room[a];
      }
      placed = std::all_of(scene.placements.begin(), scene.placements.end(),
                           [&](const GeneratedScene::Placement& other) {
                             double d = 0.0;
                             for (int a = 0; a < 3; ++a) {
                               d += (pl.center[a] - other.center[a]) *
                                    (pl.center[a] - other.center[a]);
                             }
                             return std::sqrt(d) >= spec.min_separation;
                           });
    }
    if (!placed) {
      throw DataError("scene spec infeasible: could not place instance " + std::to_string(i) +
                      " with separation " + std::to_string(spec.min_separation));
    }
    scene.placements.push_back(pl);
  }

  const auto n_background = static_cast<std::size_t>(
      std::llround(spec.background_fraction * static_cast<double>(spec.n_points)));
  const std::size_t n_instance_points = spec.n_points - n_background;

  Matrix attrs(spec.n_points, SceneSpec::kDims);
  std::vector<int> semantic(spec.n_points, 0);
  std::vector<int> instance(spec.n_points, kBackground);
  std::size_t row = 0;
  auto put_color = [&](std::size_t r, const std::array<double, 3>& base) {
    for (int c = 0; c < 3; ++c) {
      attrs(r, 3 + c) = std::clamp(base[c] + spec.color_sigma * standard_normal(rng), 0.0, 1.0);
    }
  };
  for (std::size_t i = 0; i < k; ++i) {
    const auto& pl = scene.placements[i];
    const std::size_t count = n_instance_points / k + (i < n_instance_points % k ? 1 : 0);
    const ClassShape shape = spec.shape(static_cast<std::size_t>(pl.cls));
    for (std::size_t j = 0; j < count; ++j, ++row) {
      std::array<double, 3> u{};
      if (pl.primitive == Primitive::kBox) {
        for (double& v : u) v = uniform(rng, -1.0, 1.0);
      } else {
        do {
          for (double& v : u) v = uniform(rng, -1.0, 1.0);
        } while (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > 1.0);
      }
      for (int a = 0; a < 3; ++a) {
        attrs(row, a) =
            pl.center[a] + pl.half_extent[a] * u[a] + spec.noise_sigma * standard_normal(rng);
      }
      put_color(row, shape.color);
      semantic[row] = pl.cls;
      instance[row] = static_cast<int>(i);
    }
  }
  for (; row < spec.n_points; ++row) {
    for (int a = 0; a < 3; ++a) attrs(row, a) = uniform(rng, 0.0, spec.room[a]);
    put_color(row, {0.5, 0.5, 0.5});
    semantic[row] = 0;
    instance[row] = kBackground;
  }

  std::vector<std::size_t> order(spec.n_points);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  PointCloud unshuffled(std::move(attrs));
  scene.cloud = unshuffled.subset(order);
  scene.labels.n_classes = static_cast<int>(spec.n_classes);
  for (std::size_t p : order) {
    scene.labels.semantic.push_back(semantic[p]);
    scene.labels.instance.push_back(instance[p]);
  }
  return scene;
}

GeneratedScene random_labeled_cloud(std::size_t n_points, std::size_t dims,
                                    std::size_t n_classes, std::uint64_t seed) {
  if (n_points < 2 || dims < 3 || n_classes < 1) {
    throw ConfigError("random_labeled_cloud: need n_points >= 2, dims >= 3, n_classes >= 1");
  }
  Rng rng(derive_seed(seed, 0x524E44ULL));
  GeneratedScene out;
  Matrix attrs(n_points, dims);
  for (double& v : attrs.values()) v = uniform01(rng);
  out.cloud = PointCloud(std::move(attrs));
  const std::size_t k = 1 + uniform_index(rng, n_points / 2);
  std::vector<int> instance_class(k);
  for (int& c : instance_class) c = static_cast<int>(uniform_index(rng, n_classes));
  out.labels.n_classes = static_cast<int>(n_classes);
  for (std::size_t p = 0; p < n_points; ++p) {
    // Every instance gets at least one point.
    const std::size_t id = p < k ? p : uniform_index(rng, k);
    out.labels.instance.push_back(static_cast<int>(id));
    out.labels.semantic.push_back(instance_class[id]);
  }
  return out;
}

void DbscanParams::validate() const {
  if (!(eps > 0.0)) throw ConfigError("dbscan: eps must be positive");
  if (min_pts < 1) throw ConfigError("dbscan: min_pts must be >= 1");
}

std::vector<int> dbscan(const PointCloud& cloud, std::span<const std::size_t> points,
                        const DbscanParams& params) {
  params.validate();
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const auto nbrs = neighborhoods(cloud, points, params.eps);
  std::vector<int> label(points.size(), kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] != kUnvisited) continue;
    if (nbrs[i].size() < params.min_pts) {
      label[i] = kNoise;
      continue;
    }
    label[i] = cluster;
    std::deque<std::size_t> queue(nbrs[i].begin(), nbrs[i].end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (label[q] == kNoise) label[q] = cluster;
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      if (nbrs[q].size() >= params.min_pts) {
        queue.insert(queue.end(), nbrs[q].begin(), nbrs[q].end());
      }
    }
    ++cluster;
  }
  return label;
}

std::vector<int> dbscan_instances(const PointCloud& cloud, std::span<const int> semantic,
                                  const DbscanParams& params) {
  if (semantic.size() != cloud.n_points()) {
    throw DataError("dbscan_instances: label count does not match the cloud");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t p = 0; p < semantic.size(); ++p) {
    if (semantic[p] != kUnlabeled) by_class[semantic[p]].push_back(p);
  }
  std::vector<int> out(cloud.n_points(), kBackground);
  int offset = 0;
  for (const auto& [cls, points] : by_class) {
    const std::vector<int> local = dbscan(cloud, points, params);
    int max_id = -1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (local[i] >= 0) {
        out[points[i]] = offset + local[i];
        max_id = std::max(max_id, local[i]);
      }
    }
    offset += max_id + 1;
  }
  return out;
}

}  // namespace simgroup
