#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simgroup/pointset.hpp"

namespace simgroup {

enum class Primitive { kBox, kEllipsoid };

struct ClassShape {
  Primitive primitive = Primitive::kBox;
  double half_extent_min = 0.08;
  double half_extent_max = 0.16;
  std::array<double, 3> color{};
};

// Default per-class primitive, size range and color; even classes are boxes,
// odd classes ellipsoids.
ClassShape default_class_shape(std::size_t cls);

struct SceneSpec {
  std::size_t n_points = 512;
  std::size_t n_classes = 3;
  std::size_t instances_min = 4;
  std::size_t instances_max = 8;
  std::array<double, 3> room = {2.0, 2.0, 1.0};
  double min_separation = 0.6;
  double noise_sigma = 0.005;
  double color_sigma = 0.03;
  // Fraction of points scattered uniformly through the room as background
  // (instance -1, semantic class 0).
  double background_fraction = 0.0;
  // Empty means default_class_shape for each class.
  std::vector<ClassShape> shapes;

  void validate() const;
  ClassShape shape(std::size_t cls) const;
  // Attribute count of generated clouds: XYZ + RGB.
  static constexpr std::size_t kDims = 6;

  friend bool operator==(const SceneSpec& a, const SceneSpec& b) {
    return a.n_points == b.n_points && a.n_classes == b.n_classes &&
           a.instances_min == b.instances_min && a.instances_max == b.instances_max &&
           a.room == b.room && a.min_separation == b.min_separation &&
           a.noise_sigma == b.noise_sigma && a.color_sigma == b.color_sigma &&
           a.background_fraction == b.background_fraction;
  }
};

struct GeneratedScene {
  PointCloud cloud;
  LabelSet labels;
  // Primitive placed for each instance id.
  struct Placement {
    int cls = 0;
    Primitive primitive = Primitive::kBox;
    std::array<double, 3> center{};
    std::array<double, 3> half_extent{};
  };
  std::vector<Placement> placements;
};

// Throws DataError when the instances cannot be placed with the required
// center separation within 1000 attempts each.
GeneratedScene generate_scene(const SceneSpec& spec, std::uint64_t seed);

// Unstructured cloud with consistent labels for gradient checks and property
// tests. Attributes are uniform in [0, 1); between 1 and n_points / 2
// instances, each with a random class, plus no background.
GeneratedScene random_labeled_cloud(std::size_t n_points, std::size_t dims,
                                    std::size_t n_classes, std::uint64_t seed);

struct DbscanParams {
  double eps = 0.05;
  std::size_t min_pts = 4;

  void validate() const;
};

// Classic DBSCAN on XYZ over the listed points (neighborhoods include the
// point itself). Returns a cluster id per listed point, -1 for noise. A
// border point joins the first cluster, in index order, that reaches it.
std::vector<int> dbscan(const PointCloud& cloud, std::span<const std::size_t> points,
                        const DbscanParams& params);

// DBSCAN separately inside each semantic class; ids dense across classes in
// ascending class order. Unlabeled points stay -1.
std::vector<int> dbscan_instances(const PointCloud& cloud, std::span<const int> semantic,
                                  const DbscanParams& params);

}  // namespace simgroup
