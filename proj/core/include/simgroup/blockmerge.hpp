#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "simgroup/grouping.hpp"
#include "simgroup/model.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

struct Block {
  std::vector<std::size_t> points;  // indices into the scene cloud
  std::array<double, 2> origin{};   // XY of the window's min corner
  std::size_t col = 0;              // window position along x
  std::size_t row = 0;              // window position along y
};

// Overlapping XY windows in snake order: even rows left to right, odd rows
// right to left. Windows are half-open except the last one along each axis,
// which also takes points on the max face. Empty windows are dropped.
struct BlockPartition {
  std::vector<Block> blocks;
  double block_size = 1.0;
  double stride = 0.5;
  std::size_t cols = 0;
  std::size_t rows = 0;
};

BlockPartition partition_scene(const PointCloud& cloud, double block_size, double stride);

struct SceneBounds {
  std::array<double, 3> min{};
  std::array<double, 3> max{};

  static SceneBounds of(const PointCloud& cloud);
};

std::array<std::uint32_t, 3> voxel_bins(const std::array<double, 3>& p, const SceneBounds& bounds,
                                        std::uint32_t resolution);
std::uint64_t voxel_index(const std::array<double, 3>& p, const SceneBounds& bounds,
                          std::uint32_t resolution = 400);

// resolution^3 cells holding an instance id, -1 when unset. Stored sparsely;
// only written cells take memory.
class VoxelGrid {
 public:
  VoxelGrid(SceneBounds bounds, std::uint32_t resolution = 400)
      : bounds_(bounds), resolution_(resolution) {}

  int get(std::uint64_t k) const {
    const auto it = cells_.find(k);
    return it == cells_.end() ? -1 : it->second;
  }
  void set(std::uint64_t k, int value) { cells_[k] = value; }
  std::uint64_t index_of(const std::array<double, 3>& p) const {
    return voxel_index(p, bounds_, resolution_);
  }
  const SceneBounds& bounds() const { return bounds_; }
  std::uint32_t resolution() const { return resolution_; }
  std::size_t written_cells() const { return cells_.size(); }

 private:
  SceneBounds bounds_;
  std::uint32_t resolution_;
  std::unordered_map<std::uint64_t, int> cells_;
};

// PL[i][j]: instance label of the j-th point of block i, -1 for none.
using BlockLabels = std::vector<std::vector<int>>;

// Stitches per-block instance labels into scene labels through the voxel
// grid. Later blocks reuse the most frequent existing id among the cells of
// each local instance when it covers at least `mode_min` cells, and take a
// fresh id otherwise.
std::vector<int> block_merging(VoxelGrid& grid, const PointCloud& cloud,
                               const BlockPartition& partition, const BlockLabels& labels,
                               std::size_t mode_min);

struct SceneConfig {
  double block_size = 1.0;
  double stride = 0.5;
  std::uint32_t voxel_resolution = 400;
  std::size_t mode_min = 5;

  void validate() const;
  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct ScenePrediction {
  Prediction prediction;  // scene-level instances, semantics and boxes
  BlockPartition partition;
  SceneBounds bounds;
};

// Per-block inference on XY-recentered blocks, then block_merging.
ScenePrediction infer_scene(const Model& model, const PointCloud& cloud,
                            const GroupingConfig& grouping, const SceneConfig& scene,
                            std::uint64_t seed);

// Dense scene instances from stitched labels; class is the mode of the point
// semantics and confidence the max over contributing block instances.
InstanceResult scene_instances(std::span<const int> labels, std::span<const int> semantic,
                               std::span<const double> point_confidence);

// `key=value` sidecar describing bounds, block grid and stitching settings.
std::string format_scene_meta(const ScenePrediction& scene, const SceneConfig& config);

}  // namespace simgroup
