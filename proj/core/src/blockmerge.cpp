#include "simgroup/blockmerge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {
namespace {

std::size_t window_count(double extent, double block_size, double stride) {
  if (extent <= block_size) return 1;
  return static_cast<std::size_t>(std::ceil((extent - block_size) / stride - 1e-9)) + 1;
}

bool in_window(double v, double start, double block_size, bool last) {
  if (v < start) return false;
  return last ? v <= start + block_size : v < start + block_size;
}

}  // namespace

BlockPartition partition_scene(const PointCloud& cloud, double block_size, double stride) {
  if (cloud.n_points() == 0) throw DataError("partition_scene: empty cloud");
  if (!(block_size > 0.0) || !(stride > 0.0)) {
    throw ConfigError("partition_scene: block size and stride must be positive");
  }
  const SceneBounds bounds = SceneBounds::of(cloud);
  BlockPartition part;
  part.block_size = block_size;
  part.stride = stride;
  part.cols = window_count(bounds.max[0] - bounds.min[0], block_size, stride);
  part.rows = window_count(bounds.max[1] - bounds.min[1], block_size, stride);

  for (std::size_t r = 0; r < part.rows; ++r) {
    for (std::size_t k = 0; k < part.cols; ++k) {
      const std::size_t c = r % 2 == 0 ? k : part.cols - 1 - k;
      Block block;
      block.col = c;
      block.row = r;
      block.origin = {bounds.min[0] + static_cast<double>(c) * stride,
                      bounds.min[1] + static_cast<double>(r) * stride};
      for (std::size_t p = 0; p < cloud.n_points(); ++p) {
        if (in_window(cloud.attrs(p, 0), block.origin[0], block_size, c + 1 == part.cols) &&
            in_window(cloud.attrs(p, 1), block.origin[1], block_size, r + 1 == part.rows)) {
          block.points.push_back(p);
        }
      }
      if (!block.points.empty()) part.blocks.push_back(std::move(block));
    }
  }
  return part;
}

SceneBounds SceneBounds::of(const PointCloud& cloud) {
  SceneBounds b;
  if (cloud.n_points() == 0) return b;
  b.min = cloud.xyz(0);
  b.max = b.min;
  for (std::size_t p = 1; p < cloud.n_points(); ++p) {
    for (int a = 0; a < 3; ++a) {
      b.min[a] = std::min(b.min[a], cloud.attrs(p, a));
      b.max[a] = std::max(b.max[a], cloud.attrs(p, a));
    }
  }
  return b;
}

std::array<std::uint32_t, 3> voxel_bins(const std::array<double, 3>& p, const SceneBounds& bounds,
                                        std::uint32_t resolution) {
  std::array<std::uint32_t, 3> bins{};
  for (int a = 0; a < 3; ++a) {
    const double extent = bounds.max[a] - bounds.min[a];
    if (!(extent > 0.0)) continue;
    const double scaled = std::floor(static_cast<double>(resolution) * (p[a] - bounds.min[a]) /
                                     extent);
    bins[a] = static_cast<std::uint32_t>(
        std::clamp(scaled, 0.0, static_cast<double>(resolution - 1)));
  }
  return bins;
}

std::uint64_t voxel_index(const std::array<double, 3>& p, const SceneBounds& bounds,
                          std::uint32_t resolution) {
  const auto b = voxel_bins(p, bounds, resolution);
  const std::uint64_t r = resolution;
  return (static_cast<std::uint64_t>(b[0]) * r + b[1]) * r + b[2];
}

std::vector<int> block_merging(VoxelGrid& grid, const PointCloud& cloud,
                               const BlockPartition& partition, const BlockLabels& labels,
                               std::size_t mode_min) {
  if (labels.size() != partition.blocks.size()) {
    throw DataError("block_merging: " + std::to_string(labels.size()) + " label sets for " +
                    std::to_string(partition.blocks.size()) + " blocks");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != partition.blocks[i].points.size()) {
      throw DataError("block_merging: block " + std::to_string(i) + " label count mismatch");
    }
  }

  std::vector<std::uint64_t> cell_of(cloud.n_points());
  for (std::size_t p = 0; p < cloud.n_points(); ++p) cell_of[p] = grid.index_of(cloud.xyz(p));

  int group_count = 0;
  for (std::size_t i = 0; i < partition.blocks.size(); ++i) {
    const Block& block = partition.blocks[i];
    if (i == 0) {
      for (std::size_t j = 0; j < block.points.size(); ++j) {
        grid.set(cell_of[block.points[j]], labels[0][j]);
        group_count = std::max(group_count, labels[0][j] + 1);
      }
      continue;
    }
    std::map<int, std::set<std::uint64_t>> instance_cells;
    for (std::size_t j = 0; j < block.points.size(); ++j) {
      if (labels[i][j] < 0) continue;
      instance_cells[labels[i][j]].insert(cell_of[block.points[j]]);
    }
    for (const auto& [local_id, cells] : instance_cells) {
      std::map<int, std::size_t> freq;
      for (std::uint64_t k : cells) {
        const int v = grid.get(k);
        if (v != -1) ++freq[v];
      }
      int mode = -1;
      std::size_t mode_count = 0;
      for (const auto& [value, count] : freq) {
        if (count > mode_count) {
          mode = value;
          mode_count = count;
        }
      }
      int assigned = mode;
      if (mode_count < mode_min || mode_count == 0) assigned = group_count++;
      for (std::uint64_t k : cells) grid.set(k, assigned);
    }
  }

  std::vector<int> out(cloud.n_points(), -1);
  for (std::size_t p = 0; p < cloud.n_points(); ++p) out[p] = grid.get(cell_of[p]);
  return out;
}

void SceneConfig::validate() const {
  if (!(block_size > 0.0) || !(stride > 0.0)) {
    throw ConfigError("scene: block_size and stride must be positive");
  }
  if (voxel_resolution < 1) throw ConfigError("scene: voxel_resolution must be >= 1");
}

InstanceResult scene_instances(std::span<const int> labels, std::span<const int> semantic,
                               std::span<const double> point_confidence) {
  std::map<int, int> dense;
  for (int id : labels) {
    if (id >= 0) dense.emplace(id, 0);
  }
  int next = 0;
  for (auto& [id, d] : dense) d = next++;

  InstanceResult r;
  r.point_instance.assign(labels.size(), -1);
  r.instance_count.assign(dense.size(), 0);
  r.instance_confidence.assign(dense.size(), 0.0);
  std::vector<std::map<int, std::size_t>> votes(dense.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] < 0) continue;
    const auto d = static_cast<std::size_t>(dense[labels[p]]);
    r.point_instance[p] = static_cast<int>(d);
    ++r.instance_count[d];
    ++votes[d][semantic[p]];
    r.instance_confidence[d] = std::max(r.instance_confidence[d], point_confidence[p]);
  }
  for (const auto& v : votes) {
    int best = -1;
    std::size_t best_count = 0;
    for (const auto& [cls, count] : v) {
      if (count > best_count) {
        best = cls;
        best_count = count;
      }
    }
    r.instance_class.push_back(best);
  }
  return r;
}

ScenePrediction infer_scene(const Model& model, const PointCloud& cloud,
                            const GroupingConfig& grouping, const SceneConfig& scene,
                            std::uint64_t seed) {
  scene.validate();
  ScenePrediction out;
  out.bounds = SceneBounds::of(cloud);
  out.partition = partition_scene(cloud, scene.block_size, scene.stride);

  const std::size_t n = cloud.n_points();
  std::vector<int> semantic(n, -1);
  std::vector<double> confidence(n, 0.0);
  BlockLabels labels;
  labels.reserve(out.partition.blocks.size());
  for (std::size_t b = 0; b < out.partition.blocks.size(); ++b) {
    const Block& block = out.partition.blocks[b];
    PointCloud local = cloud.subset(block.points);
    for (std::size_t r = 0; r < local.n_points(); ++r) {
      local.attrs(r, 0) -= block.origin[0];
      local.attrs(r, 1) -= block.origin[1];
    }
    const Prediction pred = infer_cloud(model, local, grouping, derive_seed(seed, b));
    labels.push_back(pred.instances.point_instance);
    for (std::size_t j = 0; j < block.points.size(); ++j) {
      const std::size_t p = block.points[j];
      if (semantic[p] < 0) semantic[p] = pred.semantic[j];
      const int local_id = pred.instances.point_instance[j];
      if (local_id >= 0) {
        confidence[p] = std::max(
            confidence[p], pred.instances.instance_confidence[static_cast<std::size_t>(local_id)]);
      }
    }
  }

  VoxelGrid grid(out.bounds, scene.voxel_resolution);
  const std::vector<int> merged = block_merging(grid, cloud, out.partition, labels,
                                                scene.mode_min);
  out.prediction.semantic = semantic;
  out.prediction.instances = scene_instances(merged, semantic, confidence);
  out.prediction.boxes = boxes_from_instances(cloud, out.prediction.instances);
  return out;
}

std::string format_scene_meta(const ScenePrediction& scene, const SceneConfig& config) {
  std::string out;
  const auto& b = scene.bounds;
  out += "bounds_min=" + format_double(b.min[0]) + "," + format_double(b.min[1]) + "," +
         format_double(b.min[2]) + "\n";
  out += "bounds_max=" + format_double(b.max[0]) + "," + format_double(b.max[1]) + "," +
         format_double(b.max[2]) + "\n";
  out += "block_size=" + format_double(config.block_size) + "\n";
  out += "stride=" + format_double(config.stride) + "\n";
  out += "grid_cols=" + std::to_string(scene.partition.cols) + "\n";
  out += "grid_rows=" + std::to_string(scene.partition.rows) + "\n";
  out += "blocks=" + std::to_string(scene.partition.blocks.size()) + "\n";
  out += "voxel_resolution=" + std::to_string(config.voxel_resolution) + "\n";
  out += "mode_min=" + std::to_string(config.mode_min) + "\n";
  return out;
}

}  // namespace simgroup
