#include "simgroup/pointset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "simgroup/error.hpp"

namespace simgroup {

PointCloud::PointCloud(Matrix a) : attrs(std::move(a)) {}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), dims());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = attrs.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return PointCloud(std::move(out));
}

LabelSet LabelSet::subset(std::span<const std::size_t> indices) const {
  LabelSet out;
  out.n_classes = n_classes;
  out.semantic.reserve(indices.size());
  out.instance.reserve(indices.size());
  for (std::size_t i : indices) {
    out.semantic.push_back(semantic[i]);
    out.instance.push_back(instance[i]);
  }
  return out;
}

int LabelSet::instance_count() const {
  int mx = -1;
  for (int id : instance) mx = std::max(mx, id);
  return mx + 1;
}

void validate_cloud(const PointCloud& cloud) {
  if (cloud.n_points() == 0) throw DataError("point cloud has no points");
  if (cloud.dims() < 3) {
    throw DataError("point cloud needs at least 3 dims, got " + std::to_string(cloud.dims()));
  }
  for (std::size_t i = 0; i < cloud.n_points(); ++i) {
    for (std::size_t c = 0; c < cloud.dims(); ++c) {
      if (!std::isfinite(cloud.attrs(i, c))) {
        throw DataError("point " + std::to_string(i) + " has a non-finite attribute");
      }
    }
  }
}

void validate_labels(const LabelSet& labels, std::size_t n_points) {
  if (labels.semantic.size() != n_points || labels.instance.size() != n_points) {
    throw DataError("label count does not match " + std::to_string(n_points) + " points");
  }
  std::map<int, int> instance_class;
  for (std::size_t i = 0; i < n_points; ++i) {
    const int s = labels.semantic[i];
    const int inst = labels.instance[i];
    if (s != kUnlabeled && (s < 0 || s >= labels.n_classes)) {
      throw DataError("point " + std::to_string(i) + ": semantic id " + std::to_string(s) +
                      " outside [0, " + std::to_string(labels.n_classes) + ")");
    }
    if (inst < kBackground) {
      throw DataError("point " + std::to_string(i) + ": invalid instance id " +
                      std::to_string(inst));
    }
    if (inst == kBackground) continue;
    auto [it, inserted] = instance_class.emplace(inst, s);
    if (!inserted && it->second != s) {
      throw DataError("instance " + std::to_string(inst) + " spans semantic classes " +
                      std::to_string(it->second) + " and " + std::to_string(s));
    }
  }
}

std::vector<std::size_t> GroundTruthGroups::row_members(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j) {
    if ((*this)(i, j)) out.push_back(j);
  }
  return out;
}

PairClassMatrix build_pair_classes(const LabelSet& labels) {
  const std::size_t n = labels.size();
  PairClassMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int ii = labels.instance[i];
      const int ij = labels.instance[j];
      const bool same_class = labels.semantic[i] == labels.semantic[j];
      int cls = 3;
      if (ii != kBackground && ij != kBackground) {
        if (ii == ij) {
          cls = 1;
        } else if (same_class) {
          cls = 2;
        }
      } else if (ii == kBackground && ij == kBackground && same_class) {
        cls = i == j ? 1 : 2;
      }
      c.set(i, j, cls);
    }
  }
  return c;
}

GroundTruthGroups build_groups(const LabelSet& labels) {
  const std::size_t n = labels.size();
  GroundTruthGroups g(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.instance[i] == kBackground) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels.instance[j] == labels.instance[i]) g.set(i, j, true);
    }
  }
  return g;
}

}  // namespace simgroup
