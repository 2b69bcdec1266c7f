#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simgroup/matrix.hpp"

namespace simgroup {

inline constexpr int kUnlabeled = -1;
inline constexpr int kBackground = -1;

// N_p points with D >= 3 attributes each; columns 0..2 are XYZ in meters.
struct PointCloud {
  Matrix attrs;

  PointCloud() = default;
  explicit PointCloud(Matrix a);

  std::size_t n_points() const { return attrs.rows(); }
  std::size_t dims() const { return attrs.cols(); }
  std::array<double, 3> xyz(std::size_t i) const {
    return {attrs(i, 0), attrs(i, 1), attrs(i, 2)};
  }
  // Rows listed in `indices`, in that order.
  PointCloud subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct LabelSet {
  std::vector<int> semantic;  // class id in [0, n_classes) or kUnlabeled
  std::vector<int> instance;  // instance id >= 0 or kBackground
  int n_classes = 0;

  std::size_t size() const { return semantic.size(); }
  LabelSet subset(std::span<const std::size_t> indices) const;
  // Largest instance id plus one.
  int instance_count() const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// Throws DataError when XYZ is non-finite, the cloud is empty, or D < 3.
void validate_cloud(const PointCloud& cloud);
// Throws DataError on length mismatch, out-of-range ids, or an instance
// spanning two semantic classes.
void validate_labels(const LabelSet& labels, std::size_t n_points);

// Symmetric N_p x N_p binary matrix; G_ij = 1 iff i and j share an instance.
// Background rows and columns are all zero.
class GroundTruthGroups {
 public:
  GroundTruthGroups() = default;
  explicit GroundTruthGroups(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { bits_[i * n_ + j] = v ? 1 : 0; }
  std::vector<std::size_t> row_members(std::size_t i) const;

  friend bool operator==(const GroundTruthGroups&, const GroundTruthGroups&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// C_ij = 1 same instance, 2 same semantic class but different instance,
// 3 different semantic class.
class PairClassMatrix {
 public:
  PairClassMatrix() = default;
  explicit PairClassMatrix(std::size_t n) : n_(n), classes_(n * n, 3) {}

  std::size_t size() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return classes_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, int c) {
    classes_[i * n_ + j] = static_cast<std::uint8_t>(c);
  }

  friend bool operator==(const PairClassMatrix&, const PairClassMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> classes_;
};

// Background points pair as class 3 with everything except other background
// points of the same semantic class, which pair as class 2.
PairClassMatrix build_pair_classes(const LabelSet& labels);
GroundTruthGroups build_groups(const LabelSet& labels);

}  // namespace simgroup
