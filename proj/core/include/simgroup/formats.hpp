#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simgroup/grouping.hpp"
#include "simgroup/pointset.hpp"

namespace simgroup {

// SPC1 text: `SPC1 <n_points> <dims> <n_classes>`, then per point D floats,
// the semantic id and the instance id. '#' starts a comment.
struct LabeledCloud {
  PointCloud cloud;
  LabelSet labels;
};

std::string format_spc(const PointCloud& cloud, const LabelSet& labels);
LabeledCloud parse_spc(std::string_view text, std::string_view source);
LabeledCloud read_spc(const std::filesystem::path& path);
void write_spc(const std::filesystem::path& path, const PointCloud& cloud, const LabelSet& labels);

// SIN1 text: `SIN1 <n_points> <n_instances>`, one instance id per point, then
// `inst <id> class <c> count <n> conf <f> box <xmin ymin zmin xmax ymax zmax>`
// per instance.
struct InstanceFile {
  InstanceResult instances;
  std::vector<Box> boxes;
};

std::string format_sin(const InstanceResult& result, std::span<const Box> boxes);
InstanceFile parse_sin(std::string_view text, std::string_view source);
InstanceFile read_sin(const std::filesystem::path& path);
void write_sin(const std::filesystem::path& path, const InstanceResult& result,
               std::span<const Box> boxes);

// SSM1 text sidecar with per-point predicted semantic classes:
// `SSM1 <n_points> <n_classes>` then one class id per line.
std::string format_ssm(std::span<const int> semantic, std::size_t n_classes);
std::vector<int> parse_ssm(std::string_view text, std::string_view source);

// Deterministic color for an instance id; unassigned (-1) is gray.
std::array<std::uint8_t, 3> instance_color(int id);

// ASCII PLY with x y z red green blue per vertex.
std::string format_ply(const PointCloud& cloud, std::span<const int> instance_labels);
void export_ply(const std::filesystem::path& path, const PointCloud& cloud,
                std::span<const int> instance_labels);

}  // namespace simgroup
