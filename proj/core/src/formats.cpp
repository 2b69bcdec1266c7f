#include "simgroup/formats.hpp"

#include <cmath>

#include "simgroup/error.hpp"
#include "simgroup/rng.hpp"
#include "simgroup/textio.hpp"

namespace simgroup {
namespace {

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

int to_int(std::string_view tok, std::string_view source, std::size_t line) {
  const long long v = parse_int(tok, where(source, line));
  if (v < INT32_MIN || v > INT32_MAX) throw DataError(where(source, line) + ": id out of range");
  return static_cast<int>(v);
}

std::size_t to_count(std::string_view tok, std::string_view source, std::size_t line) {
  const long long v = parse_int(tok, where(source, line));
  if (v < 0) throw DataError(where(source, line) + ": negative count");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_spc(const PointCloud& cloud, const LabelSet& labels) {
  validate_labels(labels, cloud.n_points());
  std::string out = "SPC1 " + std::to_string(cloud.n_points()) + " " +
                    std::to_string(cloud.dims()) + " " + std::to_string(labels.n_classes) + "\n";
  for (std::size_t p = 0; p < cloud.n_points(); ++p) {
    for (std::size_t c = 0; c < cloud.dims(); ++c) {
      out += format_double(cloud.attrs(p, c));
      out += ' ';
    }
    out += std::to_string(labels.semantic[p]) + " " + std::to_string(labels.instance[p]) + "\n";
  }
  return out;
}

LabeledCloud parse_spc(std::string_view text, std::string_view source) {
  const auto lines = tokenize_lines(text);
  if (lines.empty() || lines[0].tokens.size() != 4 || lines[0].tokens[0] != "SPC1") {
    throw DataError(std::string(source) + ": expected 'SPC1 <n_points> <dims> <n_classes>'");
  }
  const auto& head = lines[0];
  const std::size_t n = to_count(head.tokens[1], source, head.line_no);
  const std::size_t dims = to_count(head.tokens[2], source, head.line_no);
  const std::size_t n_classes = to_count(head.tokens[3], source, head.line_no);
  if (lines.size() - 1 != n) {
    throw DataError(std::string(source) + ": header declares " + std::to_string(n) +
                    " points, found " + std::to_string(lines.size() - 1));
  }
  LabeledCloud out;
  Matrix attrs(n, dims);
  out.labels.n_classes = static_cast<int>(n_classes);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& line = lines[p + 1];
    if (line.tokens.size() != dims + 2) {
      throw DataError(where(source, line.line_no) + ": expected " + std::to_string(dims + 2) +
                      " fields, got " + std::to_string(line.tokens.size()));
    }
    for (std::size_t c = 0; c < dims; ++c) {
      attrs(p, c) = parse_double(line.tokens[c], where(source, line.line_no));
    }
    out.labels.semantic.push_back(to_int(line.tokens[dims], source, line.line_no));
    out.labels.instance.push_back(to_int(line.tokens[dims + 1], source, line.line_no));
  }
  out.cloud = PointCloud(std::move(attrs));
  validate_cloud(out.cloud);
  validate_labels(out.labels, n);
  return out;
}

LabeledCloud read_spc(const std::filesystem::path& path) {
  return parse_spc(read_file(path), path.string());
}

void write_spc(const std::filesystem::path& path, const PointCloud& cloud,
               const LabelSet& labels) {
  write_file(path, format_spc(cloud, labels));
}

std::string format_sin(const InstanceResult& result, std::span<const Box> boxes) {
  if (boxes.size() != result.n_instances()) {
    throw DataError("SIN1: box count does not match instance count");
  }
  std::string out = "SIN1 " + std::to_string(result.point_instance.size()) + " " +
                    std::to_string(result.n_instances()) + "\n";
  for (int id : result.point_instance) out += std::to_string(id) + "\n";
  for (std::size_t i = 0; i < result.n_instances(); ++i) {
    out += "inst " + std::to_string(i) + " class " + std::to_string(result.instance_class[i]) +
           " count " + std::to_string(result.instance_count[i]) + " conf " +
           format_double(result.instance_confidence[i]) + " box";
    for (double v : boxes[i].min) out += " " + format_double(v);
    for (double v : boxes[i].max) out += " " + format_double(v);
    out += "\n";
  }
  return out;
}

InstanceFile parse_sin(std::string_view text, std::string_view source) {
  const auto lines = tokenize_lines(text);
  if (lines.empty() || lines[0].tokens.size() != 3 || lines[0].tokens[0] != "SIN1") {
    throw DataError(std::string(source) + ": expected 'SIN1 <n_points> <n_instances>'");
  }
  const std::size_t n = to_count(lines[0].tokens[1], source, lines[0].line_no);
  const std::size_t k = to_count(lines[0].tokens[2], source, lines[0].line_no);
  if (lines.size() != 1 + n + k) {
    throw DataError(std::string(source) + ": expected " + std::to_string(n + k) +
                    " body lines, found " + std::to_string(lines.size() - 1));
  }
  InstanceFile out;
  auto& r = out.instances;
  for (std::size_t p = 0; p < n; ++p) {
    const auto& line = lines[1 + p];
    if (line.tokens.size() != 1) throw DataError(where(source, line.line_no) + ": expected id");
    const int id = to_int(line.tokens[0], source, line.line_no);
    if (id < -1 || (id >= 0 && static_cast<std::size_t>(id) >= k)) {
      throw DataError(where(source, line.line_no) + ": instance id " + std::to_string(id) +
                      " out of range");
    }
    r.point_instance.push_back(id);
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto& line = lines[1 + n + i];
    const auto& t = line.tokens;
    if (t.size() != 15 || t[0] != "inst" || t[2] != "class" || t[4] != "count" ||
        t[6] != "conf" || t[8] != "box") {
      throw DataError(where(source, line.line_no) + ": malformed instance line");
    }
    if (to_count(t[1], source, line.line_no) != i) {
      throw DataError(where(source, line.line_no) + ": instance ids must be dense and ordered");
    }
    r.instance_class.push_back(to_int(t[3], source, line.line_no));
    r.instance_count.push_back(to_count(t[5], source, line.line_no));
    r.instance_confidence.push_back(parse_double(t[7], where(source, line.line_no)));
    Box b;
    for (int a = 0; a < 3; ++a) {
      b.min[a] = parse_double(t[9 + a], where(source, line.line_no));
      b.max[a] = parse_double(t[12 + a], where(source, line.line_no));
    }
    out.boxes.push_back(b);
  }
  return out;
}

InstanceFile read_sin(const std::filesystem::path& path) {
  return parse_sin(read_file(path), path.string());
}

void write_sin(const std::filesystem::path& path, const InstanceResult& result,
               std::span<const Box> boxes) {
  write_file(path, format_sin(result, boxes));
}

std::string format_ssm(std::span<const int> semantic, std::size_t n_classes) {
  std::string out =
      "SSM1 " + std::to_string(semantic.size()) + " " + std::to_string(n_classes) + "\n";
  for (int c : semantic) out += std::to_string(c) + "\n";
  return out;
}

std::vector<int> parse_ssm(std::string_view text, std::string_view source) {
  const auto lines = tokenize_lines(text);
  if (lines.empty() || lines[0].tokens.size() != 3 || lines[0].tokens[0] != "SSM1") {
    throw DataError(std::string(source) + ": expected 'SSM1 <n_points> <n_classes>'");
  }
  const std::size_t n = to_count(lines[0].tokens[1], source, lines[0].line_no);
  if (lines.size() != n + 1) throw DataError(std::string(source) + ": point count mismatch");
  std::vector<int> out;
  for (std::size_t p = 0; p < n; ++p) {
    out.push_back(to_int(lines[p + 1].tokens.at(0), source, lines[p + 1].line_no));
  }
  return out;
}

std::array<std::uint8_t, 3> instance_color(int id) {
  if (id < 0) return {128, 128, 128};
  // Golden-ratio hue walk keeps consecutive ids far apart; value and
  // saturation vary with a hash so repeated hues still differ.
  const double hue = std::fmod(0.1 + 0.6180339887498949 * static_cast<double>(id), 1.0);
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(id));
  const double sat = 0.55 + 0.4 * static_cast<double>(h & 0xFF) / 255.0;
  const double val = 0.7 + 0.3 * static_cast<double>((h >> 8) & 0xFF) / 255.0;
  const double hh = hue * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = val * (1.0 - sat);
  const double q = val * (1.0 - sat * f);
  const double t = val * (1.0 - sat * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = val; g = t; b = p; break;
    case 1: r = q; g = val; b = p; break;
    case 2: r = p; g = val; b = t; break;
    case 3: r = p; g = q; b = val; break;
    case 4: r = t; g = p; b = val; break;
    default: r = val; g = p; b = q; break;
  }
  auto to_byte = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  std::array<std::uint8_t, 3> rgb = {to_byte(r), to_byte(g), to_byte(b)};
  if (rgb == std::array<std::uint8_t, 3>{128, 128, 128}) rgb[0] = 129;
  return rgb;
}

std::string format_ply(const PointCloud& cloud, std::span<const int> instance_labels) {
  if (instance_labels.size() != cloud.n_points()) {
    throw DataError("PLY export: " + std::to_string(instance_labels.size()) + " labels for " +
                    std::to_string(cloud.n_points()) + " points");
  }
  std::string out = "ply\nformat ascii 1.0\nelement vertex " +
                    std::to_string(cloud.n_points()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t p = 0; p < cloud.n_points(); ++p) {
    const auto rgb = instance_color(instance_labels[p]);
    out += format_fixed(cloud.attrs(p, 0), 6) + " " + format_fixed(cloud.attrs(p, 1), 6) + " " +
           format_fixed(cloud.attrs(p, 2), 6) + " " + std::to_string(rgb[0]) + " " +
           std::to_string(rgb[1]) + " " + std::to_string(rgb[2]) + "\n";
  }
  return out;
}

void export_ply(const std::filesystem::path& path, const PointCloud& cloud,
                std::span<const int> instance_labels) {
  write_file(path, format_ply(cloud, instance_labels));
}

}  // namespace simgroup
