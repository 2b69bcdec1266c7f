#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simgroup/matrix.hpp"

namespace simgroup {

using NamedMatrix = std::pair<std::string, Matrix>;

// Binary parameter file: "SGW1", then per parameter a u32 name length, the
// UTF-8 name, u32 rows, u32 cols and rows*cols float64 values. All integers
// and floats are little-endian.
std::string encode_checkpoint(const std::vector<NamedMatrix>& params);
std::vector<NamedMatrix> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& params);
std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path);

}  // namespace simgroup
