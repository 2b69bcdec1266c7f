#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simgroup {

// Shortest round-trip representation, always with '.' as decimal point.
std::string format_double(double v);
// Fixed number of decimals, locale-independent.
std::string format_fixed(double v, int decimals);

double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);
std::uint64_t parse_u64(std::string_view text, std::string_view context);
std::vector<double> parse_double_list(std::string_view text, std::string_view context);
std::vector<long long> parse_int_list(std::string_view text, std::string_view context);

std::string_view trim(std::string_view s);

// `key=value` lines; blank lines and '#' comments skipped. Keys keep file
// order; duplicates are reported as DataError.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  std::string_view source);

// Whitespace tokens per line with '#' comments stripped; empty lines dropped.
// Each entry carries its 1-based line number.
struct TokenLine {
  std::size_t line_no = 0;
  std::vector<std::string_view> tokens;
};
std::vector<TokenLine> tokenize_lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace simgroup
