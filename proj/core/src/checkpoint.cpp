#include "simgroup/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "simgroup/error.hpp"

namespace simgroup {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::string take_string(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint: truncated name");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedMatrix>& params) {
  std::string out(kMagic, 4);
  for (const auto& [name, m] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.values()) put_f64(out, v);
  }
  return out;
}

std::vector<NamedMatrix> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: missing SGW1 magic");
  }
  Reader reader(bytes);
  reader.take(4);
  std::vector<NamedMatrix> params;
  while (!reader.done()) {
    const auto len = static_cast<std::size_t>(reader.take(4));
    std::string name = reader.take_string(len);
    const auto rows = static_cast<std::size_t>(reader.take(4));
    const auto cols = static_cast<std::size_t>(reader.take(4));
    Matrix m(rows, cols);
    for (double& v : m.values()) v = std::bit_cast<double>(reader.take(8));
    params.emplace_back(std::move(name), std::move(m));
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace simgroup
