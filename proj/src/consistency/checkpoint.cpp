#include "mcsff/consistency/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mcsff/error.hpp"

namespace mcsff::cmci {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'C', 'S', 'F', 'F', 'C', 'K', '1'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

void put_double(std::ostream& out, double x) { put(out, std::bit_cast<std::uint64_t>(x)); }

template <typename T>
T get(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("checkpoint: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const num::ParameterSet& params) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params.items()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    for (double x : m.data()) put_double(out, x);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

void write_checkpoint(const std::filesystem::path& path, const num::ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

num::ParameterSet read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("checkpoint: bad magic");
  auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  auto count = get<std::uint32_t>(in);
  num::ParameterSet params;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw IoError("checkpoint: truncated tensor name");
    auto rows = get<std::uint64_t>(in);
    auto cols = get<std::uint64_t>(in);
    if (rows * cols > kMaxElements) throw IoError("checkpoint: tensor '" + name + "' is implausibly large");
    num::Matrix m(rows, cols);
    for (double& x : m.data()) x = std::bit_cast<double>(get<std::uint64_t>(in));
    num::require_finite(m, "checkpoint");
    params.set(name, std::move(m));
  }
  return params;
}

num::ParameterSet read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace mcsff::cmci
