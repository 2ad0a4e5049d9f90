#pragma once

// Binary parameter container:
//   "MCSFFCK1" | u32 version | u32 tensor count |
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64
// All integers and floats little-endian, tensors in name order.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mcsff/numerics/parameters.hpp"

namespace mcsff::cmci {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const num::ParameterSet& params);
void write_checkpoint(const std::filesystem::path& path, const num::ParameterSet& params);
num::ParameterSet read_checkpoint(std::istream& in);
num::ParameterSet read_checkpoint(const std::filesystem::path& path);

}  // namespace mcsff::cmci
