#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "fuzzyppo/param_store.hpp"

namespace fuzzyppo {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout, all integers and floats little-endian:
//
//   char[8]  magic "FZPPOCKP"
//   u32      format version (1)
//   u64      step_count
//   u32      entry count
//   per entry:
//     u32      name length, then name bytes (UTF-8, no terminator)
//     u32      rank, then rank x u64 dimensions
//     f64[n]   values      (n = product of dimensions)
//     f64[n]   adam first moment
//     f64[n]   adam second moment
//
// Gradients are not stored.
inline constexpr char kCheckpointMagic[8] = {'F', 'Z', 'P', 'P', 'O', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const ParamStore& store, std::ostream& out);
// Reads a checkpoint into a fresh store (entries in file order, zero grads).
ParamStore read_checkpoint(std::istream& in);

// Writes through a temporary file and renames, so readers never see a partial file.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);

// Loads parameter values and optimizer state into `store`, whose entries must
// match the file's names and shapes exactly; otherwise throws CheckpointError.
void load_checkpoint(ParamStore& store, const std::filesystem::path& path);

}  // namespace fuzzyppo
