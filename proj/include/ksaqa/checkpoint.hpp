#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ksaqa/error.hpp"
#include "ksaqa/parameters.hpp"

namespace ksaqa {

// Binary layout, all integers little-endian:
//
//   "KSAQA1"
//   repeated until end of file:
//     u32 name_length, name bytes,
//     u32 rank, rank x u32 dims,
//     product(dims) x f32 values
//
// Values are stored as 32-bit floats; a tensor whose values are already
// float-representable round-trips bit-exactly.
inline constexpr char kCheckpointMagic[] = "KSAQA1";

class CheckpointError : public Error {
 public:
  enum class Kind { io, bad_magic, truncated, duplicate_name };

  CheckpointError(Kind kind, std::uint64_t offset, const std::string& what)
      : Error(what + " (offset " + std::to_string(offset) + ")"), kind_(kind), offset_(offset) {}

  Kind kind() const { return kind_; }
  std::uint64_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const NamedTensors& tensors);
NamedTensors decode_checkpoint(const std::string& bytes);

// Rounds every value to the nearest float, the precision checkpoints keep.
void round_to_float(ParameterStore& params);

}  // namespace ksaqa
