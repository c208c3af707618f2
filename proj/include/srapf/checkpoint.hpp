#pragma once

#include <filesystem>
#include <string>

#include "srapf/model.hpp"

namespace srapf {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// A model snapshot plus the training metadata needed to reproduce or audit it.
struct Checkpoint {
  DualEncoderModel model;
  FreezePlan plan;
  std::string stage;
  int epoch = 0;
  double id_val_top1 = 0.0;  // in [0, 1]
  std::string config_hash;
};

// Binary container: 8-byte magic "SRAPFCKP", u32 format version, u64 header
// length, JSON header, then every parameter as little-endian float64 in
// row-major order. See docs/checkpoint.md.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srapf
