#pragma once

// Checkpoint container (little-endian):
//   magic "BWCK", u32 version (1)
//   u32 + bytes   metadata text (run configuration, label vocabulary)
//   u32 count, then count x (u32 + bytes) layer spec lines
//   u32 count, then per parameter tensor:
//       u32 + bytes name, u32 rank, rank x u64 dims, f64 values
//   u8 has_optimizer; if 1: f64 momentum, u32 count, tensors as above

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bitwave/nn.hpp"

namespace bitwave::nn {

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::string metadata;
  std::vector<std::string> layer_specs;
  std::vector<NamedTensor> params;
  std::optional<double> momentum;
  std::vector<NamedTensor> velocity;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint snapshot(Sequential& graph, std::string metadata, const MomentumSgd* optimizer = nullptr);

/// Copies parameter values into `graph`; shapes and order must match.
void restore(const Checkpoint& ckpt, Sequential& graph);

std::vector<std::uint8_t> encode(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace bitwave::nn
