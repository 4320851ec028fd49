#pragma once

#include <filesystem>
#include <optional>

#include "demvc/adam.hpp"
#include "demvc/autoencoder.hpp"

namespace demvc {

// AECP checkpoint, little-endian:
//   "AECP", u16 version (1), u32 view index, u32 encoder layers, u32 decoder layers
//   per layer: u8 kind, u8 activation, u8 weight rank, u64 extents[rank],
//              u64 bias length, 7 x u64 conv geometry (in_c, in_h, in_w, out_c,
//              kernel, stride, output_padding; zero for affine),
//              f64 weights, f64 bias
//   u8 has_optimizer; if 1: u64 step, f64 lr, beta1, beta2, epsilon,
//              u32 tensor count, then each first moment, then each second
//              moment as raw f64 in parameter order.
struct Checkpoint {
  Autoencoder autoencoder;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Autoencoder& ae,
                     const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace demvc
