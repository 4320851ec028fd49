#pragma once

#include <filesystem>

#include "demvc/dataset.hpp"

namespace demvc {

// MVDS container, little-endian throughout:
//   "MVDS", u16 version (1), u16 V, u64 N
//   per view: u32 D_v, u8 has_shape [+ u32 height, u32 width, u32 channels],
//             u8 range code (0 unit, 1 byte255, 2 raw)
//   per view: N x D_v row-major f32
//   u8 has_labels [+ N x i32]
void save_mvds(const std::filesystem::path& path, const MultiViewDataset& ds);

// Validates the container; byte255 views are divided by 255 and come back
// with range unit.
MultiViewDataset load_mvds(const std::filesystem::path& path);

}  // namespace demvc
