#pragma once

#include <cstddef>

namespace demvc {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

}  // namespace demvc
