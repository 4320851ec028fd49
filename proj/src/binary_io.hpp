#pragma once

// Little-endian primitive encoding shared by the MVDS and AECP formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "demvc/tensor.hpp"

namespace demvc::binary {

template <typename U>
void put_uint(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_uint(std::istream& in, const std::string& context) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw IngestionError("unexpected end of file reading " + context);
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<U>(v);
}

inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }

inline double get_f64(std::istream& in, const std::string& context) {
  return std::bit_cast<double>(get_uint<std::uint64_t>(in, context));
}
inline float get_f32(std::istream& in, const std::string& context) {
  return std::bit_cast<float>(get_uint<std::uint32_t>(in, context));
}

inline void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char got[4] = {};
  if (!in.read(got, 4) || std::string(got, 4) != std::string(magic, 4)) {
    throw IngestionError(what + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
  }
}

}  // namespace demvc::binary
