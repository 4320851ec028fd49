#pragma once

#include <cstdint>
#include <initializer_list>

namespace demvc {

// splitmix64 finalizer; mixes a run seed with stream identifiers so that
// independent consumers (views, epochs, rows) draw from unrelated generators.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> streams) {
  std::uint64_t h = mix_seed(seed);
  for (std::uint64_t s : streams) h = mix_seed(h ^ mix_seed(s + 0x632BE59BD9B4E019ULL));
  return h;
}

}  // namespace demvc
