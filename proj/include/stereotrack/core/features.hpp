#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace stereotrack {

/// Detected corner. Coordinates are in the level-0 image frame.
struct KeyPoint {
  float u = 0.0F;
  float v = 0.0F;
  std::int32_t octave = 0;
  float angle = 0.0F;     // radians in [0, 2*pi)
  float response = 0.0F;  // corner score

  bool operator==(const KeyPoint&) const = default;
};

/// 256-bit binary descriptor.
struct Descriptor {
  static constexpr int kBits = 256;
  static constexpr int kBytes = kBits / 8;

  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const { return ((words[i >> 6] >> (i & 63)) & 1U) != 0; }
  void set_bit(int i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      words[i >> 6] |= mask;
    } else {
      words[i >> 6] &= ~mask;
    }
  }

  Descriptor operator~() const {
    Descriptor d;
    for (int i = 0; i < 4; ++i) {
      d.words[i] = ~words[i];
    }
    return d;
  }

  bool operator==(const Descriptor&) const = default;
};

/// Hamming distance, in [0, 256].
inline int descriptor_distance(const Descriptor& a, const Descriptor& b) {
  return std::popcount(a.words[0] ^ b.words[0]) + std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) + std::popcount(a.words[3] ^ b.words[3]);
}

}  // namespace stereotrack
