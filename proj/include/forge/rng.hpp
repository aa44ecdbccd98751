// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace forge {

/// PCG32 (XSH-RR, 64-bit state). Used instead of <random> engines and
/// distributions so shuffles are identical across standard libraries.
class Pcg32 {
 public:
  static constexpr uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(uint64_t seed, uint64_t stream = kDefaultStream) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next();
    state_ += seed;
    next();
  }

  uint32_t next() {
    const uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // Unbiased integer in [0, bound).
  uint32_t bounded(uint32_t bound) {
    if (bound <= 1) return 0;
    const uint32_t threshold = (0u - bound) % bound;
    for (;;) {
      const uint32_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = bounded(static_cast<uint32_t>(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t state_;
  uint64_t inc_;
};

// FNV-1a over the bytes of `key`, folded with `seed`.
inline uint64_t derive_seed(uint64_t seed, std::string_view key) {
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace forge
