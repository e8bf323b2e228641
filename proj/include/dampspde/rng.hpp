#pragma once
// Philox4x32-10 counter-based generator with explicit stream derivation.
//
// A stream is identified by (seed, stream id). The 128-bit counter holds
// the draw index in words 0-1 and the stream id in words 2-3; the key is
// the 64-bit seed. Stream ids are derived from (path index, channel index,
// sub index) by splitmix64 mixing, so any worker can regenerate any
// stream without coordination.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dampspde {

using Philox4x32Block = std::array<std::uint32_t, 4>;

inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Channel indices used in stream derivation.
enum class Channel : std::uint64_t {
  point = 1,        // scalar w2 increments
  distributed = 2,  // w1 coefficient increments (sub index = basis mode)
  mode_residual = 3,  // per-mode part of the exact convolution not explained by w2
  auxiliary = 7,    // test and benchmark draws
};

constexpr std::uint64_t derive_stream(std::uint64_t path, Channel channel, std::uint64_t sub = 0) {
  return splitmix64(splitmix64(path ^ 0xA5A5A5A5A5A5A5A5ull) ^
                    splitmix64((static_cast<std::uint64_t>(channel) << 48) ^ sub));
}

/// Sequential view of one stream. Draws are a pure function of
/// (seed, stream, draw index), so splitting a sequence of draws into
/// several calls yields the same numbers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  /// Raw block at an absolute block index.
  Philox4x32Block block(std::uint64_t index) const {
    Philox4x32Block ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    return philox4x32_10(ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  }

  /// Two standard normals from block `index` (Box-Muller on two 53-bit uniforms).
  std::array<double, 2> normal_pair(std::uint64_t index) const {
    const auto b = block(index);
    const std::uint64_t x = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    const std::uint64_t y = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    const double u1 = (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
    const double u2 = static_cast<double>(y >> 11) * 0x1.0p-53;          // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(ang), r * std::sin(ang)};
  }

  double normal() {
    const std::uint64_t i = position_++;
    const std::uint64_t pair = i >> 1;
    if (pair != cached_pair_) {
      cached_ = normal_pair(pair);
      cached_pair_ = pair;
    }
    return cached_[i & 1u];
  }

  /// Uniform on [0,1), drawn from a block range disjoint from the normals.
  double uniform() {
    const auto b = block(0x8000000000000000ull | uniform_position_++);
    const std::uint64_t x = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  /// Moves the normal-draw cursor to an absolute position.
  void seek(std::uint64_t position) { position_ = position; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::uint64_t uniform_position_ = 0;
  std::uint64_t cached_pair_ = ~0ull;
  std::array<double, 2> cached_{};
};

}  // namespace dampspde
