#pragma once

#include <cstdint>

namespace riskforge {

/// Counter-based generator. A stream is an immutable (seed, substream) pair
/// and draw i is a pure function of (seed, substream, i):
///
///   key  = mix64(seed ^ mix64(substream + G))
///   bits = mix64(key + (i + 1) * G)
///
/// where G = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer
/// (xor-shift 30/27/31 with multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB). Outputs are identical on every platform and do not
/// depend on the order in which draws are requested.
class RandomStream {
 public:
  constexpr RandomStream() = default;
  constexpr explicit RandomStream(std::uint64_t seed, std::uint64_t substream = 0)
      : seed_(seed), substream_(substream), key_(mix64(seed ^ mix64(substream + kGolden))) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t substream() const noexcept { return substream_; }

  /// Child stream; used to give every variable and trial chunk its own sequence.
  constexpr RandomStream derive(std::uint64_t index) const noexcept {
    return RandomStream(seed_, mix64(substream_ * kGolden + index + 1));
  }

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept { return mix64(key_ + (index + 1) * kGolden); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  constexpr double uniform(std::uint64_t index) const noexcept {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  std::uint64_t seed_ = 0;
  std::uint64_t substream_ = 0;
  std::uint64_t key_ = mix64(mix64(kGolden));
};

}  // namespace riskforge
