#pragma once

#include <cstdint>
#include <limits>

namespace mixcascade {

/// Stafford variant 13 finalizer used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 engine. Small state, so one can be created per tree node.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Counter-based stream: a key derived from a path of indices
/// (master seed -> trial -> cascade -> node). Engines for distinct paths
/// are statistically independent and do not depend on evaluation order.
class RngStream {
 public:
  explicit constexpr RngStream(std::uint64_t master_seed) noexcept
      : key_(mix64(master_seed ^ 0x6a09e667f3bcc909ULL)) {}

  constexpr RngStream child(std::uint64_t index) const noexcept {
    return RngStream(key_, mix64(key_ + mix64(index + 0x3c6ef372fe94f82bULL)));
  }

  constexpr SplitMix64 engine(std::uint64_t counter = 0) const noexcept {
    return SplitMix64(mix64(key_ ^ mix64(counter ^ 0xa54ff53a5f1d36f1ULL)));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  constexpr RngStream(std::uint64_t, std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key_;
};

}  // namespace mixcascade
