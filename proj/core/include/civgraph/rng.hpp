#pragma once

#include <cstdint>
#include <span>

namespace civgraph {

/// Counter-based generator: the n-th draw of a stream is a pure function of
/// (seed, stream path, n). Child streams are derived with split(), so any
/// consumer can get an independent, reproducible sequence without sharing
/// mutable state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept;

  CounterRng split(std::uint64_t stream) const noexcept;

  /// Draw at an absolute counter position; does not advance.
  std::uint64_t at(std::uint64_t counter) const noexcept;

  std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return to_unit(next()); }
  double uniform_at(std::uint64_t counter) const noexcept { return to_unit(at(counter)); }

  /// Uniform integer in [0, bound); unbiased. bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t key() const noexcept { return key_; }

  static double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  struct FromKey {};
  CounterRng(FromKey, std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace civgraph
