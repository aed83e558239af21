#include "civgraph/rng.hpp"

namespace civgraph {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x6A09E667F3BCC908ULL)) {}

CounterRng CounterRng::split(std::uint64_t stream) const noexcept {
  return CounterRng(FromKey{}, mix64(key_ ^ mix64(stream + 0x3C6EF372FE94F82BULL)));
}

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
  return mix64(key_ + mix64(counter));
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-and-reject.
  __extension__ using u128 = unsigned __int128;
  u128 product = static_cast<u128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<u128>(next()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

}  // namespace civgraph
