#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace assembly {

std::uint64_t splitmix64(std::uint64_t x);

/// Folds a root seed with a list of stream coordinates (task index, sample
/// index, attempt, ...) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts);

/// Seeded random source. Wraps mt19937_64 but does its own range reduction
/// and shuffling so that streams are identical across standard libraries
/// (std::uniform_int_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1).
  double unit();

  bool coin() { return (next() >> 63) != 0; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace assembly
