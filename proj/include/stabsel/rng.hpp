#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace stabsel {

/// SplitMix64 finalizer applied to seed ^ golden-ratio-scaled stream index.
/// Used to derive independent per-iteration seeds from (seed, index) so
/// parallel work is schedule independent.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Seedable generator with a fully specified output sequence on every
/// platform: std::mt19937_64 for raw bits, with the uniform, index and
/// Gaussian transforms implemented here (the standard library distributions
/// are implementation defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// First k entries of `items` become a uniform random k-subset
  /// (partial Fisher-Yates).
  template <class T>
  void partial_shuffle(std::span<T> items, std::size_t k) {
    for (std::size_t i = 0; i < k && i + 1 < items.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_index(items.size() - i));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stabsel
