#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace vbcar {

/// Seeded random source. Every draw is built from raw 64-bit engine output so
/// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal draw (Marsaglia polar method).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a over raw bytes; used for run digests.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::span<const double> values,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace vbcar
