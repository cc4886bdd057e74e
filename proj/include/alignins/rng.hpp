#pragma once

// Deterministic random number utilities.
//
// Every random draw in the library goes through Rng instead of <random>'s
// distribution templates, whose output is implementation-defined. A given
// (seed, call sequence) therefore produces the same stream on every platform
// and build, which is what makes whole simulation runs byte-reproducible.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace alignins {

// SplitMix64 finalizer, used both as the PRNG step and for seed mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds stream identifiers into a base seed. Used to give every
// (client, round) pair its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(base);
  s = mix64(s ^ mix64(a ^ 0x243f6a8885a308d3ULL));
  s = mix64(s ^ mix64(b ^ 0x13198a2e03707344ULL));
  s = mix64(s ^ mix64(c ^ 0xa4093822299f31d0ULL));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller. No second-value cache, so the stream
  // position stays a pure function of the number of calls made.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Marsaglia-Tsang gamma sampler, shape > 0, unit scale.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = 1.0 - uniform();  // (0, 1]
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = 1.0 - uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  // Dirichlet(conc, ..., conc) over k categories.
  std::vector<double> dirichlet(double conc, std::size_t k) {
    if (k == 0) throw std::invalid_argument("Rng::dirichlet: k must be positive");
    std::vector<double> out(k);
    double total = 0.0;
    for (auto& g : out) {
      g = gamma(conc);
      total += g;
    }
    if (total <= 0.0) {
      // All draws underflowed to zero (tiny concentration); fall back to a
      // point mass on one random category.
      const std::size_t j = static_cast<std::size_t>(below(k));
      for (std::size_t i = 0; i < k; ++i) out[i] = (i == j) ? 1.0 : 0.0;
      return out;
    }
    if (!std::isfinite(total)) {
      // Enormous concentration: the sum of the draws overflowed. Rescale by
      // the largest draw before normalizing; at this extreme the distribution
      // is uniform for all practical purposes anyway.
      double mx = 0.0;
      for (double g : out) mx = std::max(mx, g);
      if (!std::isfinite(mx)) {
        for (auto& g : out) g = 1.0 / double(k);
        return out;
      }
      total = 0.0;
      for (auto& g : out) {
        g /= mx;
        total += g;
      }
    }
    for (auto& g : out) g /= total;
    return out;
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  // k distinct indices from [0, n), order random (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t state_;
};

}  // namespace alignins
