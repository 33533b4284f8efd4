#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace segbias {

/// splitmix64 generator. Every random draw in the toolkit goes through this
/// stream so that manifests and synthetic datasets are reproducible from the
/// seed alone, in any language.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Integer in [0, bound) by plain modulo reduction. bound must be > 0.
  std::uint64_t bounded(std::uint64_t bound) noexcept { return next() % bound; }

  /// Top 53 bits scaled to [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// (0, 1], safe to take the log of.
  double uniform_open_low() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, cosine branch only (two draws per sample).
  double normal() noexcept {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace segbias
