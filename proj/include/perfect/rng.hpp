#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "perfect/error.hpp"
#include "perfect/rational.hpp"

namespace perfect {

/// SplitMix64 finalizer; used only to derive stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seedable, splittable random stream.
///
/// Engine: std::mt19937_64 seeded with the stream seed.
/// Split rule: split(i) has seed splitmix64(seed ^ splitmix64(i)).
/// Bounded integers use rejection on the raw 64-bit output, so a given seed
/// replays bit-exactly on every conforming standard library.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  RngStream split(std::uint64_t index) const { return RngStream(splitmix64(seed_ ^ splitmix64(index))); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, bound), bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Draws an index with exact rational weights (summing to 1).
///
/// When the common denominator fits in 63 bits the draw is exact; otherwise it
/// falls back to a double-precision inverse CDF.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;

  explicit DiscreteSampler(std::span<const Rational> weights) {
    require(!weights.empty(), ErrorKind::Validation, "DiscreteSampler needs at least one weight");
    mpz_class den = 1;
    for (const auto& w : weights) {
      mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), w.get_den().get_mpz_t());
    }
    const mpz_class limit = mpz_class(1) << 63;
    if (den < limit) {
      exact_ = true;
      denominator_ = den.get_ui();
      std::uint64_t running = 0;
      for (const auto& w : weights) {
        mpz_class num = w.get_num() * (den / w.get_den());
        running += num.get_ui();
        cumulative_.push_back(running);
      }
      require(running == denominator_, ErrorKind::Validation, "sampler weights do not sum to 1");
    } else {
      double running = 0.0;
      for (const auto& w : weights) {
        running += w.get_d();
        cumulative_d_.push_back(running);
      }
    }
  }

  std::size_t size() const { return exact_ ? cumulative_.size() : cumulative_d_.size(); }

  std::size_t draw(RngStream& rng) const {
    if (exact_) {
      const std::uint64_t r = rng.uniform_below(denominator_);
      return static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), r) -
                                      cumulative_.begin());
    }
    const double r = rng.uniform01() * cumulative_d_.back();
    const auto it = std::upper_bound(cumulative_d_.begin(), cumulative_d_.end(), r);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_d_.begin()), cumulative_d_.size() - 1);
  }

 private:
  bool exact_ = false;
  std::uint64_t denominator_ = 0;
  std::vector<std::uint64_t> cumulative_;
  std::vector<double> cumulative_d_;
};

}  // namespace perfect
