#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dcrr {

/// SplitMix64 step; used to seed and to derive independent stream keys.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256** with helpers for uniform, normal, t and Cauchy draws.
///
/// Streams are derived from (seed, stream, substream) by hashing through
/// SplitMix64, so every (replicate, purpose) pair gets an independent
/// generator and results do not depend on thread scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  /// Standard normal (Marsaglia polar method).
  double normal() noexcept;
  /// Student t with integer degrees of freedom: Z / sqrt(chi2_df / df).
  double student_t(int df) noexcept;
  /// Standard Cauchy via the tangent transform.
  double cauchy() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dcrr
