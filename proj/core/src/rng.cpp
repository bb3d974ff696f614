#include "dcrr/rng.hpp"

#include <cmath>
#include <numbers>

namespace dcrr {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) noexcept : Rng(seed, 0, 0) {}

Rng::Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) noexcept {
  std::uint64_t key = seed;
  std::uint64_t mixed = splitmix64(key);
  key = mixed ^ (stream * 0xD1B54A32D192ED03ULL);
  mixed = splitmix64(key);
  key = mixed ^ (substream * 0x8CB92BA72F3D8DD7ULL);
  for (auto& word : s_) word = splitmix64(key);
}

Rng::result_type Rng::operator()() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Rng::student_t(int df) noexcept {
  const double z = normal();
  double chi2 = 0.0;
  for (int i = 0; i < df; ++i) {
    const double g = normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / df);
}

double Rng::cauchy() noexcept { return std::tan(std::numbers::pi * (uniform_open() - 0.5)); }

__extension__ using uint128 = unsigned __int128;

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  // Lemire's nearly-divisionless method.
  uint128 m = static_cast<uint128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<uint128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace dcrr
