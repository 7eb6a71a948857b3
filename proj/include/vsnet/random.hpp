#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace vsnet {

// std::mt19937_64 is fully specified by the standard, the std distributions
// are not. These conversions keep seeded output identical across toolchains.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_{seed}
  {
  }

  auto bits() -> std::uint64_t { return engine_(); }

  /// Uniform in [0, 1).
  auto uniform() -> double { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  auto below(std::uint64_t n) -> std::uint64_t
  {
    std::uint64_t const limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  auto normal() -> double
  {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double const u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; derives independent stream seeds from (seed, index).
constexpr auto mix_seed(std::uint64_t seed, std::uint64_t index) -> std::uint64_t
{
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace vsnet
