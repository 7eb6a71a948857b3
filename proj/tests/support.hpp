#pragma once

#include "vsnet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>

namespace vsnet::test {

inline auto max_abs_diff(std::span<Complex const> a, std::span<Complex const> b) -> double
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

/// max |a - b| / max |b|
inline auto rel_err(std::span<Complex const> a, std::span<Complex const> b) -> double
{
  return verify::max_relative_error(a, b);
}

inline auto rel_err(ComplexImage const &a, ComplexImage const &b) -> double { return rel_err(a.data(), b.data()); }

inline auto ones(int coils, int h, int w) -> CoilSensitivities
{
  return CoilSensitivities(MultiCoilKSpace(coils, h, w, std::vector<Complex>(std::size_t(coils) * h * w, 1.0)));
}

inline auto full_mask(int h, int w) -> SamplingMask
{
  return SamplingMask(h, w, std::vector<std::uint8_t>(std::size_t(h) * w, 1));
}

/// Fresh empty directory under the system temp dir.
inline auto scratch_dir(std::string const &name) -> std::filesystem::path
{
  auto p = std::filesystem::temp_directory_path() / ("vsnet_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace vsnet::test
