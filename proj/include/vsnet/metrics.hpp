#pragma once

#include "vsnet/core.hpp"

#include <limits>
#include <optional>
#include <string>

namespace vsnet {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();
inline constexpr int kSsimWindow = 7;

/// Magnitude-image PSNR in dB with peak = max |ref|. Returns kPsnrIdentical
/// when the RMS magnitude error is <= exact_tolerance * peak (0 means only
/// bit-identical magnitudes). Throws on shape mismatch or an all-zero reference.
auto psnr(ComplexImage const &test, ComplexImage const &ref, double exact_tolerance = 0.0) -> double;

/// Mean SSIM over all 7x7 uniform windows of the magnitude images, k1 = 0.01,
/// k2 = 0.03. The dynamic range defaults to the reference peak magnitude.
auto ssim(ComplexImage const &test, ComplexImage const &ref, std::optional<double> dynamic_range = std::nullopt)
  -> double;

struct MetricReport
{
  double psnr = 0.0;
  double ssim = 0.0;
};

auto evaluate(ComplexImage const &test, ComplexImage const &ref, double exact_tolerance = 0.0) -> MetricReport;

/// CSV spelling of a metric value; the identical-images sentinel becomes "inf".
auto format_metric(double v) -> std::string;
/// Inverse of format_metric. Throws Error{Format} on anything unparsable.
auto parse_metric(std::string const &s) -> double;

} // namespace vsnet
