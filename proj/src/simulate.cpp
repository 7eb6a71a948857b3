#include "vsnet/simulate.hpp"
#include "vsnet/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace vsnet {

namespace {

struct Ellipse
{
  double value, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan table with the two ventricles lifted above zero so the
// whole head carries signal.
constexpr std::array<Ellipse, 10> kSheppLogan{{
  {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0},
  {-0.70, 0.6624, 0.8740, 0.00, -0.0184, 0},
  {-0.15, 0.1100, 0.3100, 0.22, 0.0000, -18},
  {-0.15, 0.1600, 0.4100, -0.22, 0.0000, 18},
  {0.10, 0.2100, 0.2500, 0.00, 0.3500, 0},
  {0.10, 0.0460, 0.0460, 0.00, 0.1000, 0},
  {0.10, 0.0460, 0.0460, 0.00, -0.1000, 0},
  {0.10, 0.0460, 0.0230, -0.08, -0.6050, 0},
  {0.10, 0.0230, 0.0230, 0.00, -0.6060, 0},
  {0.10, 0.0230, 0.0460, 0.06, -0.6050, 0},
}};

} // namespace

auto MaskSpec::line_budget() const -> int
{
  return static_cast<int>(std::ceil(static_cast<double>(height) / acceleration));
}

void MaskSpec::validate() const
{
  if (height < 1 || width < 1) { throw Error(ErrorKind::Config, "mask dimensions must be positive"); }
  if (!std::isfinite(acceleration) || acceleration < 1.0) {
    throw Error(ErrorKind::Config, "acceleration factor must be >= 1");
  }
  if (center_lines < 0) { throw Error(ErrorKind::Config, "center line count must be >= 0"); }
  if (center_lines > height) {
    throw Error(ErrorKind::Config, "center lines (" + std::to_string(center_lines) + ") exceed the height (" +
                                     std::to_string(height) + ")");
  }
  if (center_lines > line_budget()) {
    throw Error(ErrorKind::Config, "center lines (" + std::to_string(center_lines) +
                                     ") exceed the line budget ceil(height/AF) = " + std::to_string(line_budget()));
  }
}

auto uniform_lines(std::vector<int> const &candidates, int count, std::uint64_t seed) -> std::vector<int>
{
  std::vector<int> pool = candidates;
  Rng rng(seed);
  // partial Fisher-Yates
  for (int i = 0; i < count; ++i) {
    auto const j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

auto cartesian_mask(MaskSpec const &spec, LineSampler const &sampler) -> SamplingMask
{
  spec.validate();
  int const budget = spec.line_budget();
  int const first = spec.height / 2 - spec.center_lines / 2;
  std::vector<bool> rows(spec.height, false);
  for (int r = first; r < first + spec.center_lines; ++r) {
    rows[r] = true;
  }
  std::vector<int> candidates;
  for (int r = 0; r < spec.height; ++r) {
    if (!rows[r]) { candidates.push_back(r); }
  }
  int const extra = budget - spec.center_lines;
  if (extra > 0) {
    auto const picked = sampler(candidates, extra, spec.seed);
    if (picked.size() != static_cast<std::size_t>(extra)) {
      throw Error(ErrorKind::Config, "line sampler returned the wrong number of rows");
    }
    for (int r : picked) {
      if (r < 0 || r >= spec.height || rows[r]) {
        throw Error(ErrorKind::Config, "line sampler returned an invalid or duplicate row");
      }
      rows[r] = true;
    }
  }
  SamplingMask mask(spec.height, spec.width);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      mask.set(y, x, rows[y]);
    }
  }
  return mask;
}

auto phantom(int height, int width, std::uint64_t seed) -> ComplexImage
{
  if (height < 16 || width < 16) { throw Error(ErrorKind::Config, "phantom dimensions must be >= 16"); }
  Rng rng(seed);
  double const scale = rng.uniform(0.85, 1.0);
  double const rot = rng.uniform(-10.0, 10.0) * std::numbers::pi / 180.0;
  double const shift_x = rng.uniform(-0.05, 0.05);
  double const shift_y = rng.uniform(-0.05, 0.05);

  auto ellipses = kSheppLogan;
  for (std::size_t e = 0; e < ellipses.size(); ++e) {
    auto &el = ellipses[e];
    if (e >= 2) {
      el.value *= rng.uniform(0.7, 1.3);
      el.a *= rng.uniform(0.85, 1.15);
      el.b *= rng.uniform(0.85, 1.15);
      el.x0 += rng.uniform(-0.04, 0.04);
      el.y0 += rng.uniform(-0.04, 0.04);
      el.phi_deg += rng.uniform(-10.0, 10.0);
    }
  }
  // smooth intensity modulation and phase, both low order in (x, y)
  double const bias_x = rng.uniform(-0.15, 0.15);
  double const bias_y = rng.uniform(-0.15, 0.15);
  double const ph0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  double const ph_x = rng.uniform(-0.5, 0.5) * std::numbers::pi;
  double const ph_y = rng.uniform(-0.5, 0.5) * std::numbers::pi;
  double const ph_xy = rng.uniform(-0.3, 0.3) * std::numbers::pi;

  ComplexImage img(height, width);
  for (int y = 0; y < height; ++y) {
    double const py = 1.0 - (2.0 * y + 1.0) / height;
    for (int x = 0; x < width; ++x) {
      double const px = (2.0 * x + 1.0) / width - 1.0;
      // map into phantom coordinates
      double const qx0 = (px - shift_x) / scale;
      double const qy0 = (py - shift_y) / scale;
      double const qx = std::cos(rot) * qx0 + std::sin(rot) * qy0;
      double const qy = -std::sin(rot) * qx0 + std::cos(rot) * qy0;
      double value = 0.0;
      for (auto const &el : ellipses) {
        double const t = el.phi_deg * std::numbers::pi / 180.0;
        double const dx = qx - el.x0;
        double const dy = qy - el.y0;
        double const u = (std::cos(t) * dx + std::sin(t) * dy) / el.a;
        double const v = (-std::sin(t) * dx + std::cos(t) * dy) / el.b;
        if (u * u + v * v <= 1.0) { value += el.value; }
      }
      if (value > 0.0) { value *= 1.0 + bias_x * px + bias_y * py; }
      double const mag = std::clamp(value, 0.0, 1.0);
      double const phase = ph0 + ph_x * px + ph_y * py + ph_xy * px * py;
      img(y, x) = std::polar(mag, phase);
    }
  }
  return img;
}

auto coil_maps(int height, int width, int coils) -> CoilSensitivities
{
  if (coils < 1) { throw Error(ErrorKind::Config, "coil count must be >= 1"); }
  if (height < 1 || width < 1) { throw Error(ErrorKind::Config, "coil map dimensions must be positive"); }
  double const radius = 1.1;
  double const sigma = 0.8;
  MultiCoilKSpace maps(coils, height, width);
  std::vector<double> energy(maps.plane_size(), 0.0);
  for (int c = 0; c < coils; ++c) {
    double const theta = 2.0 * std::numbers::pi * c / coils + std::numbers::pi / 4.0;
    double const cx = radius * std::cos(theta);
    double const cy = radius * std::sin(theta);
    auto p = maps.plane(c);
    for (int y = 0; y < height; ++y) {
      double const py = 1.0 - (2.0 * y + 1.0) / height;
      for (int x = 0; x < width; ++x) {
        double const px = (2.0 * x + 1.0) / width - 1.0;
        double const d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
        double const mag = std::exp(-d2 / (2.0 * sigma * sigma));
        double const phase = theta + 0.5 * std::numbers::pi * (std::cos(theta) * px + std::sin(theta) * py);
        auto const i = static_cast<std::size_t>(y) * width + x;
        p[i] = std::polar(mag, phase);
        energy[i] += mag * mag;
      }
    }
  }
  for (int c = 0; c < coils; ++c) {
    auto p = maps.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] /= std::sqrt(energy[i]);
    }
  }
  return CoilSensitivities(std::move(maps));
}

auto synthesize(ComplexImage const &m, CoilSensitivities const &sens, SamplingMask const &mask) -> Synthesized
{
  EncodingOperator const op(sens, mask);
  Synthesized out{op.forward(m), ComplexImage(m.height(), m.width())};
  auto const sos = sens.sos();
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.reference[i] = sos[i] * m[i];
  }
  return out;
}

auto simulate_case(int size, int coils, double acceleration, int center_lines, std::uint64_t seed) -> SimulatedCase
{
  MaskSpec const spec{size, size, acceleration, center_lines, mix_seed(seed, 1)};
  auto mask = cartesian_mask(spec);
  auto sens = coil_maps(size, size, coils);
  auto const img = phantom(size, size, mix_seed(seed, 0));
  auto data = synthesize(img, sens, mask);
  return {spec, std::move(data.kspace), std::move(sens), std::move(mask), std::move(data.reference)};
}

} // namespace vsnet
