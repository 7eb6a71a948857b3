#include "vsnet/core.hpp"
#include "vsnet/problem.hpp"

#include <algorithm>
#include <cmath>

namespace vsnet {

namespace {

auto finite(Complex const &z) -> bool { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_dims(int height, int width)
{
  if (height < 1 || width < 1) {
    throw Error(ErrorKind::Shape,
                "image dimensions must be positive, got " + std::to_string(height) + "x" + std::to_string(width));
  }
}

} // namespace

ComplexImage::ComplexImage(int height, int width)
  : height_{height}
  , width_{width}
{
  require_dims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, Complex{});
}

ComplexImage::ComplexImage(int height, int width, std::vector<Complex> data)
  : height_{height}
  , width_{width}
  , data_{std::move(data)}
{
  require_dims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::Shape, "image data length " + std::to_string(data_.size()) + " does not match " +
                                    std::to_string(height) + "x" + std::to_string(width));
  }
}

auto ComplexImage::all_finite() const -> bool { return std::all_of(data_.begin(), data_.end(), finite); }

MultiCoilKSpace::MultiCoilKSpace(int coils, int height, int width)
  : coils_{coils}
  , height_{height}
  , width_{width}
{
  require_dims(height, width);
  if (coils < 1) { throw Error(ErrorKind::Shape, "coil count must be >= 1"); }
  data_.assign(static_cast<std::size_t>(coils) * plane_size(), Complex{});
}

MultiCoilKSpace::MultiCoilKSpace(int coils, int height, int width, std::vector<Complex> data)
  : coils_{coils}
  , height_{height}
  , width_{width}
  , data_{std::move(data)}
{
  require_dims(height, width);
  if (coils < 1) { throw Error(ErrorKind::Shape, "coil count must be >= 1"); }
  if (data_.size() != static_cast<std::size_t>(coils) * plane_size()) {
    throw Error(ErrorKind::Shape, "multi-coil data length " + std::to_string(data_.size()) + " does not match " +
                                    std::to_string(coils) + "x" + std::to_string(height) + "x" +
                                    std::to_string(width));
  }
}

auto MultiCoilKSpace::image(int coil) const -> ComplexImage
{
  auto const p = plane(coil);
  return ComplexImage(height_, width_, std::vector<Complex>(p.begin(), p.end()));
}

void MultiCoilKSpace::set_image(int coil, ComplexImage const &img)
{
  if (img.height() != height_ || img.width() != width_) {
    throw Error(ErrorKind::Shape, "plane shape mismatch in set_image");
  }
  std::copy(img.data().begin(), img.data().end(), plane(coil).begin());
}

auto MultiCoilKSpace::all_finite() const -> bool { return std::all_of(data_.begin(), data_.end(), finite); }

SamplingMask::SamplingMask(int height, int width)
  : height_{height}
  , width_{width}
{
  require_dims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, 0);
}

SamplingMask::SamplingMask(int height, int width, std::vector<std::uint8_t> data)
  : height_{height}
  , width_{width}
  , data_{std::move(data)}
{
  require_dims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::Shape, "mask data length does not match " + std::to_string(height) + "x" +
                                    std::to_string(width));
  }
  if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw Error(ErrorKind::Validation, "mask values must be 0 or 1");
  }
}

auto SamplingMask::sampled_count() const -> std::size_t
{
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

auto SamplingMask::row_sampled(int y) const -> bool
{
  auto const row = data().subspan(static_cast<std::size_t>(y) * width_, width_);
  return std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; });
}

auto sum_of_squares(MultiCoilKSpace const &maps) -> std::vector<double>
{
  std::vector<double> sos(maps.plane_size(), 0.0);
  for (int c = 0; c < maps.coils(); ++c) {
    auto const p = maps.plane(c);
    for (std::size_t i = 0; i < sos.size(); ++i) {
      sos[i] += std::norm(p[i]);
    }
  }
  return sos;
}

CoilSensitivities::CoilSensitivities(MultiCoilKSpace maps)
  : maps_{std::move(maps)}
{
  if (!maps_.all_finite()) { throw Error(ErrorKind::Validation, "coil sensitivities contain non-finite values"); }
  sos_ = sum_of_squares(maps_);
}

void ScalarWeights::validate() const
{
  auto check = [](char const *name, double v) {
    if (!std::isfinite(v) || v < kWeightFloor) {
      throw Error(ErrorKind::Config,
                  std::string(name) + " must be finite and >= 1e-6, got " + std::to_string(v));
    }
  };
  check("lambda", lambda);
  check("alpha", alpha);
  check("beta", beta);
}

auto sos_combine(MultiCoilImages const &x, CoilSensitivities const &sens) -> ComplexImage
{
  if (x.coils() != sens.coils()) {
    throw Error(ErrorKind::Shape, "coils: images have " + std::to_string(x.coils()) + ", sensitivities have " +
                                    std::to_string(sens.coils()));
  }
  if (x.height() != sens.height() || x.width() != sens.width()) {
    throw Error(ErrorKind::Shape, "plane shape mismatch between coil images and sensitivities");
  }
  ComplexImage out(x.height(), x.width());
  auto acc = out.data();
  for (int c = 0; c < x.coils(); ++c) {
    auto const xc = x.plane(c);
    auto const sc = sens.map(c);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] += std::conj(sc[i]) * xc[i];
    }
  }
  return out;
}

auto norm2(std::span<Complex const> v) -> double
{
  double s = 0.0;
  for (auto const &z : v) {
    s += std::norm(z);
  }
  return std::sqrt(s);
}

auto inner(std::span<Complex const> a, std::span<Complex const> b) -> Complex
{
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

auto validate_problem(MultiCoilKSpace y, CoilSensitivities sens, SamplingMask mask) -> ReconProblem
{
  if (y.coils() != sens.coils()) {
    throw Error(ErrorKind::Shape, "coils: k-space has " + std::to_string(y.coils()) + ", sensitivities have " +
                                    std::to_string(sens.coils()));
  }
  auto dim = [](char const *name, int a, char const *what, int b) {
    if (a != b) {
      throw Error(ErrorKind::Shape, std::string(name) + ": k-space has " + std::to_string(a) + ", " + what +
                                      " has " + std::to_string(b));
    }
  };
  dim("height", y.height(), "sensitivities", sens.height());
  dim("width", y.width(), "sensitivities", sens.width());
  dim("height", y.height(), "mask", mask.height());
  dim("width", y.width(), "mask", mask.width());
  if (!y.all_finite()) { throw Error(ErrorKind::Validation, "k-space contains non-finite values"); }
  if (mask.sampled_count() == 0) { throw Error(ErrorKind::Validation, "sampling mask is empty"); }

  ReconProblem p;
  p.kspace_ = std::move(y);
  p.op_ = EncodingOperator(std::move(sens), std::move(mask));
  return p;
}

} // namespace vsnet
