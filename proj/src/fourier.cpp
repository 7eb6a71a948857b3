#include "vsnet/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace vsnet {

namespace {

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
class PlanCache
{
public:
  ~PlanCache()
  {
    for (auto &[key, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

  auto get(int height, int width, int sign) -> fftw_plan
  {
    std::lock_guard lock(mutex_);
    auto const key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) { return it->second; }
    std::vector<fftw_complex> scratch(static_cast<std::size_t>(height) * width);
    auto plan =
      fftw_plan_dft_2d(height, width, scratch.data(), scratch.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

auto plans() -> PlanCache &
{
  static PlanCache cache;
  return cache;
}

// ifftshift on the way in, fftshift on the way out, orthonormal scaling.
void centered_transform(std::span<Complex> plane, int height, int width, int sign)
{
  auto const n = static_cast<std::size_t>(height) * width;
  if (plane.size() != n) { throw Error(ErrorKind::Shape, "plane length does not match dimensions"); }
  int const cy = height / 2;
  int const cx = width / 2;
  std::vector<Complex> buf(n);
  for (int y = 0; y < height; ++y) {
    int const sy = (y + cy) % height;
    for (int x = 0; x < width; ++x) {
      buf[static_cast<std::size_t>(y) * width + x] = plane[static_cast<std::size_t>(sy) * width + (x + cx) % width];
    }
  }
  auto *io = reinterpret_cast<fftw_complex *>(buf.data());
  fftw_execute_dft(plans().get(height, width, sign), io, io);
  double const scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int y = 0; y < height; ++y) {
    int const dy = (y + cy) % height;
    for (int x = 0; x < width; ++x) {
      plane[static_cast<std::size_t>(dy) * width + (x + cx) % width] = buf[static_cast<std::size_t>(y) * width + x] * scale;
    }
  }
}

} // namespace

void fft2c_inplace(std::span<Complex> plane, int height, int width)
{
  centered_transform(plane, height, width, FFTW_FORWARD);
}

void ifft2c_inplace(std::span<Complex> plane, int height, int width)
{
  centered_transform(plane, height, width, FFTW_BACKWARD);
}

auto fft2c(ComplexImage const &img) -> ComplexImage
{
  ComplexImage out = img;
  fft2c_inplace(out.data(), out.height(), out.width());
  return out;
}

auto ifft2c(ComplexImage const &ksp) -> ComplexImage
{
  ComplexImage out = ksp;
  ifft2c_inplace(out.data(), out.height(), out.width());
  return out;
}

EncodingOperator::EncodingOperator(CoilSensitivities sens, SamplingMask mask)
  : sens_{std::move(sens)}
  , mask_{std::move(mask)}
{
  if (sens_.height() != mask_.height() || sens_.width() != mask_.width()) {
    throw Error(ErrorKind::Shape, "sensitivity and mask shapes differ");
  }
}

void EncodingOperator::check_image(ComplexImage const &m) const
{
  if (m.height() != height() || m.width() != width()) {
    throw Error(ErrorKind::Shape, "image is " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                                    ", operator expects " + std::to_string(height()) + "x" +
                                    std::to_string(width()));
  }
}

void EncodingOperator::check_kspace(MultiCoilKSpace const &y) const
{
  if (y.coils() != coils()) {
    throw Error(ErrorKind::Shape,
                "coils: k-space has " + std::to_string(y.coils()) + ", operator has " + std::to_string(coils()));
  }
  if (y.height() != height() || y.width() != width()) {
    throw Error(ErrorKind::Shape, "k-space plane shape does not match operator");
  }
}

auto EncodingOperator::coil_spectra(ComplexImage const &m) const -> MultiCoilKSpace
{
  check_image(m);
  MultiCoilKSpace out(coils(), height(), width());
  auto const img = m.data();
  for (int c = 0; c < coils(); ++c) {
    auto p = out.plane(c);
    auto const s = sens_.map(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = s[i] * img[i];
    }
    fft2c_inplace(p, height(), width());
  }
  return out;
}

auto EncodingOperator::forward(ComplexImage const &m) const -> MultiCoilKSpace
{
  auto out = coil_spectra(m);
  auto const d = mask_.data();
  for (int c = 0; c < coils(); ++c) {
    auto p = out.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (d[i] == 0) { p[i] = Complex{}; }
    }
  }
  return out;
}

auto EncodingOperator::adjoint(MultiCoilKSpace const &y) const -> ComplexImage
{
  check_kspace(y);
  ComplexImage out(height(), width());
  auto acc = out.data();
  auto const d = mask_.data();
  std::vector<Complex> buf(y.plane_size());
  for (int c = 0; c < coils(); ++c) {
    auto const p = y.plane(c);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      buf[i] = d[i] != 0 ? p[i] : Complex{};
    }
    ifft2c_inplace(buf, height(), width());
    auto const s = sens_.map(c);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      acc[i] += std::conj(s[i]) * buf[i];
    }
  }
  return out;
}

} // namespace vsnet
