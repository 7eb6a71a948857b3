#pragma once

#include "vsnet/core.hpp"

namespace vsnet {

// Centered, orthonormal 2-D DFT. The DC bin sits at (floor(H/2), floor(W/2))
// and both directions scale by 1/sqrt(H*W), so ifft2c is the adjoint of fft2c.
auto fft2c(ComplexImage const &img) -> ComplexImage;
auto ifft2c(ComplexImage const &ksp) -> ComplexImage;

// In-place variants on a single row-major plane.
void fft2c_inplace(std::span<Complex> plane, int height, int width);
void ifft2c_inplace(std::span<Complex> plane, int height, int width);

/// A_i = D F S_i for every coil i.
class EncodingOperator
{
public:
  EncodingOperator() = default;
  EncodingOperator(CoilSensitivities sens, SamplingMask mask);

  auto sensitivities() const -> CoilSensitivities const & { return sens_; }
  auto mask() const -> SamplingMask const & { return mask_; }
  auto coils() const -> int { return sens_.coils(); }
  auto height() const -> int { return sens_.height(); }
  auto width() const -> int { return sens_.width(); }

  /// mask * fft2c(S_i * m) per coil. Unsampled entries are exactly zero.
  auto forward(ComplexImage const &m) const -> MultiCoilKSpace;
  /// sum_i conj(S_i) * ifft2c(mask * y_i). Also the zero-filled image.
  auto adjoint(MultiCoilKSpace const &y) const -> ComplexImage;

  // F S_i m for every coil, without masking.
  auto coil_spectra(ComplexImage const &m) const -> MultiCoilKSpace;

  friend auto operator==(EncodingOperator const &, EncodingOperator const &) -> bool = default;

private:
  void check_image(ComplexImage const &m) const;
  void check_kspace(MultiCoilKSpace const &y) const;

  CoilSensitivities sens_;
  SamplingMask mask_;
};

} // namespace vsnet
