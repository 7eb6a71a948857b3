#pragma once

#include "vsnet/problem.hpp"

#include <memory>

namespace vsnet {

/// The denoiser slot (DB) of a stage. Output shape always equals input shape.
class Denoiser
{
public:
  virtual ~Denoiser() = default;
  virtual auto apply(ComplexImage const &m) const -> ComplexImage = 0;
};

class IdentityDenoiser final : public Denoiser
{
public:
  auto apply(ComplexImage const &m) const -> ComplexImage override { return m; }
};

auto identity_denoiser() -> std::shared_ptr<Denoiser const>;

/*
 * Data-consistency block. Per coil and k-space location
 *
 *   k = (alpha * [F S_i m] + lambda * d * y) / (lambda * d + alpha),   d in {0, 1}
 *
 * and x_i = F^-1 k. This is the exact minimiser over x_i of
 *   lambda/2 sum_i |D F x_i - y_i|^2 + alpha/2 sum_i |x_i - S_i m|^2.
 * Returned planes are in image space.
 */
auto dcb(ComplexImage const &m, EncodingOperator const &op, MultiCoilKSpace const &y, ScalarWeights const &w)
  -> MultiCoilImages;

/*
 * Weighted-average block. Per pixel
 *
 *   m = (beta * u + alpha * sum_i conj(S_i) x_i) / (beta + alpha * sos)
 *
 * which minimises alpha/2 sum_i |x_i - S_i m|^2 + beta/2 |u - m|^2.
 */
auto wab(ComplexImage const &u, MultiCoilImages const &x, CoilSensitivities const &sens, ScalarWeights const &w)
  -> ComplexImage;

// Reverse-mode rules. Gradients of a real loss with respect to a complex
// quantity z are carried as dL/dRe(z) + i dL/dIm(z).

struct DcbGradient
{
  ComplexImage m;
  double lambda = 0.0;
  double alpha = 0.0;
};

auto dcb_backward(ComplexImage const &m,
                  EncodingOperator const &op,
                  MultiCoilKSpace const &y,
                  ScalarWeights const &w,
                  MultiCoilImages const &grad_x) -> DcbGradient;

struct WabGradient
{
  ComplexImage u;
  MultiCoilImages x;
  double alpha = 0.0;
  double beta = 0.0;
};

/// `m_out` is the forward result wab(u, x, sens, w).
auto wab_backward(ComplexImage const &u,
                  MultiCoilImages const &x,
                  CoilSensitivities const &sens,
                  ScalarWeights const &w,
                  ComplexImage const &m_out,
                  ComplexImage const &grad_m) -> WabGradient;

} // namespace vsnet
