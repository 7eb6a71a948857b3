#include "vsnet/blocks.hpp"

namespace vsnet {

namespace {

void check_shapes(ComplexImage const &m, EncodingOperator const &op, MultiCoilKSpace const &y)
{
  if (y.coils() != op.coils()) {
    throw Error(ErrorKind::Shape,
                "coils: k-space has " + std::to_string(y.coils()) + ", operator has " + std::to_string(op.coils()));
  }
  if (y.height() != op.height() || y.width() != op.width() || m.height() != op.height() ||
      m.width() != op.width()) {
    throw Error(ErrorKind::Shape, "data-consistency inputs differ in plane shape");
  }
}

void check_shapes(ComplexImage const &u, MultiCoilImages const &x, CoilSensitivities const &sens)
{
  if (x.coils() != sens.coils()) {
    throw Error(ErrorKind::Shape,
                "coils: images have " + std::to_string(x.coils()) + ", sensitivities have " +
                  std::to_string(sens.coils()));
  }
  if (x.height() != sens.height() || x.width() != sens.width() || u.height() != sens.height() ||
      u.width() != sens.width()) {
    throw Error(ErrorKind::Shape, "weighted-average inputs differ in plane shape");
  }
}

} // namespace

auto identity_denoiser() -> std::shared_ptr<Denoiser const> { return std::make_shared<IdentityDenoiser const>(); }

auto dcb(ComplexImage const &m, EncodingOperator const &op, MultiCoilKSpace const &y, ScalarWeights const &w)
  -> MultiCoilImages
{
  check_shapes(m, op, y);
  auto x = op.coil_spectra(m);
  auto const d = op.mask().data();
  double const sampled = 1.0 / (w.lambda + w.alpha);
  for (int c = 0; c < x.coils(); ++c) {
    auto k = x.plane(c);
    auto const yc = y.plane(c);
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (d[i] != 0) { k[i] = (w.alpha * k[i] + w.lambda * yc[i]) * sampled; }
    }
    ifft2c_inplace(k, x.height(), x.width());
  }
  return x;
}

auto wab(ComplexImage const &u, MultiCoilImages const &x, CoilSensitivities const &sens, ScalarWeights const &w)
  -> ComplexImage
{
  check_shapes(u, x, sens);
  auto m = sos_combine(x, sens);
  auto out = m.data();
  auto const uu = u.data();
  auto const sos = sens.sos();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (w.beta * uu[i] + w.alpha * out[i]) / (w.beta + w.alpha * sos[i]);
  }
  return m;
}

auto dcb_backward(ComplexImage const &m,
                  EncodingOperator const &op,
                  MultiCoilKSpace const &y,
                  ScalarWeights const &w,
                  MultiCoilImages const &grad_x) -> DcbGradient
{
  check_shapes(m, op, y);
  if (grad_x.coils() != op.coils() || grad_x.height() != op.height() || grad_x.width() != op.width()) {
    throw Error(ErrorKind::Shape, "data-consistency upstream gradient has the wrong shape");
  }
  auto const spectra = op.coil_spectra(m);
  auto const d = op.mask().data();
  double const den = w.lambda + w.alpha;
  double const den2 = den * den;

  DcbGradient g{ComplexImage(m.height(), m.width())};
  auto gm = g.m.data();
  std::vector<Complex> gk(grad_x.plane_size());
  for (int c = 0; c < op.coils(); ++c) {
    auto const gx = grad_x.plane(c);
    std::copy(gx.begin(), gx.end(), gk.begin());
    // x = F^-1 k, so dL/dk = F dL/dx.
    fft2c_inplace(gk, m.height(), m.width());
    auto const k = spectra.plane(c);
    auto const yc = y.plane(c);
    for (std::size_t i = 0; i < gk.size(); ++i) {
      if (d[i] == 0) { continue; }
      Complex const resid = k[i] - yc[i];
      g.alpha += std::real(std::conj(gk[i]) * resid) * (w.lambda / den2);
      g.lambda -= std::real(std::conj(gk[i]) * resid) * (w.alpha / den2);
      gk[i] *= w.alpha / den;
    }
    ifft2c_inplace(gk, m.height(), m.width());
    auto const s = op.sensitivities().map(c);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      gm[i] += std::conj(s[i]) * gk[i];
    }
  }
  return g;
}

auto wab_backward(ComplexImage const &u,
                  MultiCoilImages const &x,
                  CoilSensitivities const &sens,
                  ScalarWeights const &w,
                  ComplexImage const &m_out,
                  ComplexImage const &grad_m) -> WabGradient
{
  check_shapes(u, x, sens);
  if (!grad_m.same_shape(u) || !m_out.same_shape(u)) {
    throw Error(ErrorKind::Shape, "weighted-average upstream gradient has the wrong shape");
  }
  auto const combined = sos_combine(x, sens);
  auto const sos = sens.sos();
  auto const gm = grad_m.data();
  auto const mo = m_out.data();
  auto const uu = u.data();
  auto const cc = combined.data();

  WabGradient g{ComplexImage(u.height(), u.width()), MultiCoilImages(x.coils(), x.height(), x.width())};
  auto gu = g.u.data();
  std::vector<Complex> gc(gm.size());
  for (std::size_t i = 0; i < gm.size(); ++i) {
    double const den = w.beta + w.alpha * sos[i];
    gu[i] = gm[i] * (w.beta / den);
    gc[i] = gm[i] * (w.alpha / den);
    g.beta += std::real(std::conj(gm[i]) * (uu[i] - mo[i])) / den;
    g.alpha += std::real(std::conj(gm[i]) * (cc[i] - sos[i] * mo[i])) / den;
  }
  for (int c = 0; c < x.coils(); ++c) {
    auto gx = g.x.plane(c);
    auto const s = sens.map(c);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] = s[i] * gc[i];
    }
  }
  return g;
}

} // namespace vsnet
