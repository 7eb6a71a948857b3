#include "vsnet/verify.hpp"
#include "vsnet/random.hpp"
#include "vsnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vsnet::verify {

namespace {

// Centered 1-D DFT matrix, orthonormal.
auto dft_matrix(int n, bool inverse) -> std::vector<Complex>
{
  std::vector<Complex> w(static_cast<std::size_t>(n) * n);
  int const c = n / 2;
  double const sign = inverse ? 1.0 : -1.0;
  double const scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      // reduce the phase index exactly before converting to an angle
      long const t = static_cast<long>(k - c) * (j - c);
      long const r = ((t % n) + n) % n;
      double const angle = sign * 2.0 * std::numbers::pi * static_cast<double>(r) / n;
      w[static_cast<std::size_t>(k) * n + j] = std::polar(scale, angle);
    }
  }
  return w;
}

// masked forward / adjoint of one coil using the direct DFT
auto masked_dft(std::vector<Complex> const &v, SamplingMask const &mask, int h, int w, bool inverse)
  -> std::vector<Complex>
{
  ComplexImage img(h, w, v);
  if (inverse) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!mask(y, x)) { img(y, x) = Complex{}; }
      }
    }
    img = naive_dft2c(img, true);
  } else {
    img = naive_dft2c(img, false);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!mask(y, x)) { img(y, x) = Complex{}; }
      }
    }
  }
  return {img.data().begin(), img.data().end()};
}

auto dot(std::vector<Complex> const &a, std::vector<Complex> const &b) -> Complex
{
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

auto norm(std::vector<Complex> const &a) -> double { return std::sqrt(std::real(dot(a, a))); }

} // namespace

auto naive_dft2c(ComplexImage const &img, bool inverse) -> ComplexImage
{
  int const h = img.height();
  int const w = img.width();
  auto const wy = dft_matrix(h, inverse);
  auto const wx = dft_matrix(w, inverse);
  ComplexImage out(h, w);
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      Complex s{};
      for (int y = 0; y < h; ++y) {
        Complex const fy = wy[static_cast<std::size_t>(ky) * h + y];
        for (int x = 0; x < w; ++x) {
          s += img(y, x) * fy * wx[static_cast<std::size_t>(kx) * w + x];
        }
      }
      out(ky, kx) = s;
    }
  }
  return out;
}

auto cg_data_consistency(ComplexImage const &m,
                         CoilSensitivities const &sens,
                         SamplingMask const &mask,
                         MultiCoilKSpace const &y,
                         ScalarWeights const &w,
                         int max_iterations) -> MultiCoilImages
{
  int const h = m.height();
  int const wd = m.width();
  MultiCoilImages out(sens.coils(), h, wd);
  // (lambda F^H D^T D F + alpha I) x = lambda F^H D^T y + alpha S m
  auto apply = [&](std::vector<Complex> const &v) {
    auto const k = masked_dft(v, mask, h, wd, false);
    auto back = masked_dft(k, mask, h, wd, true);
    for (std::size_t i = 0; i < back.size(); ++i) {
      back[i] = w.lambda * back[i] + w.alpha * v[i];
    }
    return back;
  };
  for (int c = 0; c < sens.coils(); ++c) {
    auto const yc = y.plane(c);
    auto b = masked_dft({yc.begin(), yc.end()}, mask, h, wd, true);
    auto const s = sens.map(c);
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = w.lambda * b[i] + w.alpha * s[i] * m[i];
    }
    std::vector<Complex> x(b.size(), Complex{});
    auto r = b;
    auto p = r;
    double rs = std::real(dot(r, r));
    double const stop = 1e-15 * norm(b);
    for (int it = 0; it < max_iterations && std::sqrt(rs) > stop; ++it) {
      auto const ap = apply(p);
      double const step = rs / std::real(dot(p, ap));
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += step * p[i];
        r[i] -= step * ap[i];
      }
      double const rs_next = std::real(dot(r, r));
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = r[i] + (rs_next / rs) * p[i];
      }
      rs = rs_next;
    }
    std::copy(x.begin(), x.end(), out.plane(c).begin());
  }
  return out;
}

auto normal_equation_average(ComplexImage const &u,
                             MultiCoilImages const &x,
                             CoilSensitivities const &sens,
                             ScalarWeights const &w) -> ComplexImage
{
  ComplexImage out(u.height(), u.width());
  double const sa = std::sqrt(w.alpha);
  double const sb = std::sqrt(w.beta);
  for (std::size_t i = 0; i < u.size(); ++i) {
    // rows of A and entries of b for the unknown (Re m, Im m)
    double ata[2][2] = {{0, 0}, {0, 0}};
    double atb[2] = {0, 0};
    auto add_row = [&](double a0, double a1, double b) {
      ata[0][0] += a0 * a0;
      ata[0][1] += a0 * a1;
      ata[1][0] += a1 * a0;
      ata[1][1] += a1 * a1;
      atb[0] += a0 * b;
      atb[1] += a1 * b;
    };
    for (int c = 0; c < x.coils(); ++c) {
      Complex const s = sens.map(c)[i];
      Complex const xc = x.plane(c)[i];
      add_row(sa * s.real(), -sa * s.imag(), sa * xc.real());
      add_row(sa * s.imag(), sa * s.real(), sa * xc.imag());
    }
    add_row(sb, 0.0, sb * u[i].real());
    add_row(0.0, sb, sb * u[i].imag());
    double const det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    double const re = (atb[0] * ata[1][1] - ata[0][1] * atb[1]) / det;
    double const im = (ata[0][0] * atb[1] - atb[0] * ata[1][0]) / det;
    out[i] = Complex{re, im};
  }
  return out;
}

auto random_image(int height, int width, std::uint64_t seed) -> ComplexImage
{
  Rng rng(seed);
  ComplexImage img(height, width);
  for (auto &z : img.data()) {
    double const re = rng.normal();
    z = Complex{re, rng.normal()};
  }
  return img;
}

auto random_multicoil(int coils, int height, int width, std::uint64_t seed) -> MultiCoilKSpace
{
  Rng rng(seed);
  MultiCoilKSpace out(coils, height, width);
  for (auto &z : out.data()) {
    double const re = rng.normal();
    z = Complex{re, rng.normal()};
  }
  return out;
}

auto random_sensitivities(int coils, int height, int width, std::uint64_t seed) -> CoilSensitivities
{
  return CoilSensitivities(random_multicoil(coils, height, width, seed));
}

auto random_mask(int height, int width, double density, std::uint64_t seed) -> SamplingMask
{
  Rng rng(seed);
  SamplingMask mask(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      mask.set(y, x, rng.uniform() < density);
    }
  }
  if (mask.sampled_count() == 0) { mask.set(height / 2, width / 2, true); }
  return mask;
}

auto random_problem(int coils, int height, int width, double density, std::uint64_t seed) -> ReconProblem
{
  auto sens = random_sensitivities(coils, height, width, mix_seed(seed, 0));
  auto mask = random_mask(height, width, density, mix_seed(seed, 1));
  EncodingOperator const op(sens, mask);
  auto y = op.forward(random_image(height, width, mix_seed(seed, 2)));
  return validate_problem(std::move(y), std::move(sens), std::move(mask));
}

auto adjoint_mismatch(EncodingOperator const &op, std::uint64_t seed) -> double
{
  auto const m = random_image(op.height(), op.width(), mix_seed(seed, 10));
  auto const y = random_multicoil(op.coils(), op.height(), op.width(), mix_seed(seed, 11));
  auto const am = op.forward(m);
  auto const ahy = op.adjoint(y);
  Complex const lhs = inner(am.data(), y.data());
  Complex const rhs = inner(m.data(), ahy.data());
  return std::abs(lhs - rhs) / (norm2(am.data()) * norm2(y.data()));
}

auto max_relative_error(std::span<Complex const> a, std::span<Complex const> b) -> double
{
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

auto GradientCheck::max() const -> double
{
  return std::max({max_conv_weight, max_conv_bias, max_lambda, max_alpha, max_beta});
}

auto check_network_gradient(VsNetParams const &params,
                            ReconProblem const &problem,
                            ComplexImage const &reference,
                            double step) -> GradientCheck
{
  enum class Kind { Weight, Bias, Lambda, Alpha, Beta };
  struct Slot
  {
    double *value;
    int first_stage;
    Kind kind;
  };

  auto const base = vsnet_forward(params, problem);
  auto const loss = mse_loss(base.output, reference);
  auto const analytic = flatten(vsnet_backward(params, base, problem, loss.grad));
  double scale = 0.0;
  for (double g : analytic) {
    scale = std::max(scale, std::abs(g));
  }
  double const floor = std::max(1e-6 * scale, 1e-300);

  VsNetParams work = params;
  std::vector<Slot> slots;
  for (int l = 0; l < work.stage_count(); ++l) {
    for (auto &layer : work.stages[l].layers) {
      for (auto &v : layer.weights) {
        slots.push_back({&v, l, Kind::Weight});
      }
      for (auto &v : layer.biases) {
        slots.push_back({&v, l, Kind::Bias});
      }
    }
  }
  for (std::size_t i = 0; i < work.raw_scalars.size(); ++i) {
    int const set = static_cast<int>(i / 3);
    Kind const kind = i % 3 == 0 ? Kind::Lambda : (i % 3 == 1 ? Kind::Alpha : Kind::Beta);
    slots.push_back({&work.raw_scalars[i], work.mode == ParamMode::Shared ? 0 : set, kind});
  }

  // loss from `first` onward; false if any ReLU switched relative to `base`
  auto evaluate = [&](int first, double &value) {
    auto const fwd = vsnet_forward_from(work, problem, first, base.stages[first].input);
    value = mse_loss(fwd.output, reference).value;
    for (std::size_t j = 0; j < fwd.stages.size(); ++j) {
      auto const &t = fwd.stages[j].denoiser;
      auto const &t0 = base.stages[first + j].denoiser;
      auto const &layers = work.stages[first + j].layers;
      for (std::size_t r = 0; r < layers.size(); ++r) {
        if (layers[r].activation != Activation::Relu) { continue; }
        auto const &a = t.pre_activation[r];
        auto const &b = t0.pre_activation[r];
        for (std::size_t i = 0; i < a.size(); ++i) {
          if ((a[i] > 0.0) != (b[i] > 0.0)) { return false; }
        }
      }
    }
    return true;
  };

  double base_loss = 0.0;
  {
    auto const fwd = vsnet_forward_from(work, problem, 0, base.stages[0].input);
    base_loss = mse_loss(fwd.output, reference).value;
  }
  auto at = [&](Slot const &slot, double value, double &loss_value) {
    double const original = *slot.value;
    *slot.value = value;
    bool const clean = evaluate(slot.first_stage, loss_value);
    *slot.value = original;
    return clean;
  };

  GradientCheck result;
  for (std::size_t p = 0; p < slots.size(); ++p) {
    auto const &slot = slots[p];
    double const original = *slot.value;
    double h = step;
    double fd = 0.0;
    while (true) {
      double plus = 0.0, minus = 0.0;
      bool const clean_plus = at(slot, original + h, plus);
      bool const clean_minus = at(slot, original - h, minus);
      if (clean_plus && clean_minus) {
        fd = (plus - minus) / (2.0 * h);
        break;
      }
      // One side crosses a ReLU kink: second-order one-sided difference on the
      // other side, exact for the piecewise-quadratic dependence on a conv weight.
      double const dir = clean_plus ? 1.0 : -1.0;
      double twice = 0.0;
      if ((clean_plus || clean_minus) && at(slot, original + 2.0 * dir * h, twice)) {
        double const near = clean_plus ? plus : minus;
        fd = dir * (4.0 * near - twice - 3.0 * base_loss) / (2.0 * h);
        ++result.step_refinements;
        break;
      }
      if (h < 1e-8) {
        fd = (plus - minus) / (2.0 * h);
        break;
      }
      h /= 10.0;
      ++result.step_refinements;
    }
    double const an = analytic[p];
    double const err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
    double *target = nullptr;
    switch (slot.kind) {
    case Kind::Weight: target = &result.max_conv_weight; break;
    case Kind::Bias: target = &result.max_conv_bias; break;
    case Kind::Lambda: target = &result.max_lambda; break;
    case Kind::Alpha: target = &result.max_alpha; break;
    case Kind::Beta: target = &result.max_beta; break;
    }
    *target = std::max(*target, err);
    ++result.checked;
  }
  return result;
}

auto run_adjoint_suite(std::uint64_t seed) -> std::vector<CheckResult>
{
  std::vector<CheckResult> out;
  for (auto [h, w] : {std::pair{8, 8}, std::pair{15, 16}}) {
    for (int coils : {1, 4}) {
      CheckResult r{"adjoint " + std::to_string(h) + "x" + std::to_string(w) + " coils=" + std::to_string(coils), 0.0,
                    1e-10};
      for (std::uint64_t s = 0; s < 20; ++s) {
        auto const k = mix_seed(seed, s * 16 + static_cast<std::uint64_t>(h * 4 + coils));
        EncodingOperator const op(random_sensitivities(coils, h, w, mix_seed(k, 0)),
                                  random_mask(h, w, 0.5, mix_seed(k, 1)));
        r.error = std::max(r.error, adjoint_mismatch(op, mix_seed(k, 2)));
      }
      out.push_back(r);
    }
  }
  return out;
}

auto run_oracle_suite(std::uint64_t seed) -> std::vector<CheckResult>
{
  std::vector<CheckResult> out;

  CheckResult fft{"fft2c vs direct DFT (sizes <= 16x16)", 0.0, 1e-10};
  CheckResult parseval{"Parseval |fft2c x| = |x|", 0.0, 1e-12};
  CheckResult inverse{"ifft2c(fft2c x) = x", 0.0, 1e-12};
  std::uint64_t k = 0;
  for (auto [h, w] : {std::pair{1, 1}, std::pair{4, 4}, std::pair{5, 7}, std::pair{8, 8}, std::pair{15, 16},
                      std::pair{16, 16}, std::pair{9, 12}}) {
    auto const x = random_image(h, w, mix_seed(seed, 100 + k++));
    auto const fx = fft2c(x);
    fft.error = std::max(fft.error, max_relative_error(fx.data(), naive_dft2c(x).data()));
    double const nx = norm2(x.data());
    parseval.error = std::max(parseval.error, std::abs(norm2(fx.data()) - nx) / nx);
    inverse.error = std::max(inverse.error, max_relative_error(ifft2c(fx).data(), x.data()));
  }
  for (int n : {32, 64}) {
    auto const x = random_image(n, n, mix_seed(seed, 200 + n));
    double const nx = norm2(x.data());
    parseval.error = std::max(parseval.error, std::abs(norm2(fft2c(x).data()) - nx) / nx);
  }
  out.push_back(fft);
  out.push_back(parseval);
  out.push_back(inverse);

  CheckResult dc{"DCB closed form vs CG (10 x 16x16, 4 coils)", 0.0, 1e-8};
  CheckResult avg{"WAB closed form vs normal equations (10 x 16x16, 4 coils)", 0.0, 1e-10};
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto const s = mix_seed(seed, 300 + i);
    auto const problem = random_problem(4, 16, 16, 0.4, s);
    Rng rng(mix_seed(s, 5));
    ScalarWeights const w{rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0)};
    auto const m = random_image(16, 16, mix_seed(s, 6));
    auto const x = dcb(m, problem.op(), problem.kspace(), w);
    auto const xo = cg_data_consistency(m, problem.sensitivities(), problem.mask(), problem.kspace(), w);
    dc.error = std::max(dc.error, max_relative_error(x.data(), xo.data()));

    auto const u = random_image(16, 16, mix_seed(s, 7));
    auto const xs = random_multicoil(4, 16, 16, mix_seed(s, 8));
    auto const mo = wab(u, xs, problem.sensitivities(), w);
    auto const me = normal_equation_average(u, xs, problem.sensitivities(), w);
    avg.error = std::max(avg.error, max_relative_error(mo.data(), me.data()));
  }
  out.push_back(dc);
  out.push_back(avg);
  return out;
}

auto run_gradcheck_suite(std::uint64_t seed) -> std::vector<CheckResult>
{
  int const n = 8;
  int const coils = 2;
  auto sens = coil_maps(n, n, coils);
  auto mask = cartesian_mask({n, n, 2.0, 2, mix_seed(seed, 1)});
  auto const truth = random_image(n, n, mix_seed(seed, 2));
  auto data = synthesize(truth, sens, mask);
  auto const problem = validate_problem(std::move(data.kspace), std::move(sens), std::move(mask));

  std::vector<CheckResult> out;
  // The default 32-wide denoiser under per-stage scalars; shared scalars are
  // checked on a narrower denoiser since they exercise the same conv code.
  for (auto [mode, width] : {std::pair{ParamMode::PerStage, 32}, std::pair{ParamMode::Shared, 8}}) {
    auto params = make_vsnet_params(3, mode, ConvArchitecture::standard(width), mix_seed(seed, 3));
    // move the scalars away from 1 so lambda, alpha and beta are distinguishable
    Rng rng(mix_seed(seed, 4));
    for (auto &r : params.raw_scalars) {
      r += rng.uniform(-0.5, 0.5);
    }
    auto const g = check_network_gradient(params, problem, data.reference);
    auto const tag = " (" + to_string(mode) + ", width " + std::to_string(width) + ", n_it=3, 8x8, 2 coils)";
    out.push_back({"conv weights" + tag, g.max_conv_weight, 1e-4});
    out.push_back({"conv biases" + tag, g.max_conv_bias, 1e-4});
    out.push_back({"raw lambda" + tag, g.max_lambda, 1e-4});
    out.push_back({"raw alpha" + tag, g.max_alpha, 1e-4});
    out.push_back({"raw beta" + tag, g.max_beta, 1e-4});
  }
  return out;
}

} // namespace vsnet::verify
