#include "support.hpp"

#include "vsnet/simulate.hpp"

#include "doctest.h"

using namespace vsnet;

namespace {

auto constant(int h, int w, Complex v) -> ComplexImage
{
  return ComplexImage(h, w, std::vector<Complex>(std::size_t(h) * w, v));
}

auto magnitude_plus(ComplexImage const &ref, double delta) -> ComplexImage
{
  auto out = ref;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::polar(std::abs(ref[i]) + delta, std::arg(ref[i]));
  }
  return out;
}

auto rotate(ComplexImage m, double phase) -> ComplexImage
{
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] *= std::polar(1.0, phase);
  }
  return m;
}

} // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("identical images")
  {
    auto const m = phantom(32, 32, 1);
    CHECK(psnr(m, m) == kPsnrIdentical);
    CHECK(ssim(m, m) == 1.0);
  }

  TEST_CASE("closed-form 20 dB case")
  {
    // peak 1, every magnitude off by 0.1
    auto ref = constant(8, 8, 0.5);
    ref(3, 4) = 1.0;
    auto const test = magnitude_plus(ref, 0.1);
    CHECK(std::abs(psnr(test, ref) - 20.0) < 1e-12);
  }

  TEST_CASE("halving the error adds 20 log10 2 dB")
  {
    auto const ref = phantom(32, 32, 2);
    auto const noisy = rotate(magnitude_plus(ref, 0.08), 0.3);
    auto const half = magnitude_plus(ref, 0.04);
    CHECK(std::abs(psnr(half, ref) - psnr(noisy, ref) - 20.0 * std::log10(2.0)) < 1e-9);
  }

  TEST_CASE("smaller errors never lower psnr")
  {
    auto const ref = phantom(24, 24, 3);
    auto const noise = verify::random_image(24, 24, 4);
    double last = -INFINITY;
    for (double scale : {0.5, 0.2, 0.1, 0.01}) {
      auto t = ref;
      for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] += scale * noise[i];
      }
      double const p = psnr(t, ref);
      CHECK(p >= last);
      last = p;
    }
  }

  TEST_CASE("the exact-recovery tolerance")
  {
    auto const ref = phantom(16, 16, 5);
    auto const close = magnitude_plus(ref, 1e-13);
    CHECK(std::isfinite(psnr(close, ref)));
    CHECK(psnr(close, ref, 1e-10) == kPsnrIdentical);
    CHECK(std::isfinite(psnr(magnitude_plus(ref, 1e-6), ref, 1e-10)));
  }

  TEST_CASE("psnr errors")
  {
    CHECK_THROWS_AS(psnr(ComplexImage(8, 8), ComplexImage(8, 8)), Error);
    CHECK_THROWS_AS(psnr(ComplexImage(8, 8), constant(8, 9, 1.0)), Error);
  }

  TEST_CASE("ssim of constants")
  {
    CHECK(ssim(constant(9, 9, 0.4), constant(9, 9, 0.4)) == 1.0);
    CHECK(ssim(constant(9, 9, 0.4), constant(9, 9, 0.2)) < 1.0);
  }

  TEST_CASE("scaling is penalised")
  {
    auto const ref = phantom(32, 32, 6);
    auto doubled = ref;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      doubled[i] *= 2.0;
    }
    CHECK(ssim(doubled, ref) < 1.0);
  }

  TEST_CASE("ssim is symmetric with a shared range")
  {
    auto const a = phantom(32, 32, 7);
    auto b = a;
    auto const noise = verify::random_image(32, 32, 8);
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] += 0.1 * noise[i];
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      peak = std::max({peak, std::abs(a[i]), std::abs(b[i])});
    }
    CHECK(std::abs(ssim(a, b, peak) - ssim(b, a, peak)) < 1e-12);
    double const s = ssim(a, b);
    CHECK(s < 1.0);
    CHECK(s > -1.0);
  }

  TEST_CASE("ssim matches a direct window loop")
  {
    auto const ref = phantom(20, 18, 9);
    auto const t = magnitude_plus(rotate(ref, 1.0), 0.05);
    double const L = [&] {
      double p = 0.0;
      for (auto v : ref.data()) {
        p = std::max(p, std::abs(v));
      }
      return p;
    }();
    double const c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
    double total = 0.0;
    int windows = 0;
    for (int y0 = 0; y0 + 7 <= 20; ++y0) {
      for (int x0 = 0; x0 + 7 <= 18; ++x0) {
        double mx = 0, my = 0;
        for (int y = y0; y < y0 + 7; ++y) {
          for (int x = x0; x < x0 + 7; ++x) {
            mx += std::abs(t(y, x)) / 49.0;
            my += std::abs(ref(y, x)) / 49.0;
          }
        }
        double vx = 0, vy = 0, cxy = 0;
        for (int y = y0; y < y0 + 7; ++y) {
          for (int x = x0; x < x0 + 7; ++x) {
            double const a = std::abs(t(y, x)) - mx, b = std::abs(ref(y, x)) - my;
            vx += a * a / 49.0;
            vy += b * b / 49.0;
            cxy += a * b / 49.0;
          }
        }
        total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++windows;
      }
    }
    CHECK(std::abs(ssim(t, ref) - total / windows) < 1e-10);
  }

  TEST_CASE("metrics ignore a global phase")
  {
    auto const ref = phantom(32, 32, 10);
    auto const t = magnitude_plus(ref, 0.03);
    for (double phase : {0.7, -2.0}) {
      CHECK(std::abs(psnr(rotate(t, phase), ref) - psnr(t, ref)) < 1e-9);
      CHECK(std::abs(psnr(t, rotate(ref, phase)) - psnr(t, ref)) < 1e-9);
      CHECK(std::abs(ssim(rotate(t, phase), ref) - ssim(t, ref)) < 1e-12);
      CHECK(std::abs(ssim(t, rotate(ref, phase)) - ssim(t, ref)) < 1e-12);
    }
  }

  TEST_CASE("ssim errors")
  {
    CHECK_THROWS_AS(ssim(ComplexImage(6, 20), ComplexImage(6, 20)), Error);
    CHECK_THROWS_AS(ssim(constant(8, 8, 1.0), constant(8, 9, 1.0)), Error);
    CHECK_THROWS_AS(ssim(constant(8, 8, 1.0), constant(8, 8, 1.0), 0.0), Error);
  }

  TEST_CASE("metric spelling")
  {
    CHECK(format_metric(kPsnrIdentical) == "inf");
    CHECK(parse_metric("inf") == kPsnrIdentical);
    for (double v : {0.0, 20.0, 41.27, 1.0 / 3.0, -2.5e-7}) {
      CHECK(parse_metric(format_metric(v)) == v);
    }
    CHECK(std::isnan(parse_metric(format_metric(std::nan("")))));
    CHECK_THROWS_AS(parse_metric("12dB"), Error);
    CHECK_THROWS_AS(parse_metric(""), Error);
    auto const r = evaluate(phantom(16, 16, 1), phantom(16, 16, 1));
    CHECK(r.psnr == kPsnrIdentical);
    CHECK(r.ssim == 1.0);
  }
}
