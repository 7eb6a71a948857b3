#include "support.hpp"

#include "doctest.h"

#include "vsnet/random.hpp"

using namespace vsnet;
using vsnet::test::rel_err;

namespace {

using Planes = std::vector<std::vector<double>>; // [channel][y * w + x]

auto planes_of(ComplexImage const &m) -> Planes
{
  Planes p(2, std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    p[0][i] = m[i].real();
    p[1][i] = m[i].imag();
  }
  return p;
}

auto image_of(Planes const &p, int h, int w) -> ComplexImage
{
  ComplexImage m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = {p[0][i], p[1][i]};
  }
  return m;
}

auto weight(ConvLayer const &l, int o, int i, int ky, int kx) -> double
{
  return l.weights[((std::size_t(o) * l.in_channels + i) * l.kernel + ky) * l.kernel + kx];
}

// direct same-padded cross-correlation
auto naive_conv(ConvLayer const &l, Planes const &in, int h, int w) -> Planes
{
  int const r = l.kernel / 2;
  Planes out(l.out_channels, std::vector<double>(std::size_t(h) * w));
  for (int o = 0; o < l.out_channels; ++o) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = l.biases[o];
        for (int i = 0; i < l.in_channels; ++i) {
          for (int ky = 0; ky < l.kernel; ++ky) {
            for (int kx = 0; kx < l.kernel; ++kx) {
              int const yy = y + ky - r, xx = x + kx - r;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) { continue; }
              acc += weight(l, o, i, ky, kx) * in[i][std::size_t(yy) * w + xx];
            }
          }
        }
        if (l.activation == Activation::Relu) { acc = std::max(acc, 0.0); }
        out[o][std::size_t(y) * w + x] = acc;
      }
    }
  }
  return out;
}

auto naive_forward(ConvStack const &s, ComplexImage const &m) -> ComplexImage
{
  auto p = planes_of(m);
  for (auto const &l : s.layers) {
    p = naive_conv(l, p, m.height(), m.width());
  }
  auto out = image_of(p, m.height(), m.width());
  if (s.residual) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += m[i];
    }
  }
  return out;
}

// transpose of one linear layer (bias and activation ignored)
auto naive_conv_adjoint(ConvLayer const &l, Planes const &g, int h, int w) -> Planes
{
  int const r = l.kernel / 2;
  Planes out(l.in_channels, std::vector<double>(std::size_t(h) * w, 0.0));
  for (int o = 0; o < l.out_channels; ++o) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int i = 0; i < l.in_channels; ++i) {
          for (int ky = 0; ky < l.kernel; ++ky) {
            for (int kx = 0; kx < l.kernel; ++kx) {
              int const yy = y + ky - r, xx = x + kx - r;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) { continue; }
              out[i][std::size_t(yy) * w + xx] += weight(l, o, i, ky, kx) * g[o][std::size_t(y) * w + x];
            }
          }
        }
      }
    }
  }
  return out;
}

auto small_arch(bool residual = true) -> ConvArchitecture
{
  auto a = ConvArchitecture::standard(4, 3);
  a.residual = residual;
  return a;
}

auto randomize_biases(ConvStack s, std::uint64_t seed) -> ConvStack
{
  Rng rng(seed);
  for (auto &l : s.layers) {
    for (auto &b : l.biases) {
      b = rng.uniform(-0.2, 0.2);
    }
  }
  return s;
}

auto objective(ConvStack const &s, ComplexImage const &m, ComplexImage const &g) -> double
{
  return inner(g.data(), db_forward(s, m).output.data()).real();
}

} // namespace

TEST_SUITE("denoiser")
{
  TEST_CASE("default architecture")
  {
    auto const a = ConvArchitecture::standard();
    REQUIRE(a.layers.size() == 5);
    CHECK(a.layers.front().in_channels == 2);
    CHECK(a.layers.back().out_channels == 2);
    CHECK(a.layers.back().activation == Activation::None);
    for (std::size_t i = 0; i + 1 < a.layers.size(); ++i) {
      CHECK(a.layers[i].out_channels == 32);
      CHECK(a.layers[i].activation == Activation::Relu);
      CHECK(a.layers[i].kernel == 3);
    }
    CHECK(a.residual);
    CHECK(make_conv_stack(a, 0).parameter_count() == 2 * 32 * 9 + 32 + 3 * (32 * 32 * 9 + 32) + 32 * 2 * 9 + 2);
  }

  TEST_CASE("initialisation is seeded and bounded")
  {
    auto const a = ConvArchitecture::standard();
    auto const s = make_conv_stack(a, 3);
    CHECK(s == make_conv_stack(a, 3));
    CHECK_FALSE(s == make_conv_stack(a, 4));
    for (auto const &l : s.layers) {
      double const gain = l.activation == Activation::Relu ? std::sqrt(2.0) : 1.0;
      double const bound = gain * std::sqrt(3.0 / (l.in_channels * l.kernel * l.kernel));
      for (double v : l.weights) {
        CHECK(std::abs(v) <= bound);
      }
      for (double b : l.biases) {
        CHECK(b == 0.0);
      }
    }
  }

  TEST_CASE("zero weights with the residual connection are the identity")
  {
    auto const s = zeros_like(make_conv_stack(ConvArchitecture::standard(), 1));
    auto const m = verify::random_image(9, 11, 2);
    CHECK(db_forward(s, m).output == m);
  }

  TEST_CASE("a 1x1 identity kernel without residual is the identity")
  {
    ConvLayer l{2, 2, 1, Activation::None, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0}};
    ConvStack const s{{l}, false};
    auto const m = verify::random_image(6, 5, 3);
    CHECK(db_forward(s, m).output == m);
  }

  TEST_CASE("forward matches direct convolution")
  {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto const s = randomize_biases(make_conv_stack(ConvArchitecture::standard(), seed), seed + 9);
      auto const m = verify::random_image(8, 8, seed + 20);
      CHECK(rel_err(db_forward(s, m).output, naive_forward(s, m)) < 1e-10);
    }
    ConvArchitecture odd{{{2, 3, 5, Activation::Relu}, {3, 2, 1, Activation::None}}, false};
    auto const s = randomize_biases(make_conv_stack(odd, 7), 8);
    auto const m = verify::random_image(7, 10, 9);
    CHECK(rel_err(db_forward(s, m).output, naive_forward(s, m)) < 1e-10);
  }

  TEST_CASE("output keeps the input shape")
  {
    for (int k : {1, 3, 5}) {
      ConvArchitecture a{{{2, 6, k, Activation::Relu}, {6, 2, k, Activation::None}}, true};
      auto const s = make_conv_stack(a, 1);
      for (auto [h, w] : {std::pair{5, 5}, std::pair{9, 13}, std::pair{16, 7}}) {
        auto const out = db_forward(s, verify::random_image(h, w, 2)).output;
        CHECK(out.height() == h);
        CHECK(out.width() == w);
      }
    }
  }

  TEST_CASE("images smaller than the kernel are rejected")
  {
    auto const s = make_conv_stack(ConvArchitecture::standard(), 1);
    CHECK_THROWS_AS(db_forward(s, ComplexImage(2, 8)), Error);
  }

  TEST_CASE("stack validation")
  {
    auto s = make_conv_stack(small_arch(), 1);
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    bad.layers[1].in_channels = 3;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = s;
    bad.layers[0].weights[0] = std::nan("");
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(make_conv_stack({{{1, 2, 3, Activation::None}}, true}, 0), Error);
    CHECK_THROWS_AS(make_conv_stack({{{2, 2, 2, Activation::None}}, true}, 0), Error);
  }

  TEST_CASE("zero upstream gradient gives zero gradients")
  {
    auto const s = make_conv_stack(small_arch(), 2);
    auto const fwd = db_forward(s, verify::random_image(8, 8, 3));
    auto const g = db_backward(s, fwd.tape, ComplexImage(8, 8));
    CHECK(g.input == ComplexImage(8, 8));
    CHECK(g.weights == zeros_like(s));
  }

  TEST_CASE("backward of a linear stack is the adjoint convolution")
  {
    ConvArchitecture a{{{2, 3, 3, Activation::None}, {3, 2, 3, Activation::None}}, true};
    auto const s = randomize_biases(make_conv_stack(a, 4), 5);
    auto const m = verify::random_image(7, 9, 6);
    auto const go = verify::random_image(7, 9, 7);
    auto const got = db_backward(s, db_forward(s, m).tape, go).input;

    auto p = planes_of(go);
    for (auto l = s.layers.rbegin(); l != s.layers.rend(); ++l) {
      p = naive_conv_adjoint(*l, p, 7, 9);
    }
    auto want = image_of(p, 7, 9);
    for (std::size_t i = 0; i < want.size(); ++i) {
      want[i] += go[i];
    }
    CHECK(rel_err(got, want) < 1e-12);
  }

  TEST_CASE("gradients match central finite differences")
  {
    double const h = 1e-5;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto const s = randomize_biases(make_conv_stack(small_arch(), seed), seed + 100);
      auto const m = verify::random_image(8, 8, seed + 200);
      auto const g = verify::random_image(8, 8, seed + 300);
      auto const an = db_backward(s, db_forward(s, m).tape, g);

      double worst = 0.0;
      auto compare = [&](double fd, double a) {
        worst = std::max(worst, std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-8}));
      };
      for (std::size_t l = 0; l < s.layers.size(); ++l) {
        for (std::size_t k = 0; k < s.layers[l].weights.size(); ++k) {
          auto p = s, q = s;
          p.layers[l].weights[k] += h;
          q.layers[l].weights[k] -= h;
          compare((objective(p, m, g) - objective(q, m, g)) / (2 * h), an.weights.layers[l].weights[k]);
        }
        for (std::size_t k = 0; k < s.layers[l].biases.size(); ++k) {
          auto p = s, q = s;
          p.layers[l].biases[k] += h;
          q.layers[l].biases[k] -= h;
          compare((objective(p, m, g) - objective(q, m, g)) / (2 * h), an.weights.layers[l].biases[k]);
        }
      }
      for (std::size_t i = 0; i < m.size(); i += 5) {
        for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
          auto mp = m, mq = m;
          mp[i] += h * dir;
          mq[i] -= h * dir;
          double const a = dir.real() * an.input[i].real() + dir.imag() * an.input[i].imag();
          compare((objective(s, mp, g) - objective(s, mq, g)) / (2 * h), a);
        }
      }
      INFO("seed " << seed);
      CHECK(worst < 1e-5);
    }
  }

  TEST_CASE("forward and backward are deterministic")
  {
    auto const s = make_conv_stack(ConvArchitecture::standard(), 5);
    auto const m = verify::random_image(12, 12, 6);
    auto const a = db_forward(s, m);
    auto const b = db_forward(s, m);
    CHECK(a.output == b.output);
    auto const g = verify::random_image(12, 12, 7);
    CHECK(db_backward(s, a.tape, g).weights == db_backward(s, b.tape, g).weights);
  }

  TEST_CASE("ConvDenoiser applies the stack")
  {
    auto const s = make_conv_stack(small_arch(), 8);
    ConvDenoiser const d(s);
    auto const m = verify::random_image(8, 8, 9);
    CHECK(d.apply(m) == db_forward(s, m).output);
  }
}
