#include "vsnet/denoiser.hpp"
#include "vsnet/random.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vsnet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<RowMatrix const>;
using Map = Eigen::Map<RowMatrix>;

// rows (channel, ky, kx), columns (y, x); zero outside the image
void im2col(std::vector<double> const &input, int channels, int kernel, int height, int width, std::vector<double> &cols)
{
  auto const hw = static_cast<std::size_t>(height) * width;
  int const pad = kernel / 2;
  cols.assign(static_cast<std::size_t>(channels) * kernel * kernel * hw, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    double const *plane = input.data() + c * hw;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        double *dst = cols.data() + row * hw;
        int const dy = ky - pad;
        int const dx = kx - pad;
        int const x0 = std::max(0, -dx);
        int const x1 = std::min(width, width - dx);
        for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
          double const *src = plane + static_cast<std::size_t>(y + dy) * width + dx;
          double *out = dst + static_cast<std::size_t>(y) * width;
          for (int x = x0; x < x1; ++x) {
            out[x] = src[x];
          }
        }
      }
    }
  }
}

// adjoint of im2col: scatter-add columns back onto the input planes
void col2im(std::vector<double> const &cols, int channels, int kernel, int height, int width, std::vector<double> &grad)
{
  auto const hw = static_cast<std::size_t>(height) * width;
  int const pad = kernel / 2;
  grad.assign(static_cast<std::size_t>(channels) * hw, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    double *plane = grad.data() + c * hw;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        double const *src = cols.data() + row * hw;
        int const dy = ky - pad;
        int const dx = kx - pad;
        int const x0 = std::max(0, -dx);
        int const x1 = std::min(width, width - dx);
        for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
          double *dst = plane + static_cast<std::size_t>(y + dy) * width + dx;
          double const *in = src + static_cast<std::size_t>(y) * width;
          for (int x = x0; x < x1; ++x) {
            dst[x] += in[x];
          }
        }
      }
    }
  }
}

auto to_channels(ComplexImage const &m) -> std::vector<double>
{
  std::vector<double> out(2 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = m[i].real();
    out[m.size() + i] = m[i].imag();
  }
  return out;
}

auto from_channels(std::vector<double> const &ch, int height, int width) -> ComplexImage
{
  ComplexImage out(height, width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Complex{ch[i], ch[out.size() + i]};
  }
  return out;
}

} // namespace

auto ConvArchitecture::standard(int width, int depth) -> ConvArchitecture
{
  ConvArchitecture arch;
  if (depth == 1) {
    arch.layers.push_back({2, 2, 3, Activation::None});
    return arch;
  }
  arch.layers.push_back({2, width, 3, Activation::Relu});
  for (int l = 1; l < depth - 1; ++l) {
    arch.layers.push_back({width, width, 3, Activation::Relu});
  }
  arch.layers.push_back({width, 2, 3, Activation::None});
  return arch;
}

auto ConvStack::architecture() const -> ConvArchitecture
{
  ConvArchitecture arch;
  arch.residual = residual;
  for (auto const &l : layers) {
    arch.layers.push_back({l.in_channels, l.out_channels, l.kernel, l.activation});
  }
  return arch;
}

auto ConvStack::parameter_count() const -> std::size_t
{
  std::size_t n = 0;
  for (auto const &l : layers) {
    n += l.weights.size() + l.biases.size();
  }
  return n;
}

void ConvStack::validate() const
{
  if (layers.empty()) { throw Error(ErrorKind::Config, "denoiser has no layers"); }
  if (layers.front().in_channels != 2 || layers.back().out_channels != 2) {
    throw Error(ErrorKind::Config, "denoiser must map 2 channels to 2 channels");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto const &l = layers[i];
    if (l.kernel < 1 || l.kernel % 2 == 0) {
      throw Error(ErrorKind::Config, "layer " + std::to_string(i) + ": kernel size must be odd");
    }
    if (i > 0 && layers[i - 1].out_channels != l.in_channels) {
      throw Error(ErrorKind::Config, "layer " + std::to_string(i) + ": input channels do not match previous layer");
    }
    if (l.weights.size() != l.weight_count() || l.biases.size() != static_cast<std::size_t>(l.out_channels)) {
      throw Error(ErrorKind::Config, "layer " + std::to_string(i) + ": parameter count does not match shape");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
        !std::all_of(l.biases.begin(), l.biases.end(), finite)) {
      throw Error(ErrorKind::Config, "layer " + std::to_string(i) + ": non-finite parameters");
    }
  }
}

auto make_conv_stack(ConvArchitecture const &arch, std::uint64_t seed) -> ConvStack
{
  Rng rng(seed);
  ConvStack stack;
  stack.residual = arch.residual;
  for (auto const &spec : arch.layers) {
    ConvLayer l{spec.in_channels, spec.out_channels, spec.kernel, spec.activation, {}, {}};
    double const fan_in = static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
    double const gain = spec.activation == Activation::Relu ? std::sqrt(2.0) : 1.0;
    double const bound = gain * std::sqrt(3.0 / fan_in);
    l.weights.resize(l.weight_count());
    for (auto &w : l.weights) {
      w = rng.uniform(-bound, bound);
    }
    l.biases.assign(spec.out_channels, 0.0);
    stack.layers.push_back(std::move(l));
  }
  stack.validate();
  return stack;
}

auto zeros_like(ConvStack const &stack) -> ConvStack
{
  ConvStack z = stack;
  for (auto &l : z.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.biases.begin(), l.biases.end(), 0.0);
  }
  return z;
}

auto db_forward(ConvStack const &stack, ComplexImage const &m) -> DbForward
{
  int const h = m.height();
  int const w = m.width();
  auto const hw = static_cast<Eigen::Index>(m.size());
  DbForward result;
  result.tape.height = h;
  result.tape.width = w;
  result.tape.columns.resize(stack.layers.size());
  result.tape.pre_activation.resize(stack.layers.size());

  auto act = to_channels(m);
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    auto const &l = stack.layers[i];
    if (h < l.kernel || w < l.kernel) {
      throw Error(ErrorKind::Shape, "image is smaller than the denoiser kernel");
    }
    auto &cols = result.tape.columns[i];
    im2col(act, l.in_channels, l.kernel, h, w, cols);
    auto const k = static_cast<Eigen::Index>(l.in_channels) * l.kernel * l.kernel;
    auto &pre = result.tape.pre_activation[i];
    pre.resize(static_cast<std::size_t>(l.out_channels) * hw);
    Map out(pre.data(), l.out_channels, hw);
    out.noalias() = ConstMap(l.weights.data(), l.out_channels, k) * ConstMap(cols.data(), k, hw);
    for (int o = 0; o < l.out_channels; ++o) {
      out.row(o).array() += l.biases[o];
    }
    act = pre;
    if (l.activation == Activation::Relu) {
      for (auto &v : act) {
        v = v > 0.0 ? v : 0.0;
      }
    }
  }
  result.output = from_channels(act, h, w);
  if (stack.residual) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      result.output[i] += m[i];
    }
  }
  return result;
}

auto db_backward(ConvStack const &stack, Tape const &tape, ComplexImage const &grad_out) -> DbGradient
{
  if (tape.columns.size() != stack.layers.size() || tape.pre_activation.size() != stack.layers.size()) {
    throw Error(ErrorKind::Validation, "tape does not match the denoiser layer count");
  }
  if (grad_out.height() != tape.height || grad_out.width() != tape.width) {
    throw Error(ErrorKind::Shape, "denoiser upstream gradient does not match the taped image shape");
  }
  int const h = tape.height;
  int const w = tape.width;
  auto const hw = static_cast<Eigen::Index>(grad_out.size());

  DbGradient g{ComplexImage(h, w), zeros_like(stack)};
  auto grad = to_channels(grad_out);
  std::vector<double> grad_cols;
  for (std::size_t r = stack.layers.size(); r-- > 0;) {
    auto const &l = stack.layers[r];
    auto const &pre = tape.pre_activation[r];
    auto const &cols = tape.columns[r];
    auto const k = static_cast<Eigen::Index>(l.in_channels) * l.kernel * l.kernel;
    if (pre.size() != static_cast<std::size_t>(l.out_channels) * hw || cols.size() != static_cast<std::size_t>(k * hw)) {
      throw Error(ErrorKind::Validation, "tape entry " + std::to_string(r) + " does not match layer shape");
    }
    if (l.activation == Activation::Relu) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(pre[i] > 0.0)) { grad[i] = 0.0; }
      }
    }
    ConstMap gm(grad.data(), l.out_channels, hw);
    ConstMap cm(cols.data(), k, hw);
    auto &gl = g.weights.layers[r];
    Map(gl.weights.data(), l.out_channels, k).noalias() = gm * cm.transpose();
    for (int o = 0; o < l.out_channels; ++o) {
      auto const *row = grad.data() + o * hw;
      gl.biases[o] = std::accumulate(row, row + hw, 0.0);
    }
    grad_cols.resize(static_cast<std::size_t>(k * hw));
    Map(grad_cols.data(), k, hw).noalias() = ConstMap(l.weights.data(), l.out_channels, k).transpose() * gm;
    col2im(grad_cols, l.in_channels, l.kernel, h, w, grad);
  }
  g.input = from_channels(grad, h, w);
  if (stack.residual) {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      g.input[i] += grad_out[i];
    }
  }
  return g;
}

ConvDenoiser::ConvDenoiser(ConvStack stack)
  : stack_{std::move(stack)}
{
  stack_.validate();
}

auto ConvDenoiser::apply(ComplexImage const &m) const -> ComplexImage { return db_forward(stack_, m).output; }

} // namespace vsnet
