#pragma once

#include "vsnet/blocks.hpp"

#include <cstdint>
#include <vector>

namespace vsnet {

enum class Activation
{
  None,
  Relu,
};

/// One same-padded, stride-1 convolution. Weights are laid out
/// [out_channel][in_channel][ky][kx]; the kernel size is odd.
struct ConvLayer
{
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  Activation activation = Activation::Relu;
  std::vector<double> weights;
  std::vector<double> biases;

  auto weight_count() const -> std::size_t
  {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }

  friend auto operator==(ConvLayer const &, ConvLayer const &) -> bool = default;
};

struct ConvLayerSpec
{
  int in_channels;
  int out_channels;
  int kernel;
  Activation activation;

  friend auto operator==(ConvLayerSpec const &, ConvLayerSpec const &) -> bool = default;
};

struct ConvArchitecture
{
  std::vector<ConvLayerSpec> layers;
  bool residual = true;

  /// 2 -> 32 -> 32 -> 32 -> 32 -> 2, 3x3 kernels, ReLU after all but the last layer.
  static auto standard(int width = 32, int depth = 5) -> ConvArchitecture;

  friend auto operator==(ConvArchitecture const &, ConvArchitecture const &) -> bool = default;
};

/// CNN acting on the real two-channel (re, im) encoding of a complex image,
/// optionally with a global residual connection.
struct ConvStack
{
  std::vector<ConvLayer> layers;
  bool residual = true;

  auto architecture() const -> ConvArchitecture;
  auto parameter_count() const -> std::size_t;
  /// Throws Error{Config} if channels do not chain, the ends are not 2-channel,
  /// kernels are even or weights are non-finite.
  void validate() const;

  friend auto operator==(ConvStack const &, ConvStack const &) -> bool = default;
};

/// Kaiming-style uniform init (bound gain*sqrt(3/fan_in), gain sqrt(2) before a
/// ReLU, 1 otherwise), zero biases. Deterministic in `seed`.
auto make_conv_stack(ConvArchitecture const &arch, std::uint64_t seed) -> ConvStack;
/// Same shapes, every weight and bias zero.
auto zeros_like(ConvStack const &stack) -> ConvStack;

/// Activations cached by db_forward for db_backward.
struct Tape
{
  int height = 0;
  int width = 0;
  std::vector<std::vector<double>> columns;        // im2col of every layer input
  std::vector<std::vector<double>> pre_activation; // every layer output before its activation
};

struct DbForward
{
  ComplexImage output;
  Tape tape;
};

auto db_forward(ConvStack const &stack, ComplexImage const &m) -> DbForward;

struct DbGradient
{
  ComplexImage input;
  ConvStack weights; // gradients, shaped like the stack
};

auto db_backward(ConvStack const &stack, Tape const &tape, ComplexImage const &grad_out) -> DbGradient;

class ConvDenoiser final : public Denoiser
{
public:
  explicit ConvDenoiser(ConvStack stack);
  auto apply(ComplexImage const &m) const -> ComplexImage override;
  auto stack() const -> ConvStack const & { return stack_; }

private:
  ConvStack stack_;
};

} // namespace vsnet
