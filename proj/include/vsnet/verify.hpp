#pragma once

#include "vsnet/network.hpp"
#include "vsnet/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Reference implementations that share no code path with the production
// operators they check: direct DFT sums, conjugate gradients, per-pixel
// least squares and finite differences.
namespace vsnet::verify {

/// sum_n x[n] exp(-2 pi i (k - c)(n - c) / N) / sqrt(N) per axis, c = floor(N/2).
auto naive_dft2c(ComplexImage const &img, bool inverse = false) -> ComplexImage;

/// Minimises lambda/2 sum_i |D F x_i - y_i|^2 + alpha/2 sum_i |x_i - S_i m|^2 by
/// conjugate gradients on the normal equations, with F the naive DFT.
auto cg_data_consistency(ComplexImage const &m,
                         CoilSensitivities const &sens,
                         SamplingMask const &mask,
                         MultiCoilKSpace const &y,
                         ScalarWeights const &w,
                         int max_iterations = 50) -> MultiCoilImages;

/// Per pixel, the 2x2 real normal equations of
/// alpha/2 sum_i |x_i - S_i m|^2 + beta/2 |u - m|^2 solved by Cramer's rule.
auto normal_equation_average(ComplexImage const &u,
                             MultiCoilImages const &x,
                             CoilSensitivities const &sens,
                             ScalarWeights const &w) -> ComplexImage;

auto random_image(int height, int width, std::uint64_t seed) -> ComplexImage;
auto random_multicoil(int coils, int height, int width, std::uint64_t seed) -> MultiCoilKSpace;
/// Unnormalised random complex sensitivities.
auto random_sensitivities(int coils, int height, int width, std::uint64_t seed) -> CoilSensitivities;
/// Bernoulli(density) mask with at least one sampled entry.
auto random_mask(int height, int width, double density, std::uint64_t seed) -> SamplingMask;
/// Random sensitivities, mask and measured k-space of a random image.
auto random_problem(int coils, int height, int width, double density, std::uint64_t seed) -> ReconProblem;

/// |<A m, y> - <m, A^H y>| / (|A m| |y|) for random m, y.
auto adjoint_mismatch(EncodingOperator const &op, std::uint64_t seed) -> double;

/// max_i |a_i - b_i| / max(|b|_inf, tiny)
auto max_relative_error(std::span<Complex const> a, std::span<Complex const> b) -> double;

struct GradientCheck
{
  double max_conv_weight = 0.0;
  double max_conv_bias = 0.0;
  double max_lambda = 0.0;
  double max_alpha = 0.0;
  double max_beta = 0.0;
  std::size_t checked = 0;
  std::size_t step_refinements = 0; // parameters where h was reduced to stay off a ReLU kink

  auto max() const -> double;
};

/*
 * Central differences of L = 1/2 |net(problem) - reference|^2 for every
 * parameter, compared with vsnet_backward. Relative error per parameter is
 * |fd - an| / max(|fd|, |an|, 1e-6 * max|an|). If a perturbation flips any
 * ReLU relative to the unperturbed pass, h is divided by 10 (down to 1e-8)
 * so the difference stays on one linear piece.
 */
auto check_network_gradient(VsNetParams const &params,
                            ReconProblem const &problem,
                            ComplexImage const &reference,
                            double step = 1e-5) -> GradientCheck;

struct CheckResult
{
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;

  auto passed() const -> bool { return error < tolerance; }
};

auto run_adjoint_suite(std::uint64_t seed) -> std::vector<CheckResult>;
auto run_oracle_suite(std::uint64_t seed) -> std::vector<CheckResult>;
auto run_gradcheck_suite(std::uint64_t seed) -> std::vector<CheckResult>;

} // namespace vsnet::verify
