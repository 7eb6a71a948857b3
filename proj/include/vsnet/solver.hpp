#pragma once

#include "vsnet/blocks.hpp"

#include <memory>
#include <vector>

namespace vsnet {

struct SolverConfig
{
  int iterations = 10;
  ScalarWeights weights;
  std::shared_ptr<Denoiser const> denoiser = identity_denoiser();
  bool record_history = false;

  // Optional per-iteration overrides. When non-empty they must hold exactly
  // `iterations` entries; this is how an unrolled network's stages are replayed.
  std::vector<std::shared_ptr<Denoiser const>> stage_denoisers;
  std::vector<ScalarWeights> stage_weights;

  void validate() const;
};

struct SolveResult
{
  ComplexImage image;
  std::vector<double> history; // split objective after each round, when recorded
};

/// Split objective with R = 0:
///   lambda/2 sum_i |D F x_i - y_i|^2 + alpha/2 sum_i |x_i - S_i m|^2 + beta/2 |u - m|^2
auto split_objective(ReconProblem const &problem,
                     ComplexImage const &m,
                     ComplexImage const &u,
                     MultiCoilImages const &x,
                     ScalarWeights const &w) -> double;

/// Zero-filled start, then `iterations` rounds of u <- DB(m), x <- DCB(m), m <- WAB(u, x).
auto solve(ReconProblem const &problem, SolverConfig const &cfg) -> SolveResult;

auto zero_fill(ReconProblem const &problem) -> ComplexImage;

} // namespace vsnet
