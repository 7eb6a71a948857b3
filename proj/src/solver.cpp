#include "vsnet/solver.hpp"

#include <cmath>

namespace vsnet {

void SolverConfig::validate() const
{
  if (iterations < 1) { throw Error(ErrorKind::Config, "iteration count must be >= 1"); }
  weights.validate();
  if (!denoiser && stage_denoisers.empty()) { throw Error(ErrorKind::Config, "no denoiser configured"); }
  if (!stage_denoisers.empty() && stage_denoisers.size() != static_cast<std::size_t>(iterations)) {
    throw Error(ErrorKind::Config, "per-stage denoiser count does not match the iteration count");
  }
  if (!stage_weights.empty() && stage_weights.size() != static_cast<std::size_t>(iterations)) {
    throw Error(ErrorKind::Config, "per-stage weight count does not match the iteration count");
  }
  for (auto const &w : stage_weights) {
    w.validate();
  }
  for (auto const &d : stage_denoisers) {
    if (!d) { throw Error(ErrorKind::Config, "null per-stage denoiser"); }
  }
}

auto split_objective(ReconProblem const &problem,
                     ComplexImage const &m,
                     ComplexImage const &u,
                     MultiCoilImages const &x,
                     ScalarWeights const &w) -> double
{
  auto const &op = problem.op();
  auto const d = op.mask().data();
  double fidelity = 0.0;
  double coupling = 0.0;
  std::vector<Complex> k(x.plane_size());
  for (int c = 0; c < x.coils(); ++c) {
    auto const xc = x.plane(c);
    std::copy(xc.begin(), xc.end(), k.begin());
    fft2c_inplace(k, x.height(), x.width());
    auto const yc = problem.kspace().plane(c);
    auto const s = op.sensitivities().map(c);
    for (std::size_t i = 0; i < k.size(); ++i) {
      Complex const dk = d[i] != 0 ? k[i] : Complex{};
      Complex const dy = d[i] != 0 ? yc[i] : Complex{};
      fidelity += std::norm(dk - dy);
      coupling += std::norm(xc[i] - s[i] * m[i]);
    }
  }
  double penalty = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    penalty += std::norm(u[i] - m[i]);
  }
  return 0.5 * (w.lambda * fidelity + w.alpha * coupling + w.beta * penalty);
}

auto zero_fill(ReconProblem const &problem) -> ComplexImage { return problem.op().adjoint(problem.kspace()); }

auto solve(ReconProblem const &problem, SolverConfig const &cfg) -> SolveResult
{
  cfg.validate();
  SolveResult result;
  auto m = zero_fill(problem);
  for (int k = 0; k < cfg.iterations; ++k) {
    auto const &denoiser = cfg.stage_denoisers.empty() ? *cfg.denoiser : *cfg.stage_denoisers[k];
    auto const &w = cfg.stage_weights.empty() ? cfg.weights : cfg.stage_weights[k];
    auto u = denoiser.apply(m);
    auto x = dcb(m, problem.op(), problem.kspace(), w);
    m = wab(u, x, problem.sensitivities(), w);
    if (cfg.record_history) {
      double const e = split_objective(problem, m, u, x, w);
      if (!std::isfinite(e)) { throw Error(ErrorKind::Validation, "objective became non-finite"); }
      result.history.push_back(e);
    }
  }
  result.image = std::move(m);
  return result;
}

} // namespace vsnet
