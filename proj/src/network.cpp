#include "vsnet/network.hpp"
#include "vsnet/random.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

namespace vsnet {

namespace {

auto sigmoid(double v) -> double
{
  if (v >= 0.0) { return 1.0 / (1.0 + std::exp(-v)); }
  double const e = std::exp(v);
  return e / (1.0 + e);
}

void append(std::vector<double> &out, ConvStack const &stack)
{
  for (auto const &l : stack.layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
}

auto mean(std::vector<double> const &v) -> double
{
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

auto to_string(ParamMode mode) -> std::string { return mode == ParamMode::Shared ? "theta1" : "theta2"; }

auto parse_param_mode(std::string const &s) -> ParamMode
{
  if (s == "theta1") { return ParamMode::Shared; }
  if (s == "theta2") { return ParamMode::PerStage; }
  throw Error(ErrorKind::Config, "unknown parameter mode '" + s + "' (expected theta1 or theta2)");
}

auto softplus(double raw) -> double
{
  // log(1 + e^raw), stable for large |raw|
  return raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
}

auto raw_for_weight(double weight) -> double
{
  double const target = weight - kWeightFloor;
  if (!(target > 0.0)) { throw Error(ErrorKind::Config, "weight must exceed the 1e-6 floor"); }
  // inverse of softplus: log(e^t - 1)
  return target > 30.0 ? target + std::log1p(-std::exp(-target)) : std::log(std::expm1(target));
}

auto VsNetParams::weights(int stage) const -> ScalarWeights
{
  auto const base = static_cast<std::size_t>(3 * scalar_set(stage));
  return {softplus(raw_scalars[base]) + kWeightFloor, softplus(raw_scalars[base + 1]) + kWeightFloor,
          softplus(raw_scalars[base + 2]) + kWeightFloor};
}

auto VsNetParams::parameter_count() const -> std::size_t
{
  std::size_t n = raw_scalars.size();
  for (auto const &s : stages) {
    n += s.parameter_count();
  }
  return n;
}

void VsNetParams::validate() const
{
  if (stages.empty()) { throw Error(ErrorKind::Config, "network needs at least one stage"); }
  std::size_t const sets = mode == ParamMode::Shared ? 1 : stages.size();
  if (raw_scalars.size() != 3 * sets) {
    throw Error(ErrorKind::Config, "expected " + std::to_string(3 * sets) + " raw scalars for " +
                                     to_string(mode) + ", got " + std::to_string(raw_scalars.size()));
  }
  for (double r : raw_scalars) {
    if (!std::isfinite(r)) { throw Error(ErrorKind::Config, "non-finite raw scalar"); }
  }
  for (auto const &s : stages) {
    s.validate();
  }
}

auto make_vsnet_params(int stages, ParamMode mode, ConvArchitecture const &arch, std::uint64_t seed, ScalarWeights initial)
  -> VsNetParams
{
  if (stages < 1) { throw Error(ErrorKind::Config, "stage count must be >= 1"); }
  initial.validate();
  VsNetParams p;
  p.mode = mode;
  for (int l = 0; l < stages; ++l) {
    p.stages.push_back(make_conv_stack(arch, mix_seed(seed, static_cast<std::uint64_t>(l))));
  }
  int const sets = mode == ParamMode::Shared ? 1 : stages;
  for (int s = 0; s < sets; ++s) {
    p.raw_scalars.push_back(raw_for_weight(initial.lambda));
    p.raw_scalars.push_back(raw_for_weight(initial.alpha));
    p.raw_scalars.push_back(raw_for_weight(initial.beta));
  }
  return p;
}

auto vsnet_forward_from(VsNetParams const &params, ReconProblem const &problem, int first_stage, ComplexImage input)
  -> VsNetForward
{
  if (first_stage < 0 || first_stage > params.stage_count()) {
    throw Error(ErrorKind::Config, "first stage out of range");
  }
  if (input.height() != problem.height() || input.width() != problem.width()) {
    throw Error(ErrorKind::Shape, "network input does not match the problem shape");
  }
  VsNetForward fwd;
  auto m = std::move(input);
  for (int k = first_stage; k < params.stage_count(); ++k) {
    StageTape t;
    t.weights = params.weights(k);
    auto db = db_forward(params.stages[k], m);
    t.denoiser = std::move(db.tape);
    t.u = std::move(db.output);
    t.x = dcb(m, problem.op(), problem.kspace(), t.weights);
    t.output = wab(t.u, t.x, problem.sensitivities(), t.weights);
    t.input = std::move(m);
    m = t.output;
    fwd.stages.push_back(std::move(t));
  }
  fwd.output = std::move(m);
  return fwd;
}

auto vsnet_forward(VsNetParams const &params, ReconProblem const &problem) -> VsNetForward
{
  return vsnet_forward_from(params, problem, 0, problem.op().adjoint(problem.kspace()));
}

auto vsnet_backward(VsNetParams const &params,
                    VsNetForward const &forward,
                    ReconProblem const &problem,
                    ComplexImage const &grad_output) -> VsNetGradient
{
  int const taped = static_cast<int>(forward.stages.size());
  if (taped > params.stage_count()) { throw Error(ErrorKind::Validation, "more taped stages than network stages"); }
  if (!grad_output.same_shape(forward.output)) {
    throw Error(ErrorKind::Shape, "output gradient does not match the network output");
  }
  int const first = params.stage_count() - taped;

  VsNetGradient g;
  g.raw_scalars.assign(params.raw_scalars.size(), 0.0);
  for (auto const &s : params.stages) {
    g.stages.push_back(zeros_like(s));
  }
  auto grad = grad_output;
  for (int j = taped; j-- > 0;) {
    int const k = first + j;
    auto const &t = forward.stages[j];
    auto const gw = wab_backward(t.u, t.x, problem.sensitivities(), t.weights, t.output, grad);
    auto const gd = dcb_backward(t.input, problem.op(), problem.kspace(), t.weights, gw.x);
    auto gn = db_backward(params.stages[k], t.denoiser, gw.u);
    g.stages[k] = std::move(gn.weights);

    grad = std::move(gd.m);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] += gn.input[i];
    }
    auto const base = static_cast<std::size_t>(3 * params.scalar_set(k));
    double const dw[3] = {gd.lambda, gd.alpha + gw.alpha, gw.beta};
    for (int s = 0; s < 3; ++s) {
      g.raw_scalars[base + s] += dw[s] * sigmoid(params.raw_scalars[base + s]);
    }
  }
  g.input = std::move(grad);
  return g;
}

auto mse_loss(ComplexImage const &m, ComplexImage const &g) -> LossValue
{
  if (!m.same_shape(g)) { throw Error(ErrorKind::Shape, "loss inputs differ in shape"); }
  LossValue out{0.0, ComplexImage(m.height(), m.width())};
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.grad[i] = m[i] - g[i];
    out.value += std::norm(out.grad[i]);
  }
  out.value *= 0.5;
  return out;
}

auto flatten(VsNetParams const &params) -> std::vector<double>
{
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (auto const &s : params.stages) {
    append(out, s);
  }
  out.insert(out.end(), params.raw_scalars.begin(), params.raw_scalars.end());
  return out;
}

auto flatten(VsNetGradient const &grad) -> std::vector<double>
{
  std::vector<double> out;
  for (auto const &s : grad.stages) {
    append(out, s);
  }
  out.insert(out.end(), grad.raw_scalars.begin(), grad.raw_scalars.end());
  return out;
}

void unflatten(std::span<double const> values, VsNetParams &params)
{
  if (values.size() != params.parameter_count()) {
    throw Error(ErrorKind::Shape, "flat parameter vector has " + std::to_string(values.size()) + " entries, expected " +
                                    std::to_string(params.parameter_count()));
  }
  std::size_t pos = 0;
  auto take = [&](std::vector<double> &dst) {
    std::copy(values.begin() + pos, values.begin() + pos + dst.size(), dst.begin());
    pos += dst.size();
  };
  for (auto &s : params.stages) {
    for (auto &l : s.layers) {
      take(l.weights);
      take(l.biases);
    }
  }
  take(params.raw_scalars);
}

void TrainConfig::validate() const
{
  if (epochs < 1) { throw Error(ErrorKind::Config, "epochs must be >= 1"); }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Config, "learning rate must be finite and non-negative");
  }
  if (batch_size < 1) { throw Error(ErrorKind::Config, "batch size must be >= 1"); }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::Config, "Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) { throw Error(ErrorKind::Config, "Adam epsilon must be positive"); }
}

void adam_step(std::vector<double> &theta, std::vector<double> const &grad, AdamState &state, TrainConfig const &cfg)
{
  if (grad.size() != theta.size()) { throw Error(ErrorKind::Shape, "gradient and parameter sizes differ"); }
  if (state.first_moment.empty()) {
    state.first_moment.assign(theta.size(), 0.0);
    state.second_moment.assign(theta.size(), 0.0);
  }
  if (state.first_moment.size() != theta.size() || state.second_moment.size() != theta.size()) {
    throw Error(ErrorKind::Shape, "optimizer state does not match the parameter count");
  }
  ++state.step;
  double const t = static_cast<double>(state.step);
  double const c1 = 1.0 - std::pow(cfg.beta1, t);
  double const c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double &m = state.first_moment[i];
    double &v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
  }
}

auto evaluate_set(VsNetParams const &params, std::vector<Example> const &set) -> EpochRecord
{
  if (set.empty()) { throw Error(ErrorKind::Validation, "cannot evaluate an empty set"); }
  std::vector<double> loss, p, s;
  for (auto const &ex : set) {
    auto const out = vsnet_forward(params, ex.problem).output;
    loss.push_back(mse_loss(out, ex.reference).value);
    p.push_back(psnr(out, ex.reference));
    s.push_back(ssim(out, ex.reference));
  }
  return {0, "", mean(loss), mean(p), mean(s)};
}

auto train(TrainingState state,
           std::vector<Example> const &training,
           std::vector<Example> const &validation,
           TrainConfig const &cfg,
           EpochCallback const &on_epoch) -> TrainResult
{
  cfg.validate();
  state.params.validate();
  if (training.empty()) { throw Error(ErrorKind::Validation, "training set is empty"); }

  TrainResult result;
  auto log_eval = [&](int epoch, std::string const &split, std::vector<Example> const &set) {
    auto r = evaluate_set(state.params, set);
    r.epoch = epoch;
    r.split = split;
    result.log.push_back(r);
    return r;
  };
  if (state.epoch == 0) {
    log_eval(0, "train", training);
    if (!validation.empty()) { log_eval(0, "val", validation); }
    if (on_epoch) { on_epoch(state, result.log); }
  }

  auto const n = training.size();
  auto theta = flatten(state.params);
  std::vector<double> loss(n), p(n), s(n);
  while (state.epoch < cfg.epochs) {
    int const epoch = state.epoch + 1;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t const stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> grad(theta.size(), 0.0);
      double const scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        auto const idx = order[b];
        auto const &ex = training[idx];
        auto const fwd = vsnet_forward(state.params, ex.problem);
        auto const l = mse_loss(fwd.output, ex.reference);
        loss[idx] = l.value;
        p[idx] = psnr(fwd.output, ex.reference);
        s[idx] = ssim(fwd.output, ex.reference);
        auto const gflat = flatten(vsnet_backward(state.params, fwd, ex.problem, l.grad));
        for (std::size_t i = 0; i < grad.size(); ++i) {
          grad[i] += scale * gflat[i];
        }
      }
      adam_step(theta, grad, state.optimizer, cfg);
      unflatten(theta, state.params);
    }
    state.epoch = epoch;
    result.log.push_back({epoch, "train", mean(loss), mean(p), mean(s)});
    if (!validation.empty()) { log_eval(epoch, "val", validation); }
    if (on_epoch) { on_epoch(state, result.log); }
  }
  result.state = std::move(state);
  return result;
}

auto stage_sweep_report(std::vector<Example> const &training,
                        std::vector<Example> const &validation,
                        std::vector<int> const &stage_counts,
                        ParamMode mode,
                        ConvArchitecture const &arch,
                        TrainConfig const &cfg) -> std::vector<SweepRow>
{
  std::vector<SweepRow> rows;
  for (int stages : stage_counts) {
    TrainingState state{make_vsnet_params(stages, mode, arch, cfg.seed), {}, 0};
    auto const run = train(std::move(state), training, validation, cfg);
    for (auto const &r : run.log) {
      rows.push_back({r.epoch, stages, mode, r.split, r.psnr, r.ssim});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream &os, std::vector<SweepRow> const &rows)
{
  os << "epoch,n_it,param_mode,split,psnr_db,ssim\n";
  for (auto const &r : rows) {
    os << r.epoch << ',' << r.stages << ',' << to_string(r.mode) << ',' << r.split << ',' << format_metric(r.psnr)
       << ',' << format_metric(r.ssim) << '\n';
  }
}

} // namespace vsnet
