#pragma once

#include "vsnet/denoiser.hpp"
#include "vsnet/metrics.hpp"
#include "vsnet/problem.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vsnet {

/// Shared: one (lambda, alpha, beta) for every stage. PerStage: one triplet per stage.
enum class ParamMode
{
  Shared,   // theta1
  PerStage, // theta2
};

auto to_string(ParamMode mode) -> std::string;
auto parse_param_mode(std::string const &s) -> ParamMode;

// Positive weights come from unconstrained raw values: w = softplus(raw) + kWeightFloor.
auto softplus(double raw) -> double;
auto raw_for_weight(double weight) -> double;

struct VsNetParams
{
  ParamMode mode = ParamMode::PerStage;
  std::vector<ConvStack> stages;
  std::vector<double> raw_scalars; // (lambda, alpha, beta) per scalar set

  auto stage_count() const -> int { return static_cast<int>(stages.size()); }
  auto scalar_sets() const -> int { return static_cast<int>(raw_scalars.size() / 3); }
  auto scalar_set(int stage) const -> int { return mode == ParamMode::Shared ? 0 : stage; }
  auto weights(int stage) const -> ScalarWeights;
  auto parameter_count() const -> std::size_t;
  void validate() const;

  friend auto operator==(VsNetParams const &, VsNetParams const &) -> bool = default;
};

/// Stage l's denoiser is seeded with mix_seed(seed, l); scalars start at `initial`.
auto make_vsnet_params(int stages,
                       ParamMode mode,
                       ConvArchitecture const &arch,
                       std::uint64_t seed,
                       ScalarWeights initial = {}) -> VsNetParams;

struct StageTape
{
  ComplexImage input;
  Tape denoiser;
  ComplexImage u;
  MultiCoilImages x;
  ComplexImage output;
  ScalarWeights weights;
};

struct VsNetForward
{
  ComplexImage output;
  std::vector<StageTape> stages;
};

/// Zero-filled image through every stage's DB -> DCB -> WAB.
auto vsnet_forward(VsNetParams const &params, ReconProblem const &problem) -> VsNetForward;
/// Runs stages [first_stage, stage_count) starting from `input`; tapes cover those stages only.
auto vsnet_forward_from(VsNetParams const &params, ReconProblem const &problem, int first_stage, ComplexImage input)
  -> VsNetForward;

struct VsNetGradient
{
  std::vector<ConvStack> stages;
  std::vector<double> raw_scalars;
  ComplexImage input; // gradient with respect to the zero-filled input image
};

auto vsnet_backward(VsNetParams const &params,
                    VsNetForward const &forward,
                    ReconProblem const &problem,
                    ComplexImage const &grad_output) -> VsNetGradient;

struct LossValue
{
  double value = 0.0;
  ComplexImage grad;
};

/// 1/2 |m - g|^2 over (re, im) pairs; gradient m - g.
auto mse_loss(ComplexImage const &m, ComplexImage const &g) -> LossValue;

// Fixed ordering: stage by stage, each layer's weights then biases; then raw scalars.
auto flatten(VsNetParams const &params) -> std::vector<double>;
auto flatten(VsNetGradient const &grad) -> std::vector<double>;
void unflatten(std::span<double const> values, VsNetParams &params);

struct TrainConfig
{
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState
{
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  friend auto operator==(AdamState const &, AdamState const &) -> bool = default;
};

/// One bias-corrected Adam update of `theta` in place.
void adam_step(std::vector<double> &theta, std::vector<double> const &grad, AdamState &state, TrainConfig const &cfg);

struct Example
{
  std::string id;
  ReconProblem problem;
  ComplexImage reference;
};

struct EpochRecord
{
  int epoch = 0;
  std::string split; // "train" or "val"
  double loss = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct TrainingState
{
  VsNetParams params;
  AdamState optimizer;
  int epoch = 0; // completed epochs
};

struct TrainResult
{
  TrainingState state;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(TrainingState const &, std::vector<EpochRecord> const &)>;

/// Mean loss and metrics of the network on a set, in example order.
auto evaluate_set(VsNetParams const &params, std::vector<Example> const &set) -> EpochRecord;

/*
 * Continues training from `state.epoch` up to `cfg.epochs`. Each epoch visits the
 * training set in an order drawn from (seed, epoch), takes one Adam step per
 * batch on the batch-mean loss, and logs the running train metrics plus an
 * evaluation of `validation` when it is non-empty. A fresh state (epoch 0)
 * also logs an epoch-0 evaluation of both sets. Everything runs on the calling
 * thread, so results are bitwise reproducible.
 */
auto train(TrainingState state,
           std::vector<Example> const &training,
           std::vector<Example> const &validation,
           TrainConfig const &cfg,
           EpochCallback const &on_epoch = {}) -> TrainResult;

struct SweepRow
{
  int epoch;
  int stages;
  ParamMode mode;
  std::string split;
  double psnr;
  double ssim;
};

/// One training run per stage count, all from the same seed.
auto stage_sweep_report(std::vector<Example> const &training,
                        std::vector<Example> const &validation,
                        std::vector<int> const &stage_counts,
                        ParamMode mode,
                        ConvArchitecture const &arch,
                        TrainConfig const &cfg) -> std::vector<SweepRow>;

/// Header: epoch,n_it,param_mode,split,psnr_db,ssim
void write_sweep_csv(std::ostream &os, std::vector<SweepRow> const &rows);

} // namespace vsnet
