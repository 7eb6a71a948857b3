#pragma once

#include "vsnet/problem.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace vsnet {

struct MaskSpec
{
  int height = 0;
  int width = 0;
  double acceleration = 4.0;
  int center_lines = 24;
  std::uint64_t seed = 0;

  /// Number of phase-encode rows acquired: ceil(height / acceleration).
  auto line_budget() const -> int;
  void validate() const;

  friend auto operator==(MaskSpec const &, MaskSpec const &) -> bool = default;
};

/// Picks `count` distinct rows out of `candidates`, deterministically in `seed`.
using LineSampler = std::function<std::vector<int>(std::vector<int> const &candidates, int count, std::uint64_t seed)>;

auto uniform_lines(std::vector<int> const &candidates, int count, std::uint64_t seed) -> std::vector<int>;

/// Full rows only: the `center_lines` rows around height/2 plus rows drawn by
/// `sampler` until the budget is met.
auto cartesian_mask(MaskSpec const &spec, LineSampler const &sampler = uniform_lines) -> SamplingMask;

/// Randomly perturbed Shepp-Logan-style ellipse phantom with a smooth phase.
/// Magnitudes lie in [0, 1]. Requires both dimensions >= 16.
auto phantom(int height, int width, std::uint64_t seed) -> ComplexImage;

/// Gaussian-profile coil maps centred evenly around the image border, each with
/// a linear phase, normalised so that sum_i |S_i|^2 = 1 at every pixel.
auto coil_maps(int height, int width, int coils) -> CoilSensitivities;

struct Synthesized
{
  MultiCoilKSpace kspace; // D F S_i m
  ComplexImage reference; // sum_j conj(S_j) S_j m
};

auto synthesize(ComplexImage const &m, CoilSensitivities const &sens, SamplingMask const &mask) -> Synthesized;

/// Everything needed for one training or evaluation example.
struct SimulatedCase
{
  MaskSpec mask_spec;
  MultiCoilKSpace kspace;
  CoilSensitivities sensitivities;
  SamplingMask mask;
  ComplexImage reference;
};

auto simulate_case(int size, int coils, double acceleration, int center_lines, std::uint64_t seed) -> SimulatedCase;

} // namespace vsnet
