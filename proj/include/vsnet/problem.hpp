#pragma once

#include "vsnet/fourier.hpp"

namespace vsnet {

/// Measured k-space together with the encoding operator it was acquired with.
/// Only validate_problem constructs one, so shapes are always consistent.
class ReconProblem
{
public:
  auto kspace() const -> MultiCoilKSpace const & { return kspace_; }
  auto op() const -> EncodingOperator const & { return op_; }
  auto sensitivities() const -> CoilSensitivities const & { return op_.sensitivities(); }
  auto mask() const -> SamplingMask const & { return op_.mask(); }
  auto coils() const -> int { return kspace_.coils(); }
  auto height() const -> int { return kspace_.height(); }
  auto width() const -> int { return kspace_.width(); }

  friend auto operator==(ReconProblem const &, ReconProblem const &) -> bool = default;

private:
  friend auto validate_problem(MultiCoilKSpace y, CoilSensitivities sens, SamplingMask mask) -> ReconProblem;

  MultiCoilKSpace kspace_;
  EncodingOperator op_;
};

/// Checks coil counts, plane shapes, finiteness and that the mask samples at
/// least one location. Throws Error{Shape} naming the offending dimension or
/// Error{Validation}.
auto validate_problem(MultiCoilKSpace y, CoilSensitivities sens, SamplingMask mask) -> ReconProblem;

} // namespace vsnet
