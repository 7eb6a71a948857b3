#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsnet {

using Complex = std::complex<double>;

enum class ErrorKind
{
  Shape,
  Validation,
  Config,
  Format,
  Io,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string const &what)
    : std::runtime_error(what)
    , kind_{kind}
  {
  }

  auto kind() const -> ErrorKind { return kind_; }

private:
  ErrorKind kind_;
};

// Lower bound for lambda, alpha and beta. Keeps the closed-form denominators
// of the data-consistency and weighted-average blocks away from zero.
inline constexpr double kWeightFloor = 1e-6;

/// Row-major complex 2-D image (height-major).
class ComplexImage
{
public:
  ComplexImage() = default;
  ComplexImage(int height, int width);
  ComplexImage(int height, int width, std::vector<Complex> data);

  auto height() const -> int { return height_; }
  auto width() const -> int { return width_; }
  auto size() const -> std::size_t { return data_.size(); }

  auto data() -> std::span<Complex> { return data_; }
  auto data() const -> std::span<Complex const> { return data_; }

  auto operator()(int y, int x) -> Complex & { return data_[index(y, x)]; }
  auto operator()(int y, int x) const -> Complex const & { return data_[index(y, x)]; }
  auto operator[](std::size_t i) -> Complex & { return data_[i]; }
  auto operator[](std::size_t i) const -> Complex const & { return data_[i]; }

  auto same_shape(ComplexImage const &other) const -> bool
  {
    return height_ == other.height_ && width_ == other.width_;
  }
  auto all_finite() const -> bool;

  friend auto operator==(ComplexImage const &, ComplexImage const &) -> bool = default;

private:
  auto index(int y, int x) const -> std::size_t
  {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> data_;
};

/// n_c stacked complex planes of equal shape. Holds per-coil k-space as well
/// as per-coil images; which one is meant depends on the operation.
class MultiCoilKSpace
{
public:
  MultiCoilKSpace() = default;
  MultiCoilKSpace(int coils, int height, int width);
  MultiCoilKSpace(int coils, int height, int width, std::vector<Complex> data);

  auto coils() const -> int { return coils_; }
  auto height() const -> int { return height_; }
  auto width() const -> int { return width_; }
  auto plane_size() const -> std::size_t
  {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  auto data() -> std::span<Complex> { return data_; }
  auto data() const -> std::span<Complex const> { return data_; }
  auto plane(int coil) -> std::span<Complex> { return data().subspan(coil * plane_size(), plane_size()); }
  auto plane(int coil) const -> std::span<Complex const>
  {
    return data().subspan(coil * plane_size(), plane_size());
  }

  auto image(int coil) const -> ComplexImage;
  void set_image(int coil, ComplexImage const &img);

  auto all_finite() const -> bool;

  friend auto operator==(MultiCoilKSpace const &, MultiCoilKSpace const &) -> bool = default;

private:
  int coils_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> data_;
};

using MultiCoilImages = MultiCoilKSpace;

/// Binary k-space sampling pattern (the diagonal of D^T D).
class SamplingMask
{
public:
  SamplingMask() = default;
  SamplingMask(int height, int width);
  SamplingMask(int height, int width, std::vector<std::uint8_t> data);

  auto height() const -> int { return height_; }
  auto width() const -> int { return width_; }
  auto data() const -> std::span<std::uint8_t const> { return data_; }
  auto operator()(int y, int x) const -> bool { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool sampled) { data_[static_cast<std::size_t>(y) * width_ + x] = sampled ? 1 : 0; }

  auto sampled_count() const -> std::size_t;
  auto row_sampled(int y) const -> bool;

  friend auto operator==(SamplingMask const &, SamplingMask const &) -> bool = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Coil sensitivity maps S_i with a cached per-pixel sum of squares.
class CoilSensitivities
{
public:
  CoilSensitivities() = default;
  explicit CoilSensitivities(MultiCoilKSpace maps);

  auto coils() const -> int { return maps_.coils(); }
  auto height() const -> int { return maps_.height(); }
  auto width() const -> int { return maps_.width(); }
  auto maps() const -> MultiCoilKSpace const & { return maps_; }
  auto map(int coil) const -> std::span<Complex const> { return maps_.plane(coil); }
  auto sos() const -> std::span<double const> { return sos_; }

  friend auto operator==(CoilSensitivities const &, CoilSensitivities const &) -> bool = default;

private:
  MultiCoilKSpace maps_;
  std::vector<double> sos_;
};

auto sum_of_squares(MultiCoilKSpace const &maps) -> std::vector<double>;

struct ScalarWeights
{
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 1.0;

  /// Throws ErrorKind::Config unless every weight is finite and >= kWeightFloor.
  void validate() const;

  friend auto operator==(ScalarWeights const &, ScalarWeights const &) -> bool = default;
};

/// Per-pixel sum over coils of conj(S_i) * x_i.
auto sos_combine(MultiCoilImages const &x, CoilSensitivities const &sens) -> ComplexImage;

// Elementwise helpers used across modules.
auto norm2(std::span<Complex const> v) -> double;
auto inner(std::span<Complex const> a, std::span<Complex const> b) -> Complex; // sum conj(a) * b

} // namespace vsnet
