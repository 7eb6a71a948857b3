#include "vsnet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace vsnet {

namespace {

void check_pair(ComplexImage const &test, ComplexImage const &ref)
{
  if (!test.same_shape(ref)) {
    throw Error(ErrorKind::Shape, "metric inputs differ in shape: " + std::to_string(test.height()) + "x" +
                                    std::to_string(test.width()) + " vs " + std::to_string(ref.height()) + "x" +
                                    std::to_string(ref.width()));
  }
}

auto magnitudes(ComplexImage const &img) -> std::vector<double>
{
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    out[i] = std::abs(img[i]);
  }
  return out;
}

auto peak(std::vector<double> const &mag) -> double { return *std::max_element(mag.begin(), mag.end()); }

// Window sums via a 2-D summed-area table.
class BoxSums
{
public:
  BoxSums(std::vector<double> const &v, int height, int width)
    : width_{width + 1}
    , table_(static_cast<std::size_t>(height + 1) * (width + 1), 0.0)
  {
    for (int y = 0; y < height; ++y) {
      double row = 0.0;
      for (int x = 0; x < width; ++x) {
        row += v[static_cast<std::size_t>(y) * width + x];
        at(y + 1, x + 1) = at(y, x + 1) + row;
      }
    }
  }

  auto window(int y, int x, int n) const -> double { return at(y + n, x + n) - at(y, x + n) - at(y + n, x) + at(y, x); }

private:
  auto at(int y, int x) -> double & { return table_[static_cast<std::size_t>(y) * width_ + x]; }
  auto at(int y, int x) const -> double { return table_[static_cast<std::size_t>(y) * width_ + x]; }

  int width_;
  std::vector<double> table_;
};

} // namespace

auto psnr(ComplexImage const &test, ComplexImage const &ref, double exact_tolerance) -> double
{
  check_pair(test, ref);
  auto const a = magnitudes(test);
  auto const b = magnitudes(ref);
  double const top = peak(b);
  if (top <= 0.0) { throw Error(ErrorKind::Validation, "PSNR reference image is all zero"); }
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mse += (a[i] - b[i]) * (a[i] - b[i]);
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0 || std::sqrt(mse) <= exact_tolerance * top) { return kPsnrIdentical; }
  return 10.0 * std::log10(top * top / mse);
}

auto ssim(ComplexImage const &test, ComplexImage const &ref, std::optional<double> dynamic_range) -> double
{
  check_pair(test, ref);
  int const h = test.height();
  int const w = test.width();
  if (h < kSsimWindow || w < kSsimWindow) {
    throw Error(ErrorKind::Shape, "SSIM needs images of at least 7x7");
  }
  auto const a = magnitudes(test);
  auto const b = magnitudes(ref);
  double const range = dynamic_range.value_or(peak(b));
  if (!(range > 0.0)) { throw Error(ErrorKind::Validation, "SSIM dynamic range must be positive"); }
  double const c1 = (0.01 * range) * (0.01 * range);
  double const c2 = (0.03 * range) * (0.03 * range);

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  BoxSums const sa(a, h, w), sb(b, h, w), saa(aa, h, w), sbb(bb, h, w), sab(ab, h, w);
  double const n = kSsimWindow * kSsimWindow;
  double total = 0.0;
  int count = 0;
  for (int y = 0; y + kSsimWindow <= h; ++y) {
    for (int x = 0; x + kSsimWindow <= w; ++x) {
      double const mu_a = sa.window(y, x, kSsimWindow) / n;
      double const mu_b = sb.window(y, x, kSsimWindow) / n;
      double const var_a = saa.window(y, x, kSsimWindow) / n - mu_a * mu_a;
      double const var_b = sbb.window(y, x, kSsimWindow) / n - mu_b * mu_b;
      double const cov = sab.window(y, x, kSsimWindow) / n - mu_a * mu_b;
      double const num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2);
      double const den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  }
  return total / count;
}

auto evaluate(ComplexImage const &test, ComplexImage const &ref, double exact_tolerance) -> MetricReport
{
  return {psnr(test, ref, exact_tolerance), ssim(test, ref)};
}

auto format_metric(double v) -> std::string
{
  if (std::isinf(v)) { return v > 0 ? "inf" : "-inf"; }
  if (std::isnan(v)) { return "nan"; }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

auto parse_metric(std::string const &s) -> double
{
  if (s == "inf") { return kPsnrIdentical; }
  if (s == "-inf") { return -kPsnrIdentical; }
  if (s == "nan") { return std::numeric_limits<double>::quiet_NaN(); }
  double v = 0.0;
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Format, "not a number: '" + s + "'");
  }
  return v;
}

} // namespace vsnet
