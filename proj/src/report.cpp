#include "vsnet/report.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace vsnet::report {

namespace {

auto column(io::CsvTable const &t, std::string const &name) -> std::ptrdiff_t
{
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) { return static_cast<std::ptrdiff_t>(i); }
  }
  return -1;
}

auto has_columns(io::CsvTable const &t, std::vector<std::string> const &names) -> bool
{
  for (auto const &n : names) {
    if (column(t, n) < 0) { return false; }
  }
  return true;
}

struct Samples
{
  std::vector<double> psnr, ssim;
};

} // namespace

auto stats(std::vector<double> const &values) -> Stats
{
  Stats s;
  s.n = values.size();
  if (s.n == 0) { return s; }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) {
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ss = 0.0;
  for (double v : values) {
    ss += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

auto aggregate(std::vector<LogInput> const &logs) -> std::string
{
  std::ostringstream os;
  os << kReportHeader << '\n';
  std::map<std::pair<std::string, std::string>, Samples> by_method_af;
  std::map<std::pair<std::string, std::string>, Samples> by_method_split;

  for (auto const &log : logs) {
    auto const &t = log.table;
    auto value = [&](std::size_t row, char const *name) -> std::string const & {
      return t.rows[row][static_cast<std::size_t>(column(t, name))];
    };
    auto number = [&](std::size_t row, char const *name) {
      try {
        return parse_metric(value(row, name));
      } catch (Error const &e) {
        throw Error(ErrorKind::Format, log.source + ":" + std::to_string(t.line_numbers[row]) + ": " + e.what());
      }
    };

    if (has_columns(t, {"subject_id", "method", "af", "psnr_db", "ssim"})) {
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto const af = format_metric(number(r, "af"));
        double const p = number(r, "psnr_db");
        double const s = number(r, "ssim");
        auto const &method = value(r, "method");
        os << "row," << log.source << ',' << method << ',' << af << ",,," << 1 << ',' << format_metric(p) << ",,"
           << format_metric(s) << ",\n";
        auto &bucket = by_method_af[{method, af}];
        bucket.psnr.push_back(p);
        bucket.ssim.push_back(s);
      }
      continue;
    }

    bool const sweep = has_columns(t, {"epoch", "n_it", "param_mode", "split", "psnr_db", "ssim"});
    if (!sweep && !has_columns(t, {"epoch", "split", "psnr_db", "ssim"})) {
      throw Error(ErrorKind::Format, log.source + ": unrecognised log columns");
    }
    // last row per (method, split) feeds the summary
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> final_row;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto const method = sweep ? "n_it" + value(r, "n_it") + "_" + value(r, "param_mode") : log.source;
      auto const epoch = static_cast<long long>(number(r, "epoch"));
      auto const &split = value(r, "split");
      double const p = number(r, "psnr_db");
      double const s = number(r, "ssim");
      os << "curve," << log.source << ',' << method << ",," << epoch << ',' << split << ',' << 1 << ','
         << format_metric(p) << ",," << format_metric(s) << ",\n";
      final_row[{method, split}] = {p, s};
    }
    for (auto const &[key, ps] : final_row) {
      auto &bucket = by_method_split[key];
      bucket.psnr.push_back(ps.first);
      bucket.ssim.push_back(ps.second);
    }
  }

  auto summary = [&](std::string const &method, std::string const &af, std::string const &split, Samples const &s) {
    auto const p = stats(s.psnr);
    auto const q = stats(s.ssim);
    os << "summary,," << method << ',' << af << ",," << split << ',' << p.n << ',' << format_metric(p.mean) << ','
       << format_metric(p.std) << ',' << format_metric(q.mean) << ',' << format_metric(q.std) << '\n';
  };
  for (auto const &[key, s] : by_method_af) {
    summary(key.first, key.second, "", s);
  }
  for (auto const &[key, s] : by_method_split) {
    summary(key.first, "", key.second, s);
  }
  return os.str();
}

} // namespace vsnet::report
