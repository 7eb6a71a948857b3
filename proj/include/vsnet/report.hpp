#pragma once

#include "vsnet/io.hpp"

#include <string>
#include <vector>

namespace vsnet::report {

/*
 * Aggregated report schema, one CSV:
 *
 *   kind,source,method,af,epoch,split,n,psnr_db,psnr_db_std,ssim,ssim_std
 *
 * kind = row      one per input metrics row (subject_id,method,af,psnr_db,ssim)
 * kind = curve    one per input training-log row (epoch,split,loss,psnr_db,ssim) or
 *                 sweep row (epoch,n_it,param_mode,split,psnr_db,ssim)
 * kind = summary  mean and sample standard deviation (n - 1 denominator) per
 *                 (method, af) over metrics rows, and per (method, split) over the
 *                 final epoch of every curve. std is "nan" when n = 1.
 *
 * Unused fields are left empty. For training logs the method is the file stem;
 * for sweep rows it is "n_it<k>_<param_mode>".
 */
struct LogInput
{
  std::string source; // file stem
  io::CsvTable table;
};

auto aggregate(std::vector<LogInput> const &logs) -> std::string;

inline constexpr char kReportHeader[] = "kind,source,method,af,epoch,split,n,psnr_db,psnr_db_std,ssim,ssim_std";

/// Sample mean and standard deviation (n - 1), std NaN for n = 1.
struct Stats
{
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
};

auto stats(std::vector<double> const &values) -> Stats;

} // namespace vsnet::report
