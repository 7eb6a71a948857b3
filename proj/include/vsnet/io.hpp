#pragma once

#include "vsnet/network.hpp"
#include "vsnet/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vsnet::io {

/*
 * Container layout shared by every binary file:
 *
 *   magic      4 bytes ("VSR1" dataset, "VSC1" checkpoint, "VSI1" image)
 *   length     uint32 little-endian, byte length of the header
 *   header     UTF-8 JSON object
 *   payload    little-endian arrays in the order the header declares
 *
 * Complex arrays are interleaved (re, im), row-major, coil-major.
 */

enum class Dtype
{
  Complex64,
  Complex128,
};

auto to_string(Dtype d) -> std::string;
auto parse_dtype(std::string const &s) -> Dtype;

struct DatasetRecord
{
  Dtype dtype = Dtype::Complex128;
  std::uint64_t seed = 0;
  MaskSpec mask_spec;
  MultiCoilKSpace kspace;
  CoilSensitivities sensitivities;
  SamplingMask mask; // stored as uint8
  ComplexImage reference;

  auto problem() const -> ReconProblem;

  friend auto operator==(DatasetRecord const &, DatasetRecord const &) -> bool = default;
};

auto dataset_from_case(SimulatedCase const &c, std::uint64_t seed, Dtype dtype = Dtype::Complex128) -> DatasetRecord;

auto encode_dataset(DatasetRecord const &rec) -> std::string;
auto decode_dataset(std::string const &bytes) -> DatasetRecord;
void write_dataset(std::filesystem::path const &path, DatasetRecord const &rec);
auto read_dataset(std::filesystem::path const &path) -> DatasetRecord;
/// Every *.vsr file in `dir`, sorted by file name.
auto list_datasets(std::filesystem::path const &dir) -> std::vector<std::filesystem::path>;

struct Checkpoint
{
  TrainingState state;
  bool has_optimizer = true;
  std::uint64_t seed = 0;
  std::optional<int> coils; // coil count of the training data
  TrainConfig train;

  friend auto operator==(Checkpoint const &a, Checkpoint const &b) -> bool
  {
    return a.state.params == b.state.params && a.state.optimizer == b.state.optimizer &&
           a.state.epoch == b.state.epoch && a.has_optimizer == b.has_optimizer && a.seed == b.seed &&
           a.coils == b.coils;
  }
};

auto encode_checkpoint(Checkpoint const &ckpt) -> std::string;
auto decode_checkpoint(std::string const &bytes) -> Checkpoint;
void write_checkpoint(std::filesystem::path const &path, Checkpoint const &ckpt);
auto read_checkpoint(std::filesystem::path const &path) -> Checkpoint;

auto encode_image(ComplexImage const &img, Dtype dtype = Dtype::Complex128) -> std::string;
auto decode_image(std::string const &bytes) -> ComplexImage;
void write_image(std::filesystem::path const &path, ComplexImage const &img);
auto read_image(std::filesystem::path const &path) -> ComplexImage;

/// Writes to `path`.tmp and renames over `path`; nothing partial is left behind.
void write_file_atomic(std::filesystem::path const &path, std::string const &bytes);
auto read_file(std::filesystem::path const &path) -> std::string;

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers; // 1-based source line of each row
};

/// Plain comma-separated values without quoting. A row whose field count
/// differs from the header throws Error{Format} naming the line.
auto parse_csv(std::string const &text, std::string const &source) -> CsvTable;
auto read_csv(std::filesystem::path const &path) -> CsvTable;

/// Header: epoch,split,loss,psnr_db,ssim
auto training_log_csv(std::vector<EpochRecord> const &log) -> std::string;

} // namespace vsnet::io
