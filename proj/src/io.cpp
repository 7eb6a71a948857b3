#include "vsnet/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace vsnet::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kDatasetMagic[] = "VSR1";
constexpr char kCheckpointMagic[] = "VSC1";
constexpr char kImageMagic[] = "VSI1";

class Writer
{
public:
  void raw(void const *p, std::size_t n) { out_.append(static_cast<char const *>(p), n); }

  void u32(std::uint32_t v)
  {
    for (int i = 0; i < 4; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }

  void u64(std::uint64_t v)
  {
    for (int i = 0; i < 8; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void complex(std::span<Complex const> values, Dtype dtype)
  {
    for (auto const &z : values) {
      if (dtype == Dtype::Complex128) {
        f64(z.real());
        f64(z.imag());
      } else {
        f32(static_cast<float>(z.real()));
        f32(static_cast<float>(z.imag()));
      }
    }
  }

  void doubles(std::span<double const> values)
  {
    for (double v : values) {
      f64(v);
    }
  }

  void header(char const *magic, json const &h)
  {
    raw(magic, 4);
    auto const text = h.dump();
    u32(static_cast<std::uint32_t>(text.size()));
    raw(text.data(), text.size());
  }

  auto take() -> std::string { return std::move(out_); }

private:
  std::string out_;
};

class Reader
{
public:
  explicit Reader(std::string const &bytes)
    : bytes_{bytes}
  {
  }

  void need(std::size_t n) const
  {
    if (pos_ + n > bytes_.size()) { throw Error(ErrorKind::Format, "file truncated"); }
  }

  auto u32() -> std::uint32_t
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }

  auto u64() -> std::uint64_t
  {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }

  auto f64() -> double { return std::bit_cast<double>(u64()); }
  auto f32() -> float { return std::bit_cast<float>(u32()); }
  auto u8() -> std::uint8_t
  {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  auto complex(std::size_t n, Dtype dtype) -> std::vector<Complex>
  {
    std::vector<Complex> out(n);
    for (auto &z : out) {
      if (dtype == Dtype::Complex128) {
        double const re = f64();
        z = Complex{re, f64()};
      } else {
        double const re = f32();
        z = Complex{re, static_cast<double>(f32())};
      }
    }
    return out;
  }

  auto doubles(std::size_t n) -> std::vector<double>
  {
    std::vector<double> out(n);
    for (auto &v : out) {
      v = f64();
    }
    return out;
  }

  auto header(char const *magic) -> json
  {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw Error(ErrorKind::Format, std::string("bad magic, expected ") + magic);
    }
    pos_ = 4;
    auto const len = u32();
    need(len);
    std::string const text = bytes_.substr(pos_, len);
    pos_ += len;
    try {
      auto h = json::parse(text);
      if (!h.is_object()) { throw Error(ErrorKind::Format, "header is not a JSON object"); }
      return h;
    } catch (json::exception const &e) {
      throw Error(ErrorKind::Format, std::string("malformed header JSON: ") + e.what());
    }
  }

  void expect_payload(std::size_t n) const
  {
    if (bytes_.size() - pos_ != n) {
      throw Error(ErrorKind::Format, "payload is " + std::to_string(bytes_.size() - pos_) +
                                       " bytes, header declares " + std::to_string(n));
    }
  }

private:
  std::string const &bytes_;
  std::size_t pos_ = 0;
};

auto complex_size(Dtype d) -> std::size_t { return d == Dtype::Complex128 ? 16 : 8; }

template <typename T>
auto field(json const &h, char const *key) -> T
{
  try {
    return h.at(key).get<T>();
  } catch (json::exception const &) {
    throw Error(ErrorKind::Format, std::string("header field '") + key + "' missing or of the wrong type");
  }
}

auto positive(json const &h, char const *key) -> int
{
  auto const v = field<int>(h, key);
  if (v < 1) { throw Error(ErrorKind::Format, std::string("header field '") + key + "' must be positive"); }
  return v;
}

auto activation_name(Activation a) -> std::string { return a == Activation::Relu ? "relu" : "none"; }

auto parse_activation(std::string const &s) -> Activation
{
  if (s == "relu") { return Activation::Relu; }
  if (s == "none") { return Activation::None; }
  throw Error(ErrorKind::Format, "unknown activation '" + s + "'");
}

} // namespace

auto to_string(Dtype d) -> std::string { return d == Dtype::Complex128 ? "complex128" : "complex64"; }

auto parse_dtype(std::string const &s) -> Dtype
{
  if (s == "complex128") { return Dtype::Complex128; }
  if (s == "complex64") { return Dtype::Complex64; }
  throw Error(ErrorKind::Format, "unknown dtype '" + s + "'");
}

auto DatasetRecord::problem() const -> ReconProblem { return validate_problem(kspace, sensitivities, mask); }

auto dataset_from_case(SimulatedCase const &c, std::uint64_t seed, Dtype dtype) -> DatasetRecord
{
  return {dtype, seed, c.mask_spec, c.kspace, c.sensitivities, c.mask, c.reference};
}

auto encode_dataset(DatasetRecord const &rec) -> std::string
{
  json h;
  h["format"] = kDatasetMagic;
  h["version"] = 1;
  h["height"] = rec.kspace.height();
  h["width"] = rec.kspace.width();
  h["coils"] = rec.kspace.coils();
  h["dtype"] = to_string(rec.dtype);
  h["mask_dtype"] = "uint8";
  h["seed"] = rec.seed;
  h["mask_spec"] = {{"height", rec.mask_spec.height},
                    {"width", rec.mask_spec.width},
                    {"acceleration", rec.mask_spec.acceleration},
                    {"center_lines", rec.mask_spec.center_lines},
                    {"seed", rec.mask_spec.seed}};
  h["arrays"] = {"kspace", "sensitivities", "mask", "reference"};

  Writer w;
  w.header(kDatasetMagic, h);
  w.complex(rec.kspace.data(), rec.dtype);
  w.complex(rec.sensitivities.maps().data(), rec.dtype);
  w.raw(rec.mask.data().data(), rec.mask.data().size());
  w.complex(rec.reference.data(), rec.dtype);
  return w.take();
}

auto decode_dataset(std::string const &bytes) -> DatasetRecord
{
  Reader r(bytes);
  auto const h = r.header(kDatasetMagic);
  int const height = positive(h, "height");
  int const width = positive(h, "width");
  int const coils = positive(h, "coils");
  auto const dtype = parse_dtype(field<std::string>(h, "dtype"));
  if (field<std::string>(h, "mask_dtype") != "uint8") { throw Error(ErrorKind::Format, "mask dtype must be uint8"); }
  auto const plane = static_cast<std::size_t>(height) * width;
  r.expect_payload((2 * coils + 1) * plane * complex_size(dtype) + plane);

  DatasetRecord rec;
  rec.dtype = dtype;
  rec.seed = field<std::uint64_t>(h, "seed");
  auto const &ms = h.at("mask_spec");
  rec.mask_spec = {field<int>(ms, "height"), field<int>(ms, "width"), field<double>(ms, "acceleration"),
                   field<int>(ms, "center_lines"), field<std::uint64_t>(ms, "seed")};
  rec.kspace = MultiCoilKSpace(coils, height, width, r.complex(coils * plane, dtype));
  rec.sensitivities = CoilSensitivities(MultiCoilKSpace(coils, height, width, r.complex(coils * plane, dtype)));
  std::vector<std::uint8_t> mask(plane);
  for (auto &m : mask) {
    m = r.u8();
  }
  try {
    rec.mask = SamplingMask(height, width, std::move(mask));
  } catch (Error const &e) {
    throw Error(ErrorKind::Format, std::string("bad mask: ") + e.what());
  }
  rec.reference = ComplexImage(height, width, r.complex(plane, dtype));
  return rec;
}

void write_dataset(fs::path const &path, DatasetRecord const &rec) { write_file_atomic(path, encode_dataset(rec)); }

auto read_dataset(fs::path const &path) -> DatasetRecord
{
  try {
    return decode_dataset(read_file(path));
  } catch (Error const &e) {
    if (e.kind() == ErrorKind::Io) { throw; }
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

auto list_datasets(fs::path const &dir) -> std::vector<fs::path>
{
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) { throw Error(ErrorKind::Io, dir.string() + ": not a directory"); }
  std::vector<fs::path> out;
  for (auto const &entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".vsr") { out.push_back(entry.path()); }
  }
  std::sort(out.begin(), out.end());
  return out;
}

auto encode_checkpoint(Checkpoint const &ckpt) -> std::string
{
  auto const &p = ckpt.state.params;
  p.validate();
  auto const arch = p.stages.front().architecture();
  for (auto const &s : p.stages) {
    if (s.architecture() != arch) { throw Error(ErrorKind::Config, "all stages must share one architecture"); }
  }
  json layers = json::array();
  for (auto const &l : arch.layers) {
    layers.push_back({{"in", l.in_channels}, {"out", l.out_channels}, {"kernel", l.kernel},
                      {"activation", activation_name(l.activation)}});
  }
  auto const n = p.parameter_count();
  bool const opt = ckpt.has_optimizer;
  if (opt && ckpt.state.optimizer.step > 0 &&
      (ckpt.state.optimizer.first_moment.size() != n || ckpt.state.optimizer.second_moment.size() != n)) {
    throw Error(ErrorKind::Config, "optimizer state does not match the parameter count");
  }

  json h;
  h["format"] = kCheckpointMagic;
  h["version"] = 1;
  h["n_it"] = p.stage_count();
  h["param_mode"] = to_string(p.mode);
  h["residual"] = arch.residual;
  h["layers"] = layers;
  h["parameter_count"] = n;
  h["coils"] = ckpt.coils ? json(*ckpt.coils) : json(nullptr);
  h["seed"] = ckpt.seed;
  h["epoch"] = ckpt.state.epoch;
  h["optimizer"] = opt;
  h["adam_step"] = ckpt.state.optimizer.step;
  h["train"] = {{"epochs", ckpt.train.epochs},         {"learning_rate", ckpt.train.learning_rate},
                {"batch_size", ckpt.train.batch_size}, {"beta1", ckpt.train.beta1},
                {"beta2", ckpt.train.beta2},           {"epsilon", ckpt.train.epsilon},
                {"seed", ckpt.train.seed}};

  Writer w;
  w.header(kCheckpointMagic, h);
  w.doubles(flatten(p));
  if (opt) {
    std::vector<double> const zeros(n, 0.0);
    auto const &st = ckpt.state.optimizer;
    w.doubles(st.first_moment.empty() ? zeros : st.first_moment);
    w.doubles(st.second_moment.empty() ? zeros : st.second_moment);
  }
  return w.take();
}

auto decode_checkpoint(std::string const &bytes) -> Checkpoint
{
  Reader r(bytes);
  auto const h = r.header(kCheckpointMagic);
  int const stages = positive(h, "n_it");
  Checkpoint ckpt;
  ConvArchitecture arch;
  arch.residual = field<bool>(h, "residual");
  if (!h.contains("layers") || !h["layers"].is_array()) { throw Error(ErrorKind::Format, "header lacks layers"); }
  for (auto const &l : h["layers"]) {
    arch.layers.push_back({positive(l, "in"), positive(l, "out"), positive(l, "kernel"),
                           parse_activation(field<std::string>(l, "activation"))});
  }
  auto &p = ckpt.state.params;
  try {
    p.mode = parse_param_mode(field<std::string>(h, "param_mode"));
  } catch (Error const &e) {
    throw Error(ErrorKind::Format, e.what());
  }
  for (int s = 0; s < stages; ++s) {
    ConvStack stack;
    stack.residual = arch.residual;
    for (auto const &spec : arch.layers) {
      ConvLayer layer{spec.in_channels, spec.out_channels, spec.kernel, spec.activation, {}, {}};
      layer.weights.assign(layer.weight_count(), 0.0);
      layer.biases.assign(spec.out_channels, 0.0);
      stack.layers.push_back(std::move(layer));
    }
    p.stages.push_back(std::move(stack));
  }
  p.raw_scalars.assign(3 * (p.mode == ParamMode::Shared ? 1 : stages), 0.0);
  auto const n = p.parameter_count();
  if (field<std::size_t>(h, "parameter_count") != n) {
    throw Error(ErrorKind::Format, "parameter count in header does not match the declared layers");
  }
  ckpt.has_optimizer = field<bool>(h, "optimizer");
  r.expect_payload(n * 8 * (ckpt.has_optimizer ? 3 : 1));
  unflatten(r.doubles(n), p);
  try {
    p.validate();
  } catch (Error const &e) {
    throw Error(ErrorKind::Format, e.what());
  }
  ckpt.state.optimizer.step = field<std::uint64_t>(h, "adam_step");
  if (ckpt.has_optimizer) {
    ckpt.state.optimizer.first_moment = r.doubles(n);
    ckpt.state.optimizer.second_moment = r.doubles(n);
    if (ckpt.state.optimizer.step == 0) {
      ckpt.state.optimizer.first_moment.clear();
      ckpt.state.optimizer.second_moment.clear();
    }
  }
  ckpt.state.epoch = field<int>(h, "epoch");
  ckpt.seed = field<std::uint64_t>(h, "seed");
  if (h.contains("coils") && !h["coils"].is_null()) { ckpt.coils = positive(h, "coils"); }
  if (h.contains("train")) {
    auto const &t = h["train"];
    ckpt.train = {field<int>(t, "epochs"),    field<double>(t, "learning_rate"), field<int>(t, "batch_size"),
                  field<double>(t, "beta1"),  field<double>(t, "beta2"),         field<double>(t, "epsilon"),
                  field<std::uint64_t>(t, "seed")};
  }
  return ckpt;
}

void write_checkpoint(fs::path const &path, Checkpoint const &ckpt) { write_file_atomic(path, encode_checkpoint(ckpt)); }

auto read_checkpoint(fs::path const &path) -> Checkpoint
{
  try {
    return decode_checkpoint(read_file(path));
  } catch (Error const &e) {
    if (e.kind() == ErrorKind::Io) { throw; }
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

auto encode_image(ComplexImage const &img, Dtype dtype) -> std::string
{
  json h;
  h["format"] = kImageMagic;
  h["version"] = 1;
  h["height"] = img.height();
  h["width"] = img.width();
  h["dtype"] = to_string(dtype);
  Writer w;
  w.header(kImageMagic, h);
  w.complex(img.data(), dtype);
  return w.take();
}

auto decode_image(std::string const &bytes) -> ComplexImage
{
  Reader r(bytes);
  auto const h = r.header(kImageMagic);
  int const height = positive(h, "height");
  int const width = positive(h, "width");
  auto const dtype = parse_dtype(field<std::string>(h, "dtype"));
  auto const n = static_cast<std::size_t>(height) * width;
  r.expect_payload(n * complex_size(dtype));
  return ComplexImage(height, width, r.complex(n, dtype));
}

void write_image(fs::path const &path, ComplexImage const &img) { write_file_atomic(path, encode_image(img)); }

auto read_image(fs::path const &path) -> ComplexImage { return decode_image(read_file(path)); }

void write_file_atomic(fs::path const &path, std::string const &bytes)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) { throw Error(ErrorKind::Io, tmp.string() + ": cannot open for writing"); }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, tmp.string() + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, path.string() + ": rename failed: " + ec.message());
  }
}

auto read_file(fs::path const &path) -> std::string
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw Error(ErrorKind::Io, path.string() + ": cannot open for reading"); }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) { throw Error(ErrorKind::Io, path.string() + ": read failed"); }
  return ss.str();
}

auto parse_csv(std::string const &text, std::string const &source) -> CsvTable
{
  auto split = [](std::string const &line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      auto const comma = line.find(',', start);
      out.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) { break; }
      start = comma + 1;
    }
    return out;
  };
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto fields = split(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::Format, source + ":" + std::to_string(number) + ": expected " +
                                       std::to_string(table.header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(number);
  }
  if (table.header.empty()) { throw Error(ErrorKind::Format, source + ": empty CSV"); }
  return table;
}

auto read_csv(fs::path const &path) -> CsvTable { return parse_csv(read_file(path), path.string()); }

auto training_log_csv(std::vector<EpochRecord> const &log) -> std::string
{
  std::ostringstream os;
  os << "epoch,split,loss,psnr_db,ssim\n";
  for (auto const &r : log) {
    os << r.epoch << ',' << r.split << ',' << format_metric(r.loss) << ',' << format_metric(r.psnr) << ','
       << format_metric(r.ssim) << '\n';
  }
  return os.str();
}

} // namespace vsnet::io
