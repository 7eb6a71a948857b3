#include "vsnet/io.hpp"
#include "vsnet/random.hpp"
#include "vsnet/report.hpp"
#include "vsnet/solver.hpp"
#include "vsnet/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace vsnet;

namespace {

enum Exit
{
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kIo = 3,
  kCheckFailed = 4,
};

constexpr char kSeedVariable[] = "VSNET_SEED";
constexpr char kMetricsHeader[] = "subject_id,method,af,psnr_db,ssim";
constexpr double kExactRecovery = 1e-10;

auto default_seed() -> std::uint64_t
{
  if (char const *env = std::getenv(kSeedVariable)) {
    try {
      return std::stoull(env);
    } catch (std::exception const &) {
      throw Error(ErrorKind::Config, std::string(kSeedVariable) + " is not an unsigned integer: " + env);
    }
  }
  return 0;
}

struct SimulateArgs
{
  fs::path out;
  int size = 128;
  int coils = 4;
  double af = 4.0;
  int center_lines = 24;
  int count = 1;
  std::uint64_t seed = 0;
  std::string dtype = "complex128";
};

auto run_simulate(SimulateArgs const &a) -> int
{
  if (a.size < 16) { throw Error(ErrorKind::Config, "--size must be >= 16"); }
  if (a.coils < 1 || a.count < 1) { throw Error(ErrorKind::Config, "--coils and --count must be >= 1"); }
  // validate before touching the filesystem
  MaskSpec{a.size, a.size, a.af, a.center_lines, 0}.validate();
  auto const dtype = io::parse_dtype(a.dtype);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) { throw Error(ErrorKind::Io, a.out.string() + ": " + ec.message()); }
  for (int i = 0; i < a.count; ++i) {
    auto const seed = mix_seed(a.seed, static_cast<std::uint64_t>(i));
    auto const c = simulate_case(a.size, a.coils, a.af, a.center_lines, seed);
    char name[32];
    std::snprintf(name, sizeof name, "case_%04d.vsr", i);
    io::write_dataset(a.out / name, io::dataset_from_case(c, seed, dtype));
    std::cout << (a.out / name).string() << '\n';
  }
  return kOk;
}

struct ReconArgs
{
  fs::path input;
  std::string mode = "classic";
  fs::path checkpoint;
  int stages = 10;
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  fs::path out;
  fs::path metrics;
};

auto run_recon(ReconArgs const &a) -> int
{
  auto const rec = io::read_dataset(a.input);
  auto const problem = rec.problem();
  ComplexImage image;
  std::string method;
  if (a.mode == "classic") {
    SolverConfig cfg;
    cfg.iterations = a.stages;
    cfg.weights = {a.lambda, a.alpha, a.beta};
    image = solve(problem, cfg).image;
    method = "classic";
  } else {
    auto const ckpt = io::read_checkpoint(a.checkpoint);
    if (ckpt.coils && *ckpt.coils != problem.coils()) {
      throw Error(ErrorKind::Validation, "checkpoint was trained on " + std::to_string(*ckpt.coils) +
                                           " coils, data has " + std::to_string(problem.coils()));
    }
    image = vsnet_forward(ckpt.state.params, problem).output;
    method = "vsnet";
  }
  if (!a.out.empty()) { io::write_image(a.out, image); }

  auto const subject = a.input.stem().string();
  auto const af = format_metric(rec.mask_spec.acceleration);
  std::ostringstream rows;
  auto row = [&](std::string const &name, ComplexImage const &img) {
    auto const m = evaluate(img, rec.reference, kExactRecovery);
    rows << subject << ',' << name << ',' << af << ',' << format_metric(m.psnr) << ',' << format_metric(m.ssim)
         << '\n';
  };
  row(method, image);
  row("zero_fill", zero_fill(problem));

  std::cout << kMetricsHeader << '\n' << rows.str();
  if (!a.metrics.empty()) {
    std::string existing;
    if (fs::exists(a.metrics)) { existing = io::read_file(a.metrics); }
    if (existing.empty()) { existing = std::string(kMetricsHeader) + "\n"; }
    io::write_file_atomic(a.metrics, existing + rows.str());
  }
  return kOk;
}

struct TrainArgs
{
  fs::path data_dir;
  fs::path val_dir;
  int stages = 5;
  std::string param_mode = "theta2";
  int epochs = 200;
  double lr = 1e-3;
  int batch = 1;
  std::uint64_t seed = 0;
  int width = 32;
  int depth = 5;
  fs::path out_checkpoint;
  fs::path log;
  fs::path resume;
};

auto load_examples(fs::path const &dir) -> std::vector<Example>
{
  auto const files = io::list_datasets(dir);
  if (files.empty()) { throw Error(ErrorKind::Validation, dir.string() + ": no .vsr dataset files"); }
  std::vector<Example> out;
  for (auto const &f : files) {
    auto const rec = io::read_dataset(f);
    out.push_back({f.stem().string(), rec.problem(), rec.reference});
  }
  return out;
}

auto run_train(TrainArgs const &a, CLI::App const &cmd) -> int
{
  auto const training = load_examples(a.data_dir);
  std::vector<Example> validation;
  if (!a.val_dir.empty()) { validation = load_examples(a.val_dir); }
  int const coils = training.front().problem.coils();
  for (auto const &ex : training) {
    if (ex.problem.coils() != coils) { throw Error(ErrorKind::Validation, "training files differ in coil count"); }
  }
  for (auto const &ex : validation) {
    if (ex.problem.coils() != coils) {
      throw Error(ErrorKind::Validation, ex.id + ": validation coil count differs from the training data");
    }
  }

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.validate();

  TrainingState state;
  auto const mode = parse_param_mode(a.param_mode);
  if (!a.resume.empty()) {
    auto ckpt = io::read_checkpoint(a.resume);
    if (cmd.count("--stages") > 0 && ckpt.state.params.stage_count() != a.stages) {
      throw Error(ErrorKind::Validation, "--stages differs from the resumed checkpoint");
    }
    if (cmd.count("--param-mode") > 0 && ckpt.state.params.mode != mode) {
      throw Error(ErrorKind::Validation, "--param-mode differs from the resumed checkpoint");
    }
    if (cmd.count("--seed") > 0 && ckpt.seed != a.seed) {
      throw Error(ErrorKind::Validation, "--seed differs from the resumed checkpoint");
    }
    if (cmd.count("--lr") > 0 && ckpt.train.learning_rate != a.lr) {
      throw Error(ErrorKind::Validation, "--lr differs from the resumed checkpoint");
    }
    if (cmd.count("--batch") > 0 && ckpt.train.batch_size != a.batch) {
      throw Error(ErrorKind::Validation, "--batch differs from the resumed checkpoint");
    }
    if (!ckpt.has_optimizer) { throw Error(ErrorKind::Validation, "checkpoint carries no optimizer state"); }
    cfg.learning_rate = ckpt.train.learning_rate;
    cfg.batch_size = ckpt.train.batch_size;
    cfg.beta1 = ckpt.train.beta1;
    cfg.beta2 = ckpt.train.beta2;
    cfg.epsilon = ckpt.train.epsilon;
    if (ckpt.coils && *ckpt.coils != coils) {
      throw Error(ErrorKind::Validation, "checkpoint coil count differs from the training data");
    }
    cfg.seed = ckpt.seed;
    state = std::move(ckpt.state);
  } else {
    state.params = make_vsnet_params(a.stages, mode, ConvArchitecture::standard(a.width, a.depth), a.seed);
  }

  std::cerr << "train: n_it " << state.params.stage_count() << ", " << to_string(state.params.mode) << ", epochs "
            << cfg.epochs << ", lr " << format_metric(cfg.learning_rate) << ", batch " << cfg.batch_size << ", seed "
            << cfg.seed << ", from epoch " << state.epoch << '\n';
  auto save = [&](TrainingState const &s) {
    io::Checkpoint ckpt{s, true, cfg.seed, coils, cfg};
    io::write_checkpoint(a.out_checkpoint, ckpt);
  };
  auto const result = train(std::move(state), training, validation, cfg, [&](auto const &s, auto const &log) {
    save(s);
    auto const &r = log.back();
    std::cerr << "epoch " << r.epoch << ' ' << r.split << " loss " << format_metric(r.loss) << " psnr "
              << format_metric(r.psnr) << " ssim " << format_metric(r.ssim) << '\n';
  });
  save(result.state);
  if (!a.log.empty()) { io::write_file_atomic(a.log, io::training_log_csv(result.log)); }
  return kOk;
}

auto run_report(std::vector<fs::path> const &logs, fs::path const &out) -> int
{
  std::vector<report::LogInput> inputs;
  for (auto const &p : logs) {
    inputs.push_back({p.stem().string(), io::read_csv(p)});
  }
  auto const text = report::aggregate(inputs);
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file_atomic(out, text);
  }
  return kOk;
}

auto run_check(std::string const &suite, std::uint64_t seed) -> int
{
  std::vector<verify::CheckResult> results;
  if (suite == "adjoint") {
    results = verify::run_adjoint_suite(seed);
  } else if (suite == "oracle") {
    results = verify::run_oracle_suite(seed);
  } else {
    results = verify::run_gradcheck_suite(seed);
  }
  bool ok = true;
  for (auto const &r : results) {
    std::printf("%s  %-70s max err %.3e  (tol %.0e)\n", r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.error,
                r.tolerance);
    ok = ok && r.passed();
  }
  return ok ? kOk : kCheckFailed;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Variable-splitting parallel MRI reconstruction"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  SimulateArgs sim;
  auto *simulate = app.add_subcommand("simulate", "Write synthetic multi-coil datasets");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--size", sim.size, "Image height and width")->capture_default_str();
  simulate->add_option("--coils", sim.coils, "Number of receive coils")->capture_default_str();
  simulate->add_option("--af", sim.af, "Acceleration factor")->capture_default_str();
  simulate->add_option("--center-lines", sim.center_lines, "Fully sampled central rows")->capture_default_str();
  simulate->add_option("--count", sim.count, "Number of files")->capture_default_str();
  simulate->add_option("--seed", sim.seed, std::string("Seed (default $") + kSeedVariable + " or 0)");
  simulate->add_option("--dtype", sim.dtype, "complex128 or complex64")
    ->check(CLI::IsMember({"complex128", "complex64"}))
    ->capture_default_str();

  ReconArgs rec;
  auto *recon = app.add_subcommand("recon", "Reconstruct one dataset file and report metrics");
  recon->add_option("--input", rec.input, "Dataset file")->required();
  recon->add_option("--mode", rec.mode, "classic or net")
    ->check(CLI::IsMember({"classic", "net"}))
    ->capture_default_str();
  recon->add_option("--checkpoint", rec.checkpoint, "Trained network (net mode)");
  recon->add_option("--stages", rec.stages, "Iterations (classic mode)")->capture_default_str();
  recon->add_option("--lambda", rec.lambda, "Data fidelity weight (classic mode)")->capture_default_str();
  recon->add_option("--alpha", rec.alpha, "Coil-split penalty (classic mode)")->capture_default_str();
  recon->add_option("--beta", rec.beta, "Denoiser penalty (classic mode)")->capture_default_str();
  recon->add_option("--out", rec.out, "Write the reconstruction here (VSI1 image file)");
  recon->add_option("--metrics", rec.metrics, "Append metric rows to this CSV");

  TrainArgs tr;
  auto *trainer = app.add_subcommand("train", "Train the unrolled network");
  trainer->add_option("--data-dir", tr.data_dir, "Directory of .vsr training files")->required();
  trainer->add_option("--val-dir", tr.val_dir, "Directory of .vsr validation files");
  trainer->add_option("--stages", tr.stages, "Number of stages n_it")->capture_default_str();
  trainer->add_option("--param-mode", tr.param_mode, "theta1 (shared scalars) or theta2 (per stage)")
    ->check(CLI::IsMember({"theta1", "theta2"}))
    ->capture_default_str();
  trainer->add_option("--epochs", tr.epochs, "Total epochs")->capture_default_str();
  trainer->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  trainer->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  trainer->add_option("--seed", tr.seed, std::string("Seed (default $") + kSeedVariable + " or 0)");
  trainer->add_option("--width", tr.width, "Denoiser channel width")->capture_default_str();
  trainer->add_option("--depth", tr.depth, "Denoiser conv layers")->capture_default_str();
  trainer->add_option("--out-checkpoint", tr.out_checkpoint, "Checkpoint to write")->required();
  trainer->add_option("--log", tr.log, "Per-epoch CSV log");
  trainer->add_option("--resume", tr.resume, "Continue from this checkpoint");

  std::vector<fs::path> logs;
  fs::path report_out;
  auto *rep = app.add_subcommand("report", "Aggregate metric and training CSVs");
  rep->add_option("--logs", logs, "CSV files")->required();
  rep->add_option("--out", report_out, "Aggregated CSV (stdout if omitted)");

  std::string suite;
  auto *check = app.add_subcommand("check", "Run a verification suite");
  check->add_option("--suite", suite, "adjoint, oracle or gradcheck")
    ->required()
    ->check(CLI::IsMember({"adjoint", "oracle", "gradcheck"}));
  check->add_option("--seed", seed, std::string("Seed (default $") + kSeedVariable + " or 0)");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    std::uint64_t const env_seed = default_seed();
    if (simulate->parsed()) {
      if (simulate->count("--seed") == 0) { sim.seed = env_seed; }
      return run_simulate(sim);
    }
    if (recon->parsed()) {
      if ((rec.mode == "net") != !rec.checkpoint.empty()) {
        std::cerr << "--checkpoint is required with --mode net and not accepted otherwise\n\n" << recon->help();
        return kUsage;
      }
      return run_recon(rec);
    }
    if (trainer->parsed()) {
      if (trainer->count("--seed") == 0) { tr.seed = env_seed; }
      return run_train(tr, *trainer);
    }
    if (rep->parsed()) { return run_report(logs, report_out); }
    if (check->parsed()) {
      if (check->count("--seed") == 0) { seed = env_seed; }
      return run_check(suite, seed);
    }
  } catch (Error const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Io ? kIo : kValidation;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}
