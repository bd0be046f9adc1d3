#include "rwflow/experiments.hpp"
#include "rwflow/manifest.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rwflow;

namespace {

struct Globals
{
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool deterministic = false;
  std::string out_dir = ".";
};

//! Thrown after parsing for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void add_fft_options(CLI::App* sub, FftParams& fft)
{
  sub->add_option("--fft-cutoff", fft.cutoff, "Kernel truncation radius in bandwidths")->check(CLI::PositiveNumber);
  sub->add_option("--fft-points", fft.points_per_bandwidth, "Grid points per bandwidth")->check(CLI::PositiveNumber);
  sub->add_option("--fft-max-grid", fft.max_grid, "Largest allowed FFT grid")->check(CLI::PositiveNumber);
}

struct SampleCli
{
  SampleOptions opt;
  std::size_t dim = 0;
  std::string method = "kdrw_fft";
  std::string bandwidth = "fixed";
  std::string kernel = "gaussian";
  std::string score = "analytic";
  std::string svgd_bandwidth = "median";
  long long warmup = -1;
  std::vector<std::string> metrics = { "mmd2" };
  std::string out = "sample.csv";

  void attach(CLI::App* sub)
  {
    sub->add_option("--target", opt.target, "gaussian, banana or banana2d");
    sub->add_option("--dim", dim, "Dimension (required for banana)");
    sub->add_option("--method", method, "kdrw, kdrw_fft, rrw, rrw_fft, kdrw_laplace or svgd");
    sub->add_option("--n", opt.n, "Number of particles")->check(CLI::PositiveNumber);
    sub->add_option("--steps", opt.config.steps, "Number of steps");
    sub->add_option("--tau", opt.config.step_size, "Step size")->check(CLI::PositiveNumber);
    sub->add_option("--warmup-steps", warmup, "Warm-up steps (-1: steps/10)");
    sub->add_option("--warmup-factor", opt.config.warmup_factor, "Step-size factor during warm-up");
    sub->add_option("--eps-coef", opt.config.eps_coef, "Regularization epsilon times n");
    sub->add_option("--bandwidth", bandwidth, "fixed, adaptive or a positive value");
    sub->add_option("--kernel", kernel, "gaussian or laplace");
    add_fft_options(sub, opt.config.fft);
    sub->add_option("--score", score, "analytic or fd");
    sub->add_option("--fd-step", opt.config.fd_step, "Finite-difference step")->check(CLI::PositiveNumber);
    sub->add_option("--svgd-bandwidth", svgd_bandwidth, "median, sqrt2d or a positive value");
    sub->add_option("--record-every", opt.config.record_every, "Recording cadence in steps");
    sub->add_option("--metrics", metrics, "mmd2, mmd2_T, mean_err, var_per_coord");
    sub->add_option("--init-shift", opt.init_shift, "Initial mean along the first axis");
    sub->add_option("--init-scale", opt.init_scale, "Initial covariance scale")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Metrics CSV (positions go to <stem>_positions.csv)");
  }

  void resolve(const Globals& g)
  {
    if (opt.target == "banana" && dim == 0)
      throw UsageError("--dim is required for the banana target");
    opt.dim = dim == 0 ? 2 : dim;
    try {
      opt.config.method = parse_method(method);
      opt.config.bandwidth = BandwidthChoice::parse(bandwidth);
      opt.config.kernel = parse_kernel_family(kernel);
      if (score == "analytic")
        opt.config.score_mode = ScoreMode::Analytic;
      else if (score == "fd")
        opt.config.score_mode = ScoreMode::FiniteDifference;
      else
        throw std::invalid_argument("unknown score mode " + score);
      if (svgd_bandwidth == "median")
        opt.config.svgd_bandwidth = SvgdBandwidth::Median;
      else if (svgd_bandwidth == "sqrt2d")
        opt.config.svgd_bandwidth = SvgdBandwidth::Sqrt2d;
      else {
        opt.config.svgd_bandwidth = SvgdBandwidth::Value;
        opt.config.svgd_bandwidth_value = std::stod(svgd_bandwidth);
      }
      if (warmup >= 0)
        opt.config.warmup_steps = static_cast<std::size_t>(warmup);
      opt.config.metrics = metrics;
      opt.config.seed = g.seed;
      opt.out = out;
      make_target(opt.target, opt.dim);
      opt.config.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct SweepCli
{
  BandwidthSweepOptions opt;
  double b_min = 0.05;
  double b_max = 2.0;
  std::size_t b_count = 8;

  void attach(CLI::App* sub)
  {
    opt.bandwidths.clear();
    sub->add_option("--target", opt.target, "gaussian, banana or banana2d");
    sub->add_option("--dim", opt.dim, "Dimension")->check(CLI::PositiveNumber);
    sub->add_option("--n", opt.n, "Number of particles")->check(CLI::PositiveNumber);
    sub->add_option("--methods", opt.methods, "Methods to sweep");
    sub->add_option("--bandwidths", opt.bandwidths, "Explicit bandwidth list (overrides the log grid)");
    sub->add_option("--b-min", b_min, "Smallest bandwidth of the log grid")->check(CLI::PositiveNumber);
    sub->add_option("--b-max", b_max, "Largest bandwidth of the log grid")->check(CLI::PositiveNumber);
    sub->add_option("--b-count", b_count, "Points of the log grid")->check(CLI::PositiveNumber);
    sub->add_option("--trials", opt.trials, "Trials per point")->check(CLI::PositiveNumber);
    sub->add_option("--iid-trials", opt.iid_trials, "Trials of the i.i.d. baseline");
    sub->add_option("--steps", opt.steps, "Steps per run");
    sub->add_option("--tau", opt.tau, "Step size")->check(CLI::PositiveNumber);
    sub->add_option("--warmup-steps", opt.warmup_steps, "Warm-up steps");
    sub->add_option("--eps-coef", opt.eps_coef, "Regularization epsilon times n");
    sub->add_option("--init-shift", opt.init_shift, "Initial mean along the first axis");
    add_fft_options(sub, opt.fft);
  }

  void resolve(const Globals& g)
  {
    if (opt.bandwidths.empty())
      opt.bandwidths = log_spaced(b_min, b_max, b_count);
    opt.seed = g.seed;
    try {
      for (const auto& m : opt.methods)
        if (parse_method(m) == Method::Svgd)
          throw std::invalid_argument("svgd has no projected bandwidth to sweep");
      make_target(opt.target, opt.dim);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct ConvergenceCli
{
  ConvergenceOptions opt;

  void attach(CLI::App* sub)
  {
    sub->add_option("--target", opt.target, "gaussian, banana or banana2d");
    sub->add_option("--dim", opt.dim, "Dimension")->check(CLI::PositiveNumber);
    sub->add_option("--n", opt.n, "Number of particles")->check(CLI::PositiveNumber);
    sub->add_option("--methods", opt.methods, "Methods to run");
    sub->add_option("--horizon", opt.horizon, "Equation time to reach")->check(CLI::PositiveNumber);
    sub->add_option("--rw-tau", opt.rw_tau, "Step size of the RW methods")->check(CLI::PositiveNumber);
    sub->add_option("--svgd-tau", opt.svgd_tau, "Step size of SVGD")->check(CLI::PositiveNumber);
    sub->add_option("--warmup-steps", opt.warmup_steps, "Warm-up steps");
    sub->add_option("--warmup-factor", opt.warmup_factor, "Step-size factor during warm-up");
    sub->add_option("--record-every", opt.record_every, "Recording cadence in steps")->check(CLI::PositiveNumber);
    sub->add_option("--bandwidth", opt.bandwidth, "fixed, adaptive or a positive value");
    sub->add_option("--svgd-bandwidth", opt.svgd_bandwidth, "median, sqrt2d or a positive value");
    sub->add_option("--eps-coef", opt.eps_coef, "Regularization epsilon times n");
    sub->add_option("--init-shift", opt.init_shift, "Initial mean along the first axis");
    sub->add_option("--init-scale", opt.init_scale, "Initial covariance scale")->check(CLI::PositiveNumber);
    sub->add_option("--trials", opt.trials, "Trials per method")->check(CLI::PositiveNumber);
    sub->add_option("--iid-trials", opt.iid_trials, "Trials of the i.i.d. baseline");
    add_fft_options(sub, opt.fft);
  }

  void resolve(const Globals& g)
  {
    opt.seed = g.seed;
    try {
      for (const auto& m : opt.methods)
        parse_method(m);
      BandwidthChoice::parse(opt.bandwidth);
      make_target(opt.target, opt.dim);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct QuantizationCli
{
  QuantizationOptions opt;

  void attach(CLI::App* sub)
  {
    sub->add_option("--target", opt.target, "gaussian, banana or banana2d");
    sub->add_option("--dim", opt.dim, "Dimension")->check(CLI::PositiveNumber);
    sub->add_option("--n-list", opt.n_list, "Particle counts");
    sub->add_option("--methods", opt.methods, "Methods to run");
    sub->add_option("--trials", opt.trials, "Trials per (method, n)")->check(CLI::PositiveNumber);
    sub->add_option("--iid-trials", opt.iid_trials, "Trials of the i.i.d. baseline");
    sub->add_option("--horizon", opt.horizon, "Equation time to reach")->check(CLI::PositiveNumber);
    sub->add_option("--rw-tau", opt.rw_tau, "Step size of the RW methods")->check(CLI::PositiveNumber);
    sub->add_option("--svgd-tau", opt.svgd_tau, "Step size of SVGD")->check(CLI::PositiveNumber);
    sub->add_option("--svgd-bandwidth", opt.svgd_bandwidth, "median, sqrt2d or a positive value");
    sub->add_option("--eps-coef", opt.eps_coef, "Regularization epsilon times n");
    add_fft_options(sub, opt.fft);
  }

  void resolve(const Globals& g)
  {
    opt.seed = g.seed;
    try {
      for (const auto& m : opt.methods)
        parse_method(m);
      make_target(opt.target, opt.dim);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct TimingCli
{
  TimingOptions opt;

  void attach(CLI::App* sub)
  {
    sub->add_option("--target", opt.target, "gaussian, banana or banana2d");
    sub->add_option("--methods", opt.methods, "Methods to time");
    sub->add_option("--n-list", opt.n_list, "Particle counts");
    sub->add_option("--d-list", opt.d_list, "Dimensions");
    sub->add_option("--repeats", opt.repeats, "Timed batches per point")->check(CLI::PositiveNumber);
    sub->add_option("--warmup-iterations", opt.warmup_iterations, "Untimed steps per point");
    sub->add_option("--min-batch-seconds", opt.min_batch_seconds, "Minimum duration of one timed batch")
      ->check(CLI::NonNegativeNumber);
    sub->add_option("--tau", opt.tau, "Step size")->check(CLI::PositiveNumber);
  }

  void resolve(const Globals& g)
  {
    opt.seed = g.seed;
    try {
      for (const auto& m : opt.methods)
        parse_method(m);
      for (auto d : opt.d_list)
        make_target(opt.target, d);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct ContinuumCli
{
  ContinuumRunOptions opt;
  std::string out = "continuum1d.csv";

  void attach(CLI::App* sub)
  {
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--kernel-bandwidth", opt.kernel_bandwidth, "Gaussian kernel bandwidth")->check(CLI::PositiveNumber);
    sub->add_option("--eps", opt.eps, "Regularization epsilon")->check(CLI::PositiveNumber);
    sub->add_option("--tau", opt.tau, "Time step")->check(CLI::PositiveNumber);
    sub->add_option("--h", opt.h, "Cell width")->check(CLI::PositiveNumber);
    sub->add_option("--steps", opt.steps, "Number of steps");
    sub->add_option("--lo", opt.lo, "Left wall");
    sub->add_option("--hi", opt.hi, "Right wall");
    sub->add_option("--init-mean", opt.init_mean, "Mean of the initial Gaussian");
    sub->add_option("--init-sd", opt.init_sd, "Standard deviation of the initial Gaussian")->check(CLI::PositiveNumber);
    sub->add_option("--record-every", opt.record_every, "Recording cadence in steps")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Trace CSV");
  }

  void resolve(const Globals&)
  {
    if (!(opt.hi > opt.lo))
      throw UsageError("--hi must exceed --lo");
    opt.out = out;
  }
};

//! Keeps the global flags and the section of the selected subcommand.
std::string selected_config(const CLI::App& app, const CLI::App* selected)
{
  std::istringstream in(app.config_to_str(true, false));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    bool other = false;
    for (const auto* sub : app.get_subcommands({}))
      if (sub != selected && line.rfind(sub->get_name() + ".", 0) == 0)
        other = true;
    const bool empty_list = line.ends_with("=\"{}\"") || line.ends_with("={}");
    if (!other && !empty_list)
      out << line << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path> outputs_in(const std::filesystem::path& dir, std::initializer_list<std::string> names)
{
  std::vector<std::filesystem::path> out;
  for (const auto& n : names)
    out.push_back(dir / n);
  return out;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Radon-Wasserstein particle samplers and experiment harness", "rwflow" };
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Rerun from a manifest (INI); command-line flags override it");
  app.set_version_flag("--version", version_string());

  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads for independent trials")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Write wall-clock columns as 0");
  app.add_option("--out-dir", g.out_dir, "Output directory");

  SampleCli sample;
  SweepCli sweep;
  ConvergenceCli conv;
  QuantizationCli quant;
  TimingCli timing;
  ContinuumCli cont;

  auto* s_sample = app.add_subcommand("sample", "Run one sampler and write metrics and final positions");
  auto* s_sweep = app.add_subcommand("bandwidth-sweep", "Final error over a grid of bandwidths");
  auto* s_conv = app.add_subcommand("convergence", "Error and variance against equation time");
  auto* s_quant = app.add_subcommand("quantization", "Long-time error against particle number");
  auto* s_timing = app.add_subcommand("timing", "Per-step wall time against n and d");
  auto* s_cont = app.add_subcommand("continuum1d", "Grid solver for the 1-D RRW continuity equation");
  sample.attach(s_sample);
  sweep.attach(s_sweep);
  conv.attach(s_conv);
  quant.attach(s_quant);
  timing.attach(s_timing);
  cont.attach(s_cont);
  for (auto* sub : app.get_subcommands({}))
    sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto started = std::chrono::system_clock::now();
  ExperimentContext ctx{ g.out_dir, g.threads, g.deterministic };
  ExperimentManifest manifest;
  std::function<std::vector<std::filesystem::path>()> job;

  try {
    if (s_sample->parsed()) {
      sample.resolve(g);
      manifest.experiment = "sample";
      manifest.seeds = { g.seed };
      job = [&] {
        const auto r = run_sample(sample.opt, ctx);
        return std::vector<std::filesystem::path>{ r.metrics_csv, r.positions_csv };
      };
    } else if (s_sweep->parsed()) {
      sweep.resolve(g);
      manifest.experiment = "bandwidth_sweep";
      manifest.seeds = { g.seed };
      job = [&] {
        run_bandwidth_sweep(sweep.opt, ctx);
        return outputs_in(ctx.out_dir, { "bandwidth_sweep.csv" });
      };
    } else if (s_conv->parsed()) {
      conv.resolve(g);
      manifest.experiment = "convergence";
      manifest.seeds = { g.seed };
      job = [&] {
        run_convergence(conv.opt, ctx);
        std::vector<std::filesystem::path> out;
        for (const auto& m : conv.opt.methods)
          out.push_back(ctx.out_dir / ("convergence_" + m + ".csv"));
        out.push_back(ctx.out_dir / "convergence_iid.csv");
        return out;
      };
    } else if (s_quant->parsed()) {
      quant.resolve(g);
      manifest.experiment = "quantization";
      manifest.seeds = { g.seed };
      job = [&] {
        run_quantization(quant.opt, ctx);
        return outputs_in(ctx.out_dir, { "quantization.csv", "quantization_slopes.csv" });
      };
    } else if (s_timing->parsed()) {
      timing.resolve(g);
      manifest.experiment = "timing";
      manifest.seeds = { g.seed };
      job = [&] {
        run_timing(timing.opt, ctx);
        return outputs_in(ctx.out_dir, { "timing.csv", "timing_exponents.csv" });
      };
    } else if (s_cont->parsed()) {
      cont.resolve(g);
      manifest.experiment = "continuum1d";
      job = [&] {
        const auto r = run_continuum(cont.opt, ctx);
        std::filesystem::path p = cont.opt.out;
        return std::vector<std::filesystem::path>{ p.is_absolute() ? p : ctx.out_dir / p };
      };
    }
  } catch (const UsageError& e) {
    std::cerr << "rwflow: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  }

  try {
    manifest.configuration = selected_config(app, app.get_subcommands().front());
    manifest.outputs = job();
    manifest.started = utc_timestamp(started);
    manifest.finished = utc_timestamp(std::chrono::system_clock::now());
    const auto path = write_manifest(manifest, ctx.out_dir);
    for (const auto& p : manifest.outputs)
      std::cout << p.string() << '\n';
    std::cout << path.string() << '\n';
  } catch (const RunAborted& e) {
    std::cerr << "rwflow: run aborted at step " << e.step() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "rwflow: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
