#pragma once

#include "rwflow/continuum1d.hpp"
#include "rwflow/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rwflow {

//! Settings shared by every experiment command.
struct ExperimentContext
{
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  //! Writes wall-clock columns as 0 so reruns produce byte-identical CSVs.
  bool deterministic = false;
};

//! Runs fn(0..count-1) on up to `threads` workers. Results must be written
//! to per-index slots so that output does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

//! Ordinary least squares y = slope * x + intercept.
struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
//! Fit of log(y) against log(x).
LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct MeanStderr
{
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

//! Exact i.i.d. draws from the target through its normal pushforward.
ParticleEnsemble iid_target_sample(const Target& target, std::size_t n, std::uint64_t seed);

//! Error of a final ensemble: MMD^2 after pulling back through T^{-1}
//! (plain MMD^2 for the Gaussian target).
double target_mmd2(const ParticleEnsemble& ensemble, const Target& target);

// ---------------------------------------------------------------------------
// sample

struct SampleOptions
{
  std::string target = "gaussian";
  std::size_t dim = 2;
  std::size_t n = 256;
  SamplerConfig config;
  //! Initial law N(init_shift e_1, init_scale I).
  double init_shift = 0.0;
  double init_scale = 1.0;
  std::filesystem::path out = "sample.csv";
};

struct SampleOutputs
{
  RunResult result;
  std::filesystem::path metrics_csv;
  std::filesystem::path positions_csv;
};

SampleOutputs run_sample(const SampleOptions& options, const ExperimentContext& ctx);

inline constexpr const char* kPositionsHeaderPrefix = "i";

// ---------------------------------------------------------------------------
// bandwidth sweep

struct BandwidthSweepOptions
{
  std::string target = "gaussian";
  std::size_t dim = 2;
  std::size_t n = 1024;
  std::vector<std::string> methods = { "kdrw_fft", "rrw_fft" };
  std::vector<double> bandwidths;
  std::size_t trials = 2;
  std::size_t iid_trials = 50;
  std::size_t steps = 20000;
  double tau = 0.01;
  std::size_t warmup_steps = 0;
  double eps_coef = 0.01;
  double init_shift = 2.0;
  FftParams fft;
  std::uint64_t seed = 1;
};

struct BandwidthSweepPoint
{
  std::string method;
  double bandwidth = 0.0;
  MeanStderr error;
};

struct BandwidthSweepResult
{
  std::vector<BandwidthSweepPoint> points;
  MeanStderr iid;
};

inline constexpr const char* kBandwidthSweepHeader =
  "method,bandwidth,trials,mean_error,stderr_error,iid_mean,iid_stderr";

//! Log-spaced grid of `count` values in [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

BandwidthSweepResult run_bandwidth_sweep(const BandwidthSweepOptions& options,
                                         const ExperimentContext& ctx);

// ---------------------------------------------------------------------------
// convergence in time

struct ConvergenceOptions
{
  std::string target = "banana";
  std::size_t dim = 2;
  std::size_t n = 256;
  std::vector<std::string> methods = { "kdrw_fft", "rrw_fft", "svgd" };
  double horizon = 200.0;
  double rw_tau = 0.005;
  double svgd_tau = 0.1;
  std::size_t warmup_steps = 100;
  double warmup_factor = 0.1;
  std::size_t record_every = 100;
  std::string bandwidth = "adaptive";
  std::string svgd_bandwidth = "median";
  double eps_coef = 0.01;
  double init_shift = 1.0;
  double init_scale = 0.25;
  std::size_t trials = 1;
  std::size_t iid_trials = 1;
  FftParams fft;
  std::uint64_t seed = 1;
};

struct ConvergenceSeries
{
  std::string method;
  //! Trial-averaged rows (same schema as a single run).
  RunRecord record;
};

struct ConvergenceResult
{
  std::vector<ConvergenceSeries> series;
  MeanStderr iid_error;
  MeanStderr iid_variance;
};

ConvergenceResult run_convergence(const ConvergenceOptions& options, const ExperimentContext& ctx);

//! Last recorded value of `metric` in a record (NaN when absent).
double final_metric(const RunRecord& record, const std::string& metric);

// ---------------------------------------------------------------------------
// quantization

struct QuantizationOptions
{
  std::string target = "gaussian";
  std::size_t dim = 2;
  std::vector<std::size_t> n_list = { 64, 128, 256, 512, 1024 };
  std::vector<std::string> methods = { "kdrw_fft", "rrw_fft" };
  std::size_t trials = 5;
  std::size_t iid_trials = 50;
  double horizon = 2000.0;
  double rw_tau = 0.1;
  double svgd_tau = 0.2;
  std::string svgd_bandwidth = "sqrt2d";
  double eps_coef = 0.01;
  FftParams fft;
  std::uint64_t seed = 1;
};

struct QuantizationRow
{
  std::string method;
  std::size_t n = 0;
  MeanStderr mmd2;
  MeanStderr mean_err;
};

struct QuantizationSlope
{
  std::string method;
  std::string metric;
  LinearFit fit;
};

struct QuantizationResult
{
  std::vector<QuantizationRow> rows;
  std::vector<QuantizationSlope> slopes;

  double slope(const std::string& method, const std::string& metric) const;
  const QuantizationRow& row(const std::string& method, std::size_t n) const;
};

inline constexpr const char* kQuantizationHeader =
  "method,n,trials,mmd2_mean,mmd2_stderr,mean_err_mean,mean_err_stderr";
inline constexpr const char* kSlopesHeader = "method,metric,slope,intercept";

QuantizationResult run_quantization(const QuantizationOptions& options, const ExperimentContext& ctx);

// ---------------------------------------------------------------------------
// timing

struct TimingOptions
{
  std::string target = "banana";
  std::vector<std::string> methods = { "kdrw_fft", "rrw_fft", "kdrw", "kdrw_laplace" };
  std::vector<std::size_t> n_list = { 256, 512, 1024, 2048, 4096 };
  std::vector<std::size_t> d_list = { 2 };
  std::size_t repeats = 15;
  std::size_t warmup_iterations = 3;
  //! Steps are timed in batches lasting at least this long.
  double min_batch_seconds = 2e-3;
  double tau = 0.001;
  std::uint64_t seed = 1;
};

struct TimingRow
{
  std::string method;
  std::size_t n = 0;
  std::size_t d = 0;
  double median_seconds = 0.0;
};

struct TimingExponent
{
  std::string method;
  std::size_t d = 0;
  double exponent = 0.0;
};

struct TimingResult
{
  std::vector<TimingRow> rows;
  std::vector<TimingExponent> exponents;

  double exponent(const std::string& method, std::size_t d) const;
};

inline constexpr const char* kTimingHeader = "method,n,d,median_seconds,repeats";
inline constexpr const char* kTimingExponentHeader = "method,d,exponent";

//! Median over `repeats` batches of the mean wall time of one sampler step.
//! Warm-up iterations are excluded; each batch runs long enough to last
//! `min_batch_seconds`.
double median_step_seconds(const Target& target,
                           const SamplerConfig& config,
                           std::size_t n,
                           std::size_t repeats,
                           std::size_t warmup_iterations,
                           double min_batch_seconds = 0.0);

TimingResult run_timing(const TimingOptions& options, const ExperimentContext& ctx);

// ---------------------------------------------------------------------------
// 1-D continuum flow

struct ContinuumRunOptions
{
  double kernel_bandwidth = 0.3;
  double eps = 1e-3;
  double tau = 0.005;
  double h = 0.02;
  std::size_t steps = 2000;
  double lo = -8.0;
  double hi = 8.0;
  double init_mean = 0.5;
  double init_sd = 1.0;
  std::size_t record_every = 10;
  std::filesystem::path out = "continuum1d.csv";
};

struct ContinuumRunResult
{
  std::vector<ContinuumTraceRow> trace;
  DensityGrid final_grid;
};

ContinuumRunResult run_continuum(const ContinuumRunOptions& options, const ExperimentContext& ctx);

} // namespace rwflow
