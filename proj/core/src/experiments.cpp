#include "rwflow/experiments.hpp"

#include "rwflow/manifest.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace rwflow {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn)
{
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned w = 0; w < used; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure)
    std::rethrow_exception(failure);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("line fit needs at least two paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("line fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return { slope, my - slope * mx };
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

MeanStderr mean_stderr(const std::vector<double>& values)
{
  MeanStderr out;
  if (values.empty())
    return { std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN() };
  const auto n = static_cast<double>(values.size());
  for (double v : values)
    out.mean += v;
  out.mean /= n;
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values)
      var += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(var / (n - 1.0) / n);
  }
  return out;
}

ParticleEnsemble iid_target_sample(const Target& target, std::size_t n, std::uint64_t seed)
{
  ParticleEnsemble z = gaussian_init(n, target.dim(), {}, 1.0, seed);
  ParticleEnsemble x(n, target.dim());
  for (std::size_t i = 0; i < n; ++i)
    target.forward(z[i], x[i]);
  return x;
}

double target_mmd2(const ParticleEnsemble& ensemble, const Target& target)
{
  return mmd2_transformed(ensemble, target, MmdSpec::for_dim(ensemble.dim()));
}

namespace {

std::filesystem::path resolve(const ExperimentContext& ctx, const std::filesystem::path& p)
{
  return p.is_absolute() ? p : ctx.out_dir / p;
}

std::vector<double> shifted_mean(std::size_t d, double shift)
{
  std::vector<double> mean(d, 0.0);
  mean[0] = shift;
  return mean;
}

SvgdBandwidth parse_svgd_bandwidth(const std::string& name, double* value)
{
  if (name == "median")
    return SvgdBandwidth::Median;
  if (name == "sqrt2d")
    return SvgdBandwidth::Sqrt2d;
  const double v = std::stod(name);
  if (!(v > 0.0))
    throw std::invalid_argument("svgd bandwidth must be median, sqrt2d or positive");
  *value = v;
  return SvgdBandwidth::Value;
}

std::string positions_csv(const ParticleEnsemble& e)
{
  std::ostringstream os;
  os << kPositionsHeaderPrefix;
  for (std::size_t k = 0; k < e.dim(); ++k)
    os << ",x_" << (k + 1);
  os << '\n';
  for (std::size_t i = 0; i < e.size(); ++i) {
    os << i;
    for (double v : e[i])
      os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::string record_csv(const RunRecord& record, bool deterministic)
{
  std::ostringstream os;
  write_run_record_csv(os, record, deterministic);
  return os.str();
}

// Row-wise average of records with identical (step, metric) layout.
RunRecord average_records(const std::vector<RunRecord>& records)
{
  RunRecord out;
  if (records.empty())
    return out;
  out.rows = records.front().rows;
  for (auto& row : out.rows) {
    row.value = 0.0;
    row.wall_seconds = 0.0;
  }
  for (const auto& rec : records) {
    if (rec.rows.size() != out.rows.size())
      throw std::logic_error("trial records differ in length");
    for (std::size_t r = 0; r < rec.rows.size(); ++r) {
      out.rows[r].value += rec.rows[r].value;
      out.rows[r].wall_seconds += rec.rows[r].wall_seconds;
    }
  }
  const auto k = static_cast<double>(records.size());
  for (auto& row : out.rows) {
    row.value /= k;
    row.wall_seconds /= k;
  }
  return out;
}

} // namespace

double final_metric(const RunRecord& record, const std::string& metric)
{
  for (auto it = record.rows.rbegin(); it != record.rows.rend(); ++it)
    if (it->metric == metric)
      return it->value;
  return std::numeric_limits<double>::quiet_NaN();
}

SampleOutputs run_sample(const SampleOptions& options, const ExperimentContext& ctx)
{
  const Target target = make_target(options.target, options.dim);
  const std::size_t d = target.dim();
  const ParticleEnsemble init = gaussian_init(
    options.n, d, shifted_mean(d, options.init_shift), options.init_scale, mix_seed(options.config.seed, 0));
  SampleOutputs out;
  out.result = run(target, options.config, init);
  out.metrics_csv = resolve(ctx, options.out);
  out.positions_csv = out.metrics_csv;
  out.positions_csv.replace_filename(out.metrics_csv.stem().string() + "_positions.csv");
  write_file_atomic(out.metrics_csv, record_csv(out.result.record, ctx.deterministic));
  write_file_atomic(out.positions_csv, positions_csv(out.result.final_state));
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count)
{
  if (!(lo > 0.0) || !(hi >= lo) || count == 0)
    throw std::invalid_argument("log_spaced needs 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.back() = hi;
  return out;
}

BandwidthSweepResult run_bandwidth_sweep(const BandwidthSweepOptions& options,
                                         const ExperimentContext& ctx)
{
  const Target target = make_target(options.target, options.dim);
  const std::size_t d = target.dim();
  const std::size_t nm = options.methods.size();
  const std::size_t nb = options.bandwidths.size();
  const std::size_t jobs = nm * nb * options.trials;
  std::vector<double> errors(jobs, std::numeric_limits<double>::quiet_NaN());

  parallel_for(jobs, ctx.threads, [&](std::size_t job) {
    const std::size_t trial = job % options.trials;
    const std::size_t bi = (job / options.trials) % nb;
    const std::size_t mi = job / (options.trials * nb);
    const ParticleEnsemble init =
      gaussian_init(options.n, d, shifted_mean(d, options.init_shift), 1.0, mix_seed(options.seed, 2 * trial));
    SamplerConfig cfg;
    cfg.method = parse_method(options.methods[mi]);
    cfg.steps = options.steps;
    cfg.step_size = options.tau;
    cfg.warmup_steps = options.warmup_steps;
    cfg.eps_coef = options.eps_coef;
    cfg.bandwidth = { BandwidthChoice::Kind::Value, options.bandwidths[bi] };
    cfg.fft = options.fft;
    cfg.seed = mix_seed(options.seed, 2 * trial + 1);
    cfg.metrics.clear();
    cfg.record_every = std::max<std::size_t>(options.steps, 1);
    try {
      errors[job] = target_mmd2(run(target, cfg, init).final_state, target);
    } catch (const RunAborted&) {
      errors[job] = std::numeric_limits<double>::infinity();
    }
  });

  BandwidthSweepResult result;
  for (std::size_t mi = 0; mi < nm; ++mi)
    for (std::size_t bi = 0; bi < nb; ++bi) {
      std::vector<double> vals(errors.begin() + static_cast<std::ptrdiff_t>((mi * nb + bi) * options.trials),
                               errors.begin() + static_cast<std::ptrdiff_t>((mi * nb + bi + 1) * options.trials));
      result.points.push_back({ options.methods[mi], options.bandwidths[bi], mean_stderr(vals) });
    }

  std::vector<double> iid(options.iid_trials);
  for (std::size_t k = 0; k < options.iid_trials; ++k)
    iid[k] = target_mmd2(iid_target_sample(target, options.n, mix_seed(options.seed, 100000 + k)), target);
  result.iid = mean_stderr(iid);

  std::ostringstream os;
  os << kBandwidthSweepHeader << '\n';
  for (const auto& p : result.points)
    os << p.method << ',' << format_double(p.bandwidth) << ',' << options.trials << ','
       << format_double(p.error.mean) << ',' << format_double(p.error.stderr_) << ','
       << format_double(result.iid.mean) << ',' << format_double(result.iid.stderr_) << '\n';
  write_file_atomic(ctx.out_dir / "bandwidth_sweep.csv", os.str());
  return result;
}

ConvergenceResult run_convergence(const ConvergenceOptions& options, const ExperimentContext& ctx)
{
  const Target target = make_target(options.target, options.dim);
  const std::size_t d = target.dim();
  const std::size_t nm = options.methods.size();
  const std::size_t jobs = nm * options.trials;
  std::vector<RunRecord> records(jobs);

  parallel_for(jobs, ctx.threads, [&](std::size_t job) {
    const std::size_t trial = job % options.trials;
    const std::size_t mi = job / options.trials;
    const ParticleEnsemble init = gaussian_init(options.n,
                                                d,
                                                shifted_mean(d, options.init_shift),
                                                options.init_scale,
                                                mix_seed(options.seed, 2 * trial));
    SamplerConfig cfg;
    cfg.method = parse_method(options.methods[mi]);
    const double tau = cfg.method == Method::Svgd ? options.svgd_tau : options.rw_tau;
    cfg.step_size = tau;
    cfg.warmup_steps = options.warmup_steps;
    cfg.warmup_factor = options.warmup_factor;
    cfg.steps = steps_for_horizon(options.horizon, tau, options.warmup_steps, options.warmup_factor);
    cfg.warmup_steps = std::min(options.warmup_steps, cfg.steps);
    cfg.eps_coef = options.eps_coef;
    cfg.bandwidth = BandwidthChoice::parse(options.bandwidth);
    cfg.svgd_bandwidth = parse_svgd_bandwidth(options.svgd_bandwidth, &cfg.svgd_bandwidth_value);
    cfg.fft = options.fft;
    cfg.seed = mix_seed(options.seed, 2 * trial + 1);
    cfg.record_every = options.record_every;
    cfg.metrics = { "mmd2_T", "var_per_coord" };
    records[job] = run(target, cfg, init).record;
  });

  ConvergenceResult result;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    std::vector<RunRecord> trials(records.begin() + static_cast<std::ptrdiff_t>(mi * options.trials),
                                  records.begin() + static_cast<std::ptrdiff_t>((mi + 1) * options.trials));
    ConvergenceSeries s{ options.methods[mi], average_records(trials) };
    write_file_atomic(ctx.out_dir / ("convergence_" + s.method + ".csv"),
                      record_csv(s.record, ctx.deterministic));
    result.series.push_back(std::move(s));
  }

  std::vector<double> iid_err(options.iid_trials), iid_var(options.iid_trials);
  for (std::size_t k = 0; k < options.iid_trials; ++k) {
    const ParticleEnsemble sample = iid_target_sample(target, options.n, mix_seed(options.seed, 100000 + k));
    iid_err[k] = target_mmd2(sample, target);
    iid_var[k] = variance_per_coordinate(sample);
  }
  result.iid_error = mean_stderr(iid_err);
  result.iid_variance = mean_stderr(iid_var);
  RunRecord iid;
  iid.rows.push_back({ 0, 0.0, "mmd2_T", result.iid_error.mean, 0.0 });
  iid.rows.push_back({ 0, 0.0, "var_per_coord", result.iid_variance.mean, 0.0 });
  write_file_atomic(ctx.out_dir / "convergence_iid.csv", record_csv(iid, true));
  return result;
}

double QuantizationResult::slope(const std::string& method, const std::string& metric) const
{
  for (const auto& s : slopes)
    if (s.method == method && s.metric == metric)
      return s.fit.slope;
  throw std::out_of_range("no slope for " + method + "/" + metric);
}

const QuantizationRow& QuantizationResult::row(const std::string& method, std::size_t n) const
{
  for (const auto& r : rows)
    if (r.method == method && r.n == n)
      return r;
  throw std::out_of_range("no quantization row for " + method);
}

QuantizationResult run_quantization(const QuantizationOptions& options, const ExperimentContext& ctx)
{
  const Target target = make_target(options.target, options.dim);
  const std::size_t d = target.dim();
  const std::size_t nm = options.methods.size();
  const std::size_t nn = options.n_list.size();
  const std::size_t jobs = nm * nn * options.trials;
  std::vector<double> mmd(jobs), merr(jobs);

  parallel_for(jobs, ctx.threads, [&](std::size_t job) {
    const std::size_t trial = job % options.trials;
    const std::size_t ni = (job / options.trials) % nn;
    const std::size_t mi = job / (options.trials * nn);
    const std::size_t n = options.n_list[ni];
    const ParticleEnsemble init = gaussian_init(n, d, {}, 1.0, mix_seed(options.seed, 2 * (trial * 7919 + n)));
    SamplerConfig cfg;
    cfg.method = parse_method(options.methods[mi]);
    const double tau = cfg.method == Method::Svgd ? options.svgd_tau : options.rw_tau;
    cfg.step_size = tau;
    cfg.warmup_steps = 0;
    cfg.steps = steps_for_horizon(options.horizon, tau, 0, 1.0);
    cfg.eps_coef = options.eps_coef;
    cfg.bandwidth = { BandwidthChoice::Kind::FixedRule, 0.0 };
    cfg.svgd_bandwidth = parse_svgd_bandwidth(options.svgd_bandwidth, &cfg.svgd_bandwidth_value);
    cfg.fft = options.fft;
    cfg.seed = mix_seed(options.seed, 2 * (trial * 7919 + n) + 1);
    cfg.metrics.clear();
    cfg.record_every = cfg.steps;
    const ParticleEnsemble final_state = run(target, cfg, init).final_state;
    ParticleEnsemble pulled(final_state.size(), d);
    for (std::size_t i = 0; i < final_state.size(); ++i)
      target.inverse(final_state[i], pulled[i]);
    mmd[job] = mmd2_vs_standard_gaussian(pulled, MmdSpec::for_dim(d));
    merr[job] = mean_error(pulled);
  });

  QuantizationResult result;
  auto add_method = [&](const std::string& method, const std::vector<double>& m,
                        const std::vector<double>& e, std::size_t trials) {
    std::vector<double> ns, mm, me;
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const auto first = static_cast<std::ptrdiff_t>(ni * trials);
      const auto last = static_cast<std::ptrdiff_t>((ni + 1) * trials);
      QuantizationRow row{ method,
                           options.n_list[ni],
                           mean_stderr({ m.begin() + first, m.begin() + last }),
                           mean_stderr({ e.begin() + first, e.begin() + last }) };
      ns.push_back(static_cast<double>(row.n));
      mm.push_back(row.mmd2.mean);
      me.push_back(row.mean_err.mean);
      result.rows.push_back(row);
    }
    if (nn >= 2) {
      result.slopes.push_back({ method, "mmd2", fit_loglog(ns, mm) });
      result.slopes.push_back({ method, "mean_err", fit_loglog(ns, me) });
    }
  };

  for (std::size_t mi = 0; mi < nm; ++mi) {
    const auto first = static_cast<std::ptrdiff_t>(mi * nn * options.trials);
    const auto last = static_cast<std::ptrdiff_t>((mi + 1) * nn * options.trials);
    add_method(options.methods[mi],
               { mmd.begin() + first, mmd.begin() + last },
               { merr.begin() + first, merr.begin() + last },
               options.trials);
  }

  if (options.iid_trials > 0) {
    std::vector<double> im, ie;
    for (std::size_t ni = 0; ni < nn; ++ni)
      for (std::size_t k = 0; k < options.iid_trials; ++k) {
        ParticleEnsemble z =
          gaussian_init(options.n_list[ni], d, {}, 1.0, mix_seed(options.seed, 100000 + 1000 * ni + k));
        im.push_back(mmd2_vs_standard_gaussian(z, MmdSpec::for_dim(d)));
        ie.push_back(mean_error(z));
      }
    add_method("iid", im, ie, options.iid_trials);
  }

  std::ostringstream rows, slopes;
  rows << kQuantizationHeader << '\n';
  for (const auto& r : result.rows) {
    const std::size_t trials = r.method == "iid" ? options.iid_trials : options.trials;
    rows << r.method << ',' << r.n << ',' << trials << ',' << format_double(r.mmd2.mean) << ','
         << format_double(r.mmd2.stderr_) << ',' << format_double(r.mean_err.mean) << ','
         << format_double(r.mean_err.stderr_) << '\n';
  }
  slopes << kSlopesHeader << '\n';
  for (const auto& s : result.slopes)
    slopes << s.method << ',' << s.metric << ',' << format_double(s.fit.slope) << ','
           << format_double(s.fit.intercept) << '\n';
  write_file_atomic(ctx.out_dir / "quantization.csv", rows.str());
  write_file_atomic(ctx.out_dir / "quantization_slopes.csv", slopes.str());
  return result;
}

double TimingResult::exponent(const std::string& method, std::size_t d) const
{
  for (const auto& e : exponents)
    if (e.method == method && e.d == d)
      return e.exponent;
  throw std::out_of_range("no timing exponent for " + method);
}

double median_step_seconds(const Target& target,
                           const SamplerConfig& config,
                           std::size_t n,
                           std::size_t repeats,
                           std::size_t warmup_iterations,
                           double min_batch_seconds)
{
  using clock = std::chrono::steady_clock;
  ParticleEnsemble ens = iid_target_sample(target, n, mix_seed(config.seed, n));
  DirectionStream stream(config.seed);
  std::size_t m = 0;
  const auto step = [&] {
    if (config.method == Method::Svgd)
      svgd_step(ens, target, config, m);
    else
      rw_step(ens, target, config, stream, m);
    ++m;
  };
  const auto time_batch = [&](std::size_t count) {
    const auto start = clock::now();
    for (std::size_t k = 0; k < count; ++k)
      step();
    return std::chrono::duration<double>(clock::now() - start).count() / static_cast<double>(count);
  };

  double single = 0.0;
  for (std::size_t w = 0; w < std::max<std::size_t>(warmup_iterations, 1); ++w)
    single = time_batch(1);
  const auto batch = static_cast<std::size_t>(
    std::clamp(std::ceil(min_batch_seconds / std::max(single, 1e-9)), 1.0, 1e6));

  std::vector<double> times;
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r)
    times.push_back(time_batch(batch));
  const auto mid = times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2);
  std::nth_element(times.begin(), mid, times.end());
  return *mid;
}

TimingResult run_timing(const TimingOptions& options, const ExperimentContext& ctx)
{
  TimingResult result;
  for (const auto& method : options.methods)
    for (std::size_t d : options.d_list) {
      const Target target = make_target(options.target, d);
      std::vector<double> ns, ts;
      for (std::size_t n : options.n_list) {
        SamplerConfig cfg;
        cfg.method = parse_method(method);
        cfg.step_size = options.tau;
        cfg.warmup_steps = 0;
        cfg.seed = options.seed;
        cfg.svgd_bandwidth = SvgdBandwidth::Sqrt2d;
        const double t = median_step_seconds(
          target, cfg, n, options.repeats, options.warmup_iterations, options.min_batch_seconds);
        result.rows.push_back({ method, n, d, t });
        ns.push_back(static_cast<double>(n));
        ts.push_back(t);
      }
      if (ns.size() >= 2)
        result.exponents.push_back({ method, d, fit_loglog(ns, ts).slope });
    }

  std::ostringstream rows, exps;
  rows << kTimingHeader << '\n';
  for (const auto& r : result.rows)
    rows << r.method << ',' << r.n << ',' << r.d << ',' << format_double(r.median_seconds) << ','
         << options.repeats << '\n';
  exps << kTimingExponentHeader << '\n';
  for (const auto& e : result.exponents)
    exps << e.method << ',' << e.d << ',' << format_double(e.exponent) << '\n';
  write_file_atomic(ctx.out_dir / "timing.csv", rows.str());
  write_file_atomic(ctx.out_dir / "timing_exponents.csv", exps.str());
  return result;
}

ContinuumRunResult run_continuum(const ContinuumRunOptions& options, const ExperimentContext& ctx)
{
  const Target target = gaussian_target(1);
  const Kernel1D kernel = gaussian_kernel(options.kernel_bandwidth);
  ContinuumRunResult result;
  result.final_grid = gaussian_density_grid(options.init_mean, options.init_sd, options.lo, options.hi, options.h);
  result.trace = trace_entropy_balance(
    result.final_grid, kernel, options.eps, target, options.tau, options.steps, options.record_every);

  std::ostringstream os;
  os << kContinuumHeader << '\n';
  for (const auto& r : result.trace)
    os << format_double(r.t) << ',' << format_double(r.kl) << ',' << format_double(r.dissipation) << ','
       << format_double(r.balance_residual) << ',' << format_double(r.mass) << '\n';
  write_file_atomic(resolve(ctx, options.out), os.str());
  return result;
}

} // namespace rwflow
