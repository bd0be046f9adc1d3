#include "rwflow/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numbers>

namespace rwflow {

Method parse_method(std::string_view name)
{
  if (name == "svgd")
    return Method::Svgd;
  switch (parse_backend(name)) {
    case VelocityBackend::Kdrw:
      return Method::Kdrw;
    case VelocityBackend::KdrwFft:
      return Method::KdrwFft;
    case VelocityBackend::Rrw:
      return Method::Rrw;
    case VelocityBackend::RrwFft:
      return Method::RrwFft;
    case VelocityBackend::KdrwLaplace:
      return Method::KdrwLaplace;
  }
  throw std::invalid_argument("unknown method");
}

std::string_view method_name(Method method)
{
  if (method == Method::Svgd)
    return "svgd";
  return backend_name(backend_of(method));
}

VelocityBackend backend_of(Method method)
{
  switch (method) {
    case Method::Kdrw:
      return VelocityBackend::Kdrw;
    case Method::KdrwFft:
      return VelocityBackend::KdrwFft;
    case Method::Rrw:
      return VelocityBackend::Rrw;
    case Method::RrwFft:
      return VelocityBackend::RrwFft;
    case Method::KdrwLaplace:
      return VelocityBackend::KdrwLaplace;
    case Method::Svgd:
      break;
  }
  throw std::invalid_argument("svgd has no projected velocity backend");
}

BandwidthChoice BandwidthChoice::parse(std::string_view text)
{
  if (text == "fixed")
    return { Kind::FixedRule, 0.0 };
  if (text == "adaptive")
    return { Kind::AdaptiveRule, 0.0 };
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !(v > 0.0))
    throw std::invalid_argument("bandwidth must be 'fixed', 'adaptive' or a positive number");
  return { Kind::Value, v };
}

std::string BandwidthChoice::to_string() const
{
  switch (kind) {
    case Kind::FixedRule:
      return "fixed";
    case Kind::AdaptiveRule:
      return "adaptive";
    case Kind::Value:
      return format_double(value);
  }
  return "fixed";
}

void SamplerConfig::validate() const
{
  if (!(step_size > 0.0))
    throw std::invalid_argument("step size must be positive");
  if (warmup_steps && *warmup_steps > steps)
    throw std::invalid_argument("warm-up steps exceed the total number of steps");
  if (!(warmup_factor > 0.0 && warmup_factor <= 1.0))
    throw std::invalid_argument("warm-up factor must lie in (0, 1]");
  if (!(eps_coef >= 0.0))
    throw std::invalid_argument("epsilon coefficient must be nonnegative");
  if (record_every == 0)
    throw std::invalid_argument("record_every must be positive");
  if (score_mode == ScoreMode::FiniteDifference && !(fd_step > 0.0))
    throw std::invalid_argument("finite-difference step must be positive");
  if (bandwidth.kind == BandwidthChoice::Kind::Value && !(bandwidth.value > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  fft.validate();
}

std::size_t SamplerConfig::effective_warmup() const
{
  return warmup_steps.value_or(steps / 10);
}

double SamplerConfig::step_size_at(std::size_t step) const
{
  return step < effective_warmup() ? step_size * warmup_factor : step_size;
}

double SamplerConfig::horizon() const
{
  const auto w = static_cast<double>(std::min(effective_warmup(), steps));
  return step_size * (warmup_factor * w + (static_cast<double>(steps) - w));
}

std::size_t steps_for_horizon(double horizon,
                              double step_size,
                              std::size_t warmup_steps,
                              double warmup_factor)
{
  if (!(step_size > 0.0))
    throw std::invalid_argument("step size must be positive");
  const double warm_time = static_cast<double>(warmup_steps) * step_size * warmup_factor;
  if (horizon <= warm_time)
    return static_cast<std::size_t>(std::ceil(horizon / (step_size * warmup_factor) - 1e-9));
  const double rest = std::ceil((horizon - warm_time) / step_size - 1e-9);
  return warmup_steps + static_cast<std::size_t>(rest);
}

double resolve_bandwidth(const SamplerConfig& config, std::span<const double> projections)
{
  const FlowKind flow = flow_of(backend_of(config.method));
  switch (config.bandwidth.kind) {
    case BandwidthChoice::Kind::Value:
      return config.bandwidth.value;
    case BandwidthChoice::Kind::FixedRule:
      return fixed_bandwidth_rule(flow, projections.size());
    case BandwidthChoice::Kind::AdaptiveRule:
      return adaptive_bandwidth_rule(flow, projections);
  }
  return fixed_bandwidth_rule(flow, projections.size());
}

std::vector<double> directional_velocity(const ParticleEnsemble& ensemble,
                                         const Target& target,
                                         const SamplerConfig& config,
                                         std::span<const double> theta)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  std::vector<double> p(n), s(n), grad(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ensemble[i];
    double proj = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      proj += x[k] * theta[k];
    p[i] = proj;
    if (config.score_mode == ScoreMode::Analytic) {
      target.score(x, grad);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        dot += grad[k] * theta[k];
      s[i] = dot;
    } else {
      s[i] = finite_difference_directional_score(target, x, theta, config.fd_step);
    }
  }
  const VelocityBackend backend = backend_of(config.method);
  const double b = resolve_bandwidth(config, p);
  const KernelFamily family =
    backend == VelocityBackend::KdrwLaplace ? KernelFamily::Laplace : config.kernel;
  const Kernel1D kernel(family, b);
  const ProjectedState state{ p, s, config.eps_coef / static_cast<double>(n) };
  return compute_velocity(backend, state, kernel, config.fft);
}

namespace {

// Applies x^i += scale * dir * coef^i after checking the result is finite.
void apply_update(ParticleEnsemble& ensemble,
                  std::span<const double> direction,
                  std::span<const double> coef,
                  double scale,
                  std::size_t step_index)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ensemble[i];
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(x[k] + scale * direction[k] * coef[i]))
        throw RunAborted("non-finite coordinate at step " + std::to_string(step_index) +
                           " (particle " + std::to_string(i) + "); reduce the step size",
                         step_index,
                         ensemble);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto x = ensemble[i];
    for (std::size_t k = 0; k < d; ++k)
      x[k] += scale * direction[k] * coef[i];
  }
}

} // namespace

void rw_step(ParticleEnsemble& ensemble,
             const Target& target,
             const SamplerConfig& config,
             DirectionStream& stream,
             std::size_t step_index)
{
  if (config.method == Method::Svgd)
    throw std::invalid_argument("rw_step called with the svgd method");
  const std::vector<double> theta = stream.sample(ensemble.dim());
  const std::vector<double> v = directional_velocity(ensemble, target, config, theta);
  apply_update(ensemble, theta, v, -config.step_size_at(step_index), step_index);
}

void rw_step_sphere_average(ParticleEnsemble& ensemble,
                            const Target& target,
                            const SamplerConfig& config,
                            double step_size,
                            std::size_t num_angles)
{
  if (ensemble.dim() != 2)
    throw std::invalid_argument("sphere-average step is implemented for d = 2");
  if (num_angles == 0)
    throw std::invalid_argument("need at least one quadrature angle");
  const std::size_t n = ensemble.size();
  // theta v(theta) is even in theta, so the half circle carries the average.
  std::vector<double> disp(2 * n, 0.0);
  for (std::size_t a = 0; a < num_angles; ++a) {
    const double phi =
      (static_cast<double>(a) + 0.5) * std::numbers::pi / static_cast<double>(num_angles);
    const double theta[2] = { std::cos(phi), std::sin(phi) };
    const std::vector<double> v = directional_velocity(ensemble, target, config, theta);
    for (std::size_t i = 0; i < n; ++i) {
      disp[2 * i] -= theta[0] * v[i];
      disp[2 * i + 1] -= theta[1] * v[i];
    }
  }
  const double scale = step_size / static_cast<double>(num_angles);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = ensemble[i];
    x[0] += scale * disp[2 * i];
    x[1] += scale * disp[2 * i + 1];
  }
  if (!ensemble.all_finite())
    throw std::runtime_error("non-finite coordinate in sphere-average step");
}

double svgd_bandwidth_squared(const ParticleEnsemble& ensemble, const SamplerConfig& config)
{
  const std::size_t n = ensemble.size();
  const auto d = static_cast<double>(ensemble.dim());
  switch (config.svgd_bandwidth) {
    case SvgdBandwidth::Value:
      return config.svgd_bandwidth_value * config.svgd_bandwidth_value;
    case SvgdBandwidth::Sqrt2d:
      return 2.0 * d;
    case SvgdBandwidth::Median:
      break;
  }
  if (n < 2)
    return 2.0 * d;
  std::vector<double> dist2;
  dist2.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < ensemble.dim(); ++k) {
        const double diff = ensemble[i][k] - ensemble[j][k];
        r2 += diff * diff;
      }
      dist2.push_back(r2);
    }
  const auto mid = dist2.begin() + static_cast<std::ptrdiff_t>(dist2.size() / 2);
  std::nth_element(dist2.begin(), mid, dist2.end());
  double median = *mid;
  if (dist2.size() % 2 == 0) {
    const double lower = *std::max_element(dist2.begin(), mid);
    median = 0.5 * (median + lower);
  }
  const double b2 = median / (2.0 * std::log(static_cast<double>(n) + 1.0));
  return b2 > 0.0 ? b2 : 2.0 * d;
}

void svgd_step(ParticleEnsemble& ensemble,
               const Target& target,
               const SamplerConfig& config,
               std::size_t step_index)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  std::vector<double> scores(n * d);
  for (std::size_t j = 0; j < n; ++j)
    target.score(ensemble[j], std::span<double>(scores.data() + j * d, d));
  const double b2 = svgd_bandwidth_squared(ensemble, config);

  std::vector<double> phi(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = ensemble[i];
    double* out = phi.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      const auto xj = ensemble[j];
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        r2 += diff * diff;
      }
      const double kappa = std::exp(-r2 / b2);
      const double* sj = scores.data() + j * d;
      for (std::size_t k = 0; k < d; ++k)
        out[k] += kappa * (sj[k] + 2.0 * (xi[k] - xj[k]) / b2);
    }
  }
  const double scale = config.step_size_at(step_index) / static_cast<double>(n);
  for (std::size_t i = 0; i < n * d; ++i) {
    if (!std::isfinite(ensemble.data()[i] + scale * phi[i]))
      throw RunAborted("non-finite coordinate at step " + std::to_string(step_index) +
                         "; reduce the step size",
                       step_index,
                       ensemble);
  }
  auto x = ensemble.data();
  for (std::size_t i = 0; i < n * d; ++i)
    x[i] += scale * phi[i];
}

double evaluate_metric(std::string_view metric,
                       const ParticleEnsemble& ensemble,
                       const Target& target,
                       const ParticleEnsemble* reference)
{
  if (metric == "mmd2")
    return mmd2_vs_standard_gaussian(ensemble, MmdSpec::for_dim(ensemble.dim()));
  if (metric == "mmd2_T")
    return mmd2_transformed(ensemble, target, MmdSpec::for_dim(ensemble.dim()));
  if (metric == "mean_err")
    return mean_error(ensemble);
  if (metric == "var_per_coord")
    return variance_per_coordinate(ensemble);
  if (metric == "w2_ref") {
    if (!reference)
      throw std::invalid_argument("w2_ref needs a reference ensemble");
    return w2_exact_small(ensemble, *reference);
  }
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

RunResult run(const Target& target,
              const SamplerConfig& config,
              ParticleEnsemble initial,
              const ParticleEnsemble* reference)
{
  config.validate();
  if (initial.dim() != target.dim())
    throw std::invalid_argument("initial ensemble dimension does not match target");
  if (initial.size() == 0)
    throw std::invalid_argument("initial ensemble is empty");
  for (const auto& m : config.metrics)
    if (m != "mmd2" && m != "mmd2_T" && m != "mean_err" && m != "var_per_coord" && m != "w2_ref")
      throw std::invalid_argument("unknown metric '" + m + "'");

  using clock = std::chrono::steady_clock;
  RunResult result{ {}, std::move(initial) };
  auto& ens = result.final_state;
  DirectionStream stream(config.seed);
  double t = 0.0;
  double wall = 0.0;
  result.record.step_seconds.reserve(config.steps);
  for (std::size_t m = 0; m < config.steps; ++m) {
    const auto start = clock::now();
    try {
      if (config.method == Method::Svgd)
        svgd_step(ens, target, config, m);
      else
        rw_step(ens, target, config, stream, m);
    } catch (const RunAborted&) {
      throw;
    } catch (const std::exception& e) {
      throw RunAborted(std::string(e.what()) + " (step " + std::to_string(m) + ")", m, ens);
    }
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    result.record.step_seconds.push_back(secs);
    wall += secs;
    t += config.step_size_at(m);
    if ((m + 1) % config.record_every == 0 || m + 1 == config.steps) {
      for (const auto& metric : config.metrics)
        result.record.rows.push_back(
          { m + 1, t, metric, evaluate_metric(metric, ens, target, reference), wall });
    }
  }
  return result;
}

} // namespace rwflow
