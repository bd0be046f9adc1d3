#pragma once

#include "rwflow/ensemble.hpp"
#include "rwflow/kernels.hpp"
#include "rwflow/metrics.hpp"
#include "rwflow/targets.hpp"
#include "rwflow/velocity.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rwflow {

enum class Method { Kdrw, KdrwFft, Rrw, RrwFft, KdrwLaplace, Svgd };

Method parse_method(std::string_view name);
std::string_view method_name(Method method);
//! Velocity backend of a Radon-Wasserstein method; throws for SVGD.
VelocityBackend backend_of(Method method);

//! A numeric bandwidth or one of the n-dependent rules.
struct BandwidthChoice
{
  enum class Kind { Value, FixedRule, AdaptiveRule };
  Kind kind = Kind::FixedRule;
  double value = 0.0;

  //! Parses `fixed`, `adaptive` or a positive number.
  static BandwidthChoice parse(std::string_view text);
  std::string to_string() const;
};

enum class SvgdBandwidth { Median, Sqrt2d, Value };

enum class ScoreMode { Analytic, FiniteDifference };

struct SamplerConfig
{
  Method method = Method::KdrwFft;
  std::size_t steps = 1000;
  double step_size = 0.01;
  //! Defaults to steps / 10 when unset.
  std::optional<std::size_t> warmup_steps;
  double warmup_factor = 0.1;
  //! epsilon = eps_coef / n.
  double eps_coef = 0.01;
  BandwidthChoice bandwidth;
  //! Smoothing kernel of the RW backends (kdrw_laplace always uses Laplace).
  KernelFamily kernel = KernelFamily::Gaussian;
  FftParams fft;
  ScoreMode score_mode = ScoreMode::Analytic;
  double fd_step = 1e-4;
  SvgdBandwidth svgd_bandwidth = SvgdBandwidth::Median;
  double svgd_bandwidth_value = 1.0;
  std::uint64_t seed = 1;
  std::size_t record_every = 100;
  //! Any of mmd2, mmd2_T, mean_err, var_per_coord, w2_ref.
  std::vector<std::string> metrics = { "mmd2" };

  void validate() const;
  std::size_t effective_warmup() const;
  double step_size_at(std::size_t step) const;
  //! Cumulative equation time after `steps` steps.
  double horizon() const;
};

//! Smallest step count whose cumulative effective step size reaches
//! `horizon` when the first `warmup_steps` steps are scaled by `warmup_factor`.
std::size_t steps_for_horizon(double horizon,
                              double step_size,
                              std::size_t warmup_steps,
                              double warmup_factor);

//! A run stopped on a non-finite coordinate or a backend failure.
class RunAborted : public std::runtime_error
{
public:
  RunAborted(const std::string& what, std::size_t step, ParticleEnsemble last_valid)
    : std::runtime_error(what)
    , step_(step)
    , last_valid_(std::move(last_valid))
  {
  }
  std::size_t step() const { return step_; }
  const ParticleEnsemble& last_valid() const { return last_valid_; }

private:
  std::size_t step_;
  ParticleEnsemble last_valid_;
};

//! Bandwidth used for one direction given the current projections.
double resolve_bandwidth(const SamplerConfig& config, std::span<const double> projections);

//! Scalar velocities v^i along `theta` for the configured RW backend.
std::vector<double> directional_velocity(const ParticleEnsemble& ensemble,
                                         const Target& target,
                                         const SamplerConfig& config,
                                         std::span<const double> theta);

//! One forward-Euler step x <- x - tau_eff theta v along a fresh direction.
void rw_step(ParticleEnsemble& ensemble,
             const Target& target,
             const SamplerConfig& config,
             DirectionStream& stream,
             std::size_t step_index);

//! Deterministic step with the sphere average replaced by a midpoint rule
//! over `num_angles` directions of the half circle (d = 2 only).
void rw_step_sphere_average(ParticleEnsemble& ensemble,
                            const Target& target,
                            const SamplerConfig& config,
                            double step_size,
                            std::size_t num_angles);

//! Squared SVGD kernel width b^2 for kappa(x, y) = exp(-|x - y|^2 / b^2).
double svgd_bandwidth_squared(const ParticleEnsemble& ensemble, const SamplerConfig& config);

//! x^i <- x^i + tau/n sum_j [kappa(x^j, x^i) S(x^j) + grad_{x^j} kappa(x^j, x^i)]
void svgd_step(ParticleEnsemble& ensemble,
               const Target& target,
               const SamplerConfig& config,
               std::size_t step_index);

struct RunResult
{
  RunRecord record;
  ParticleEnsemble final_state;
};

//! Runs config.steps steps, recording the configured metrics every
//! record_every steps. `reference` feeds the w2_ref metric.
RunResult run(const Target& target,
              const SamplerConfig& config,
              ParticleEnsemble initial,
              const ParticleEnsemble* reference = nullptr);

//! Evaluates a named metric on the ensemble.
double evaluate_metric(std::string_view metric,
                       const ParticleEnsemble& ensemble,
                       const Target& target,
                       const ParticleEnsemble* reference = nullptr);

} // namespace rwflow
