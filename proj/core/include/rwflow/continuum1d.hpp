#pragma once

#include "rwflow/kernels.hpp"
#include "rwflow/targets.hpp"

#include <functional>
#include <vector>

namespace rwflow {

//! Cell-centred density on [lo, hi]: cell i has centre lo + (i + 1/2) h and
//! carries mass values[i] * h.
struct DensityGrid
{
  double lo = -8.0;
  double hi = 8.0;
  double spacing = 0.02;
  std::vector<double> values;
  double time = 0.0;

  std::size_t size() const { return values.size(); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * spacing; }
  double mass() const;
};

//! Normal(mean, sd^2) density sampled at the cell centres and renormalized
//! to unit discrete mass.
DensityGrid gaussian_density_grid(double mean, double sd, double lo, double hi, double spacing);

//! exp(-U) / Z on the grid with Z from the same quadrature.
DensityGrid target_density_grid(const Target& target, double lo, double hi, double spacing);

struct ContinuumOptions
{
  //! Kernel truncation radius in bandwidths.
  double cutoff = 8.0;
  double max_cfl = 0.9;
};

struct ContinuumFields
{
  std::vector<double> velocity; //!< v at the cell centres
  double dissipation = 0.0;     //!< int |k'*rho + k*(rho U')|^2 / (k*rho + eps)
};

//! RRW velocity v = -k * ((k'*rho + k*(rho U')) / (k*rho + eps)) in one
//! dimension, together with the entropy dissipation of the same fields.
ContinuumFields rrw_continuum_fields(const DensityGrid& grid,
                                     const Kernel1D& kernel,
                                     double epsilon,
                                     const Target& target,
                                     const ContinuumOptions& options = {});

std::vector<double> rrw_velocity_continuum_1d(const DensityGrid& grid,
                                              const Kernel1D& kernel,
                                              double epsilon,
                                              const Target& target,
                                              const ContinuumOptions& options = {});

double dissipation_rate(const DensityGrid& grid,
                        const Kernel1D& kernel,
                        double epsilon,
                        const Target& target,
                        const ContinuumOptions& options = {});

//! sum_i rho_i log(rho_i / pi_i) h over cells with rho_i > 0.
double kl_divergence_grid(const DensityGrid& grid, const Target& target);

//! One conservative upwind step with zero-flux walls. Throws when
//! tau max|v| / h exceeds options.max_cfl.
void upwind_step(DensityGrid& grid, const std::vector<double>& velocity, double tau, const ContinuumOptions& options = {});

//! Called after every step with the new grid and its dissipation.
using ContinuumObserver = std::function<void(const DensityGrid&, double dissipation)>;

DensityGrid evolve_continuum(DensityGrid grid,
                             const Kernel1D& kernel,
                             double epsilon,
                             const Target& target,
                             double tau,
                             std::size_t steps,
                             const ContinuumObserver& observer = {},
                             const ContinuumOptions& options = {});

struct ContinuumTraceRow
{
  double t = 0.0;
  double kl = 0.0;
  double dissipation = 0.0;
  double balance_residual = 0.0; //!< KL(t) - KL(0) + int_0^t D (trapezoid)
  double mass = 0.0;
};

inline constexpr const char* kContinuumHeader = "t,kl,dissipation,balance_residual,mass";

//! Evolves the grid, tracking the entropy balance every `record_every` steps
//! (the initial state is always recorded).
std::vector<ContinuumTraceRow> trace_entropy_balance(DensityGrid& grid,
                                                     const Kernel1D& kernel,
                                                     double epsilon,
                                                     const Target& target,
                                                     double tau,
                                                     std::size_t steps,
                                                     std::size_t record_every,
                                                     const ContinuumOptions& options = {});

//! Equally weighted quantile points u_k = (k + 1/2)/m of the grid density
//! (piecewise-constant inverse CDF).
std::vector<double> density_quantiles(const DensityGrid& grid, std::size_t m);

//! W2 between the grid density and the target via matched quantiles.
double w2_to_target_1d(const DensityGrid& grid, const Target& target, std::size_t num_quantiles = 2048);

} // namespace rwflow
