#include "rwflow/continuum1d.hpp"

#include "convolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwflow {

double DensityGrid::mass() const
{
  double m = 0.0;
  for (double v : values)
    m += v;
  return m * spacing;
}

namespace {

DensityGrid empty_grid(double lo, double hi, double spacing)
{
  if (!(spacing > 0.0) || !(hi > lo))
    throw std::invalid_argument("density grid needs hi > lo and positive spacing");
  DensityGrid g;
  g.lo = lo;
  g.hi = hi;
  g.spacing = spacing;
  g.values.assign(static_cast<std::size_t>(std::llround((hi - lo) / spacing)), 0.0);
  return g;
}

void normalize(DensityGrid& g)
{
  const double m = g.mass();
  if (!(m > 0.0))
    throw std::invalid_argument("density has no mass on the grid");
  for (double& v : g.values)
    v /= m;
}

void require_1d(const Target& target)
{
  if (target.dim() != 1)
    throw std::invalid_argument("continuum solver needs a one-dimensional target");
}

} // namespace

DensityGrid gaussian_density_grid(double mean, double sd, double lo, double hi, double spacing)
{
  if (!(sd > 0.0))
    throw std::invalid_argument("standard deviation must be positive");
  DensityGrid g = empty_grid(lo, hi, spacing);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double z = (g.center(i) - mean) / sd;
    g.values[i] = std::exp(-0.5 * z * z);
  }
  normalize(g);
  return g;
}

DensityGrid target_density_grid(const Target& target, double lo, double hi, double spacing)
{
  require_1d(target);
  DensityGrid g = empty_grid(lo, hi, spacing);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.center(i);
    g.values[i] = std::exp(-target.potential({ &x, 1 }));
  }
  normalize(g);
  return g;
}

ContinuumFields rrw_continuum_fields(const DensityGrid& grid,
                                     const Kernel1D& kernel,
                                     double epsilon,
                                     const Target& target,
                                     const ContinuumOptions& options)
{
  require_1d(target);
  if (!(epsilon > 0.0))
    throw std::invalid_argument("continuum velocity needs epsilon > 0");
  const std::size_t n = grid.size();
  const double h = grid.spacing;
  const double cutoff = options.cutoff * kernel.bandwidth();
  // Two nested convolutions: pad by 2R on each side.
  const auto pad = static_cast<std::size_t>(std::ceil(2.0 * cutoff / h)) + 1;
  const std::size_t ext = n + 2 * pad;

  std::vector<double> rho(ext, 0.0), rho_du(ext, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.center(i);
    double s = 0.0;
    target.score({ &x, 1 }, { &s, 1 });
    rho[pad + i] = grid.values[i];
    rho_du[pad + i] = -grid.values[i] * s;
  }

  detail::GridConvolver conv(ext, h, kernel, cutoff);
  std::vector<double> krho(ext), dkrho(ext), kdu(ext);
  conv.smooth_with_derivative(rho, krho, dkrho, h);
  conv.smooth(rho_du, kdu, h);

  ContinuumFields out;
  std::vector<double> ratio(ext);
  double diss = 0.0;
  for (std::size_t l = 0; l < ext; ++l) {
    const double num = dkrho[l] + kdu[l];
    const double den = std::max(krho[l], 0.0) + epsilon;
    ratio[l] = num / den;
    diss += num * num / den;
  }
  out.dissipation = diss * h;

  std::vector<double> smoothed(ext);
  conv.smooth(ratio, smoothed, h);
  out.velocity.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.velocity[i] = -smoothed[pad + i];
  return out;
}

std::vector<double> rrw_velocity_continuum_1d(const DensityGrid& grid,
                                              const Kernel1D& kernel,
                                              double epsilon,
                                              const Target& target,
                                              const ContinuumOptions& options)
{
  return rrw_continuum_fields(grid, kernel, epsilon, target, options).velocity;
}

double dissipation_rate(const DensityGrid& grid,
                        const Kernel1D& kernel,
                        double epsilon,
                        const Target& target,
                        const ContinuumOptions& options)
{
  return rrw_continuum_fields(grid, kernel, epsilon, target, options).dissipation;
}

double kl_divergence_grid(const DensityGrid& grid, const Target& target)
{
  const DensityGrid pi = target_density_grid(target, grid.lo, grid.hi, grid.spacing);
  double kl = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.values[i];
    if (r > 0.0)
      kl += r * std::log(r / pi.values[i]);
  }
  return kl * grid.spacing;
}

void upwind_step(DensityGrid& grid,
                 const std::vector<double>& velocity,
                 double tau,
                 const ContinuumOptions& options)
{
  const std::size_t n = grid.size();
  if (velocity.size() != n)
    throw std::invalid_argument("velocity grid does not match density grid");
  double vmax = 0.0;
  for (double v : velocity)
    vmax = std::max(vmax, std::abs(v));
  const double cfl = tau * vmax / grid.spacing;
  if (cfl > options.max_cfl)
    throw std::runtime_error("CFL number " + std::to_string(cfl) + " exceeds " +
                             std::to_string(options.max_cfl) + "; use a smaller time step");

  // flux[i] sits on the face between cells i-1 and i; the walls carry none.
  std::vector<double> flux(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double v = 0.5 * (velocity[i - 1] + velocity[i]);
    flux[i] = v > 0.0 ? v * grid.values[i - 1] : v * grid.values[i];
  }
  const double r = tau / grid.spacing;
  for (std::size_t i = 0; i < n; ++i)
    grid.values[i] -= r * (flux[i + 1] - flux[i]);
  grid.time += tau;
}

DensityGrid evolve_continuum(DensityGrid grid,
                             const Kernel1D& kernel,
                             double epsilon,
                             const Target& target,
                             double tau,
                             std::size_t steps,
                             const ContinuumObserver& observer,
                             const ContinuumOptions& options)
{
  if (!(tau > 0.0))
    throw std::invalid_argument("time step must be positive");
  for (std::size_t m = 0; m < steps; ++m) {
    const ContinuumFields f = rrw_continuum_fields(grid, kernel, epsilon, target, options);
    upwind_step(grid, f.velocity, tau, options);
    if (observer)
      observer(grid, dissipation_rate(grid, kernel, epsilon, target, options));
  }
  return grid;
}

std::vector<ContinuumTraceRow> trace_entropy_balance(DensityGrid& grid,
                                                     const Kernel1D& kernel,
                                                     double epsilon,
                                                     const Target& target,
                                                     double tau,
                                                     std::size_t steps,
                                                     std::size_t record_every,
                                                     const ContinuumOptions& options)
{
  if (record_every == 0)
    throw std::invalid_argument("record_every must be positive");
  std::vector<ContinuumTraceRow> rows;
  const double kl0 = kl_divergence_grid(grid, target);
  ContinuumFields f = rrw_continuum_fields(grid, kernel, epsilon, target, options);
  rows.push_back({ grid.time, kl0, f.dissipation, 0.0, grid.mass() });
  double integral = 0.0;
  for (std::size_t m = 0; m < steps; ++m) {
    const double d_prev = f.dissipation;
    upwind_step(grid, f.velocity, tau, options);
    f = rrw_continuum_fields(grid, kernel, epsilon, target, options);
    integral += 0.5 * tau * (d_prev + f.dissipation);
    if ((m + 1) % record_every == 0 || m + 1 == steps) {
      const double kl = kl_divergence_grid(grid, target);
      rows.push_back({ grid.time, kl, f.dissipation, kl - kl0 + integral, grid.mass() });
    }
  }
  return rows;
}

std::vector<double> density_quantiles(const DensityGrid& grid, std::size_t m)
{
  const std::size_t n = grid.size();
  const double h = grid.spacing;
  std::vector<double> cdf(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    cdf[i + 1] = cdf[i] + std::max(grid.values[i], 0.0) * h;
  const double total = cdf.back();
  std::vector<double> q(m);
  std::size_t cell = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(m) * total;
    while (cell + 1 < n && cdf[cell + 1] < u)
      ++cell;
    const double w = cdf[cell + 1] - cdf[cell];
    const double frac = w > 0.0 ? (u - cdf[cell]) / w : 0.5;
    q[k] = grid.lo + (static_cast<double>(cell) + std::clamp(frac, 0.0, 1.0)) * h;
  }
  return q;
}

double w2_to_target_1d(const DensityGrid& grid, const Target& target, std::size_t num_quantiles)
{
  const DensityGrid pi = target_density_grid(target, grid.lo, grid.hi, grid.spacing);
  const auto a = density_quantiles(grid, num_quantiles);
  const auto b = density_quantiles(pi, num_quantiles);
  double acc = 0.0;
  for (std::size_t k = 0; k < num_quantiles; ++k)
    acc += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(acc / static_cast<double>(num_quantiles));
}

} // namespace rwflow
