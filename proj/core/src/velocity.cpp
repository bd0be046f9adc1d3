#include "rwflow/velocity.hpp"

#include "convolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rwflow {

void ProjectedState::validate() const
{
  if (projections.empty())
    throw std::invalid_argument("projected state needs at least one particle");
  if (projections.size() != scores.size())
    throw std::invalid_argument("projections and scores differ in length");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and nonnegative");
}

void FftParams::validate() const
{
  if (!(cutoff > 0.0) || points_per_bandwidth < 1 || max_grid < 16)
    throw std::invalid_argument("invalid FFT parameters (need L > 0, M >= 1, G_max >= 16)");
}

Grid1D make_grid(double origin, double right, double spacing)
{
  if (!(spacing > 0.0) || !(right >= origin))
    throw std::invalid_argument("grid needs positive spacing and right >= origin");
  Grid1D g;
  g.origin = origin;
  g.right = right;
  g.spacing = spacing;
  const auto cells = static_cast<std::size_t>(std::ceil((right - origin) / spacing));
  g.values.assign(cells + 1, 0.0);
  return g;
}

VelocityBackend parse_backend(std::string_view name)
{
  if (name == "kdrw")
    return VelocityBackend::Kdrw;
  if (name == "kdrw_fft")
    return VelocityBackend::KdrwFft;
  if (name == "rrw")
    return VelocityBackend::Rrw;
  if (name == "rrw_fft")
    return VelocityBackend::RrwFft;
  if (name == "kdrw_laplace")
    return VelocityBackend::KdrwLaplace;
  throw std::invalid_argument("unknown velocity backend '" + std::string(name) + "'");
}

std::string_view backend_name(VelocityBackend backend)
{
  switch (backend) {
    case VelocityBackend::Kdrw:
      return "kdrw";
    case VelocityBackend::KdrwFft:
      return "kdrw_fft";
    case VelocityBackend::Rrw:
      return "rrw";
    case VelocityBackend::RrwFft:
      return "rrw_fft";
    case VelocityBackend::KdrwLaplace:
      return "kdrw_laplace";
  }
  return "unknown";
}

FlowKind flow_of(VelocityBackend backend)
{
  return backend == VelocityBackend::Rrw || backend == VelocityBackend::RrwFft ? FlowKind::RRW
                                                                                : FlowKind::KDRW;
}

namespace {

double checked_denominator(double value)
{
  if (!(value > 0.0))
    throw std::domain_error("velocity denominator is not positive (epsilon = 0 and empty kernel row?)");
  return value;
}

// v~ at the particles; optionally also returns the kernel row sums.
std::vector<double> kdrw_direct_impl(const ProjectedState& state,
                                     const Kernel1D& kernel,
                                     std::vector<double>* row_sums)
{
  state.validate();
  const std::size_t n = state.size();
  const double floor = static_cast<double>(n) * state.epsilon;
  const auto p = state.projections;
  const auto s = state.scores;
  std::vector<double> v(n);
  if (row_sums)
    row_sums->assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double kappa = 0.0, dkappa = 0.0, ks = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = p[i] - p[j];
      const double k = kernel.eval(diff);
      kappa += k;
      dkappa += kernel.deriv(diff);
      ks += k * s[j];
    }
    v[i] = (dkappa - ks) / checked_denominator(kappa + floor);
    if (row_sums)
      (*row_sums)[i] = kappa;
  }
  return v;
}

struct CicStencil
{
  std::vector<std::size_t> left;
  std::vector<double> w1;
};

CicStencil cic_stencil(const Grid1D& grid, std::span<const double> points)
{
  const std::size_t g = grid.size();
  if (g < 2)
    throw std::invalid_argument("grid needs at least two nodes");
  const double last = grid.right - grid.spacing;
  CicStencil st;
  st.left.resize(points.size());
  st.w1.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double p = points[i];
    if (!(p >= grid.origin && p <= last))
      throw std::out_of_range("point outside the deposit range of the grid");
    const double t = (p - grid.origin) / grid.spacing;
    auto l = static_cast<std::size_t>(std::floor(t));
    if (l > g - 2)
      l = g - 2;
    double w1 = t - static_cast<double>(l);
    st.left[i] = l;
    st.w1[i] = std::clamp(w1, 0.0, 1.0);
  }
  return st;
}

void deposit(const CicStencil& st, std::span<const double> weights, std::vector<double>& values)
{
  for (std::size_t i = 0; i < st.left.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    values[st.left[i]] += (1.0 - st.w1[i]) * w;
    values[st.left[i] + 1] += st.w1[i] * w;
  }
}

double interpolate(const CicStencil& st, std::size_t i, const std::vector<double>& values)
{
  return (1.0 - st.w1[i]) * values[st.left[i]] + st.w1[i] * values[st.left[i] + 1];
}

struct ParticleGrid
{
  Grid1D grid;
  CicStencil stencil;
};

// Grid over [min p - pad, max p + pad] with spacing b / M.
ParticleGrid particle_grid(std::span<const double> p,
                           const Kernel1D& kernel,
                           const FftParams& params,
                           double pad)
{
  params.validate();
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  const double h = kernel.bandwidth() / params.points_per_bandwidth;
  const double a = *lo - pad;
  const double c = *hi + pad;
  const double nodes = std::ceil((c - a) / h) + 1.0;
  if (!std::isfinite(nodes) || nodes > static_cast<double>(params.max_grid))
    throw GridTooLarge("FFT grid would need " + std::to_string(nodes) + " nodes (G_max = " +
                       std::to_string(params.max_grid) +
                       "); increase the bandwidth or the grid cap");
  ParticleGrid pg{ make_grid(a, c, h), {} };
  pg.stencil = cic_stencil(pg.grid, p);
  return pg;
}

struct LaplaceSums
{
  std::vector<double> full;
  std::vector<double> left;  // strictly smaller points
  std::vector<double> right; // strictly larger points
};

// Exponential left/right recurrences over sorted points; ties are merged so
// that coincident points see each other only through the full sum.
LaplaceSums laplace_sums_sorted(std::span<const double> p,
                                std::span<const double> w,
                                double bandwidth)
{
  const std::size_t n = p.size();
  LaplaceSums out;
  out.full.resize(n);
  out.left.resize(n);
  out.right.resize(n);

  std::vector<std::size_t> group_start;
  std::vector<double> group_weight;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0 || p[j] != p[j - 1]) {
      group_start.push_back(j);
      group_weight.push_back(0.0);
    }
    group_weight.back() += w[j];
  }
  const std::size_t groups = group_start.size();
  std::vector<double> lsum(groups), rsum(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    lsum[g] = group_weight[g];
    if (g > 0) {
      const double decay = std::exp(-(p[group_start[g]] - p[group_start[g - 1]]) / bandwidth);
      lsum[g] += decay * lsum[g - 1];
    }
  }
  for (std::size_t g = groups; g-- > 0;) {
    rsum[g] = group_weight[g];
    if (g + 1 < groups) {
      const double decay = std::exp(-(p[group_start[g + 1]] - p[group_start[g]]) / bandwidth);
      rsum[g] += decay * rsum[g + 1];
    }
  }
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t end = g + 1 < groups ? group_start[g + 1] : n;
    for (std::size_t j = group_start[g]; j < end; ++j) {
      out.full[j] = lsum[g] + rsum[g] - group_weight[g];
      out.left[j] = lsum[g] - group_weight[g];
      out.right[j] = rsum[g] - group_weight[g];
    }
  }
  return out;
}

} // namespace

std::vector<double> kdrw_velocity_direct(const ProjectedState& state, const Kernel1D& kernel)
{
  return kdrw_direct_impl(state, kernel, nullptr);
}

std::vector<double> rrw_velocity_direct(const ProjectedState& state, const Kernel1D& kernel)
{
  std::vector<double> kappa;
  const std::vector<double> vtilde = kdrw_direct_impl(state, kernel, &kappa);
  const std::size_t n = state.size();
  const auto p = state.projections;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += kernel.eval(p[i] - p[j]) * vtilde[j];
    if (!(kappa[i] > 0.0))
      throw std::domain_error("kernel row sum vanished in RRW kernel average");
    v[i] = acc / kappa[i];
  }
  return v;
}

void deposit_linear(std::span<const double> points, std::span<const double> weights, Grid1D& grid)
{
  if (points.size() != weights.size())
    throw std::invalid_argument("points and weights differ in length");
  const CicStencil st = cic_stencil(grid, points);
  deposit(st, weights, grid.values);
}

std::vector<double> interpolate_linear(const Grid1D& grid, std::span<const double> points)
{
  const CicStencil st = cic_stencil(grid, points);
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out[i] = interpolate(st, i, grid.values);
  return out;
}

Grid1D fft_convolve_grid(const Grid1D& grid,
                         const Kernel1D& kernel,
                         const FftParams& params,
                         bool differentiate)
{
  params.validate();
  if (grid.size() > params.max_grid)
    throw GridTooLarge("grid exceeds G_max; increase the bandwidth or the grid cap");
  detail::GridConvolver conv(grid.size(), grid.spacing, kernel, params.cutoff * kernel.bandwidth());
  Grid1D out = grid;
  if (differentiate) {
    std::vector<double> smooth(grid.size());
    conv.smooth_with_derivative(grid.values, smooth, out.values, grid.spacing);
  } else {
    conv.smooth(grid.values, out.values, grid.spacing);
  }
  return out;
}

std::vector<double> kdrw_velocity_fft(const ProjectedState& state,
                                      const Kernel1D& kernel,
                                      const FftParams& params)
{
  state.validate();
  if (!(state.epsilon > 0.0))
    throw std::invalid_argument("FFT backends require epsilon > 0");
  const double cutoff = params.cutoff * kernel.bandwidth();
  ParticleGrid pg = particle_grid(state.projections, kernel, params, cutoff);
  const std::size_t g = pg.grid.size();

  std::vector<double> rho(g, 0.0), sigma(g, 0.0);
  deposit(pg.stencil, {}, rho);
  deposit(pg.stencil, state.scores, sigma);

  detail::GridConvolver conv(g, pg.grid.spacing, kernel, cutoff);
  std::vector<double> krho(g), dkrho(g), ksigma(g);
  conv.smooth_with_derivative(rho, krho, dkrho, 1.0);
  conv.smooth(sigma, ksigma, 1.0);

  const std::size_t n = state.size();
  const double floor = static_cast<double>(n) * state.epsilon;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double kappa = interpolate(pg.stencil, i, krho);
    const double dkappa = interpolate(pg.stencil, i, dkrho);
    const double ks = interpolate(pg.stencil, i, ksigma);
    v[i] = (dkappa - ks) / checked_denominator(kappa + floor);
  }
  return v;
}

std::vector<double> rrw_velocity_fft(const ProjectedState& state,
                                     const Kernel1D& kernel,
                                     const FftParams& params)
{
  state.validate();
  if (!(state.epsilon > 0.0))
    throw std::invalid_argument("FFT backends require epsilon > 0");
  const double cutoff = params.cutoff * kernel.bandwidth();
  ParticleGrid pg = particle_grid(state.projections, kernel, params, 2.0 * cutoff);
  const std::size_t g = pg.grid.size();

  std::vector<double> rho(g, 0.0), sigma(g, 0.0);
  deposit(pg.stencil, {}, rho);
  deposit(pg.stencil, state.scores, sigma);

  detail::GridConvolver conv(g, pg.grid.spacing, kernel, cutoff);
  std::vector<double> krho(g), dkrho(g), ksigma(g);
  conv.smooth_with_derivative(rho, krho, dkrho, 1.0);
  conv.smooth(sigma, ksigma, 1.0);

  const double floor = static_cast<double>(state.size()) * state.epsilon;
  std::vector<double> vtilde(g);
  for (std::size_t l = 0; l < g; ++l)
    vtilde[l] = (dkrho[l] - ksigma[l]) / checked_denominator(krho[l] + floor);

  std::vector<double> vgrid(g);
  conv.smooth(vtilde, vgrid, pg.grid.spacing);

  std::vector<double> v(state.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = interpolate(pg.stencil, i, vgrid);
  return v;
}

std::vector<double> laplace_convolve_sorted(std::span<const double> points,
                                            std::span<const double> weights,
                                            double bandwidth)
{
  if (points.size() != weights.size())
    throw std::invalid_argument("points and weights differ in length");
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  if (!std::is_sorted(points.begin(), points.end()))
    throw std::invalid_argument("laplace_convolve_sorted needs nondecreasing points");
  return laplace_sums_sorted(points, weights, bandwidth).full;
}

std::vector<double> kdrw_velocity_laplace(const ProjectedState& state, double bandwidth)
{
  state.validate();
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  const std::size_t n = state.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.projections[a] < state.projections[b];
  });
  std::vector<double> p(n), s(n), ones(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = state.projections[order[j]];
    s[j] = state.scores[order[j]];
  }
  const LaplaceSums mass = laplace_sums_sorted(p, ones, bandwidth);
  const LaplaceSums score = laplace_sums_sorted(p, s, bandwidth);

  // unit-mass kernel k(p) = exp(-|p|/b) / (2b), k'(p) = -sign(p) k(p) / b
  const double norm = 1.0 / (2.0 * bandwidth);
  const double floor = static_cast<double>(n) * state.epsilon;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double kappa = norm * mass.full[j];
    const double dkappa = norm * (mass.right[j] - mass.left[j]) / bandwidth;
    const double ks = norm * score.full[j];
    v[order[j]] = (dkappa - ks) / checked_denominator(kappa + floor);
  }
  return v;
}

std::vector<double> compute_velocity(VelocityBackend backend,
                                     const ProjectedState& state,
                                     const Kernel1D& kernel,
                                     const FftParams& params)
{
  switch (backend) {
    case VelocityBackend::Kdrw:
      return kdrw_velocity_direct(state, kernel);
    case VelocityBackend::KdrwFft:
      return kdrw_velocity_fft(state, kernel, params);
    case VelocityBackend::Rrw:
      return rrw_velocity_direct(state, kernel);
    case VelocityBackend::RrwFft:
      return rrw_velocity_fft(state, kernel, params);
    case VelocityBackend::KdrwLaplace:
      return kdrw_velocity_laplace(state, kernel.bandwidth());
  }
  throw std::invalid_argument("unknown velocity backend");
}

} // namespace rwflow
