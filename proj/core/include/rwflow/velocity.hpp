#pragma once

#include "rwflow/kernels.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rwflow {

//! Particles projected onto one direction theta: p^i = x^i . theta and
//! s^i = theta . S(x^i), plus the density floor epsilon (entering as n eps).
struct ProjectedState
{
  std::span<const double> projections;
  std::span<const double> scores;
  double epsilon = 0.0;

  std::size_t size() const { return projections.size(); }
  void validate() const;
};

//! Uniform grid z_l = origin + l * spacing, l = 0..G-1, G = ceil((c - a)/h) + 1.
struct Grid1D
{
  double origin = 0.0;
  double right = 0.0;
  double spacing = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double node(std::size_t l) const { return origin + static_cast<double>(l) * spacing; }
};

Grid1D make_grid(double origin, double right, double spacing);

//! Truncation cutoff L (R = L b), points per bandwidth M (h = b / M), and a
//! hard cap on the number of grid nodes.
struct FftParams
{
  double cutoff = 5.0;
  int points_per_bandwidth = 8;
  std::size_t max_grid = std::size_t{ 1 } << 20;

  void validate() const;
};

//! Raised when an FFT backend would need more than FftParams::max_grid nodes.
class GridTooLarge : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class VelocityBackend { Kdrw, KdrwFft, Rrw, RrwFft, KdrwLaplace };

VelocityBackend parse_backend(std::string_view name);
std::string_view backend_name(VelocityBackend backend);
FlowKind flow_of(VelocityBackend backend);

//! v^i = (sum_j k'(p^i - p^j) - sum_j k(p^i - p^j) s^j) / (sum_j k(p^i - p^j) + n eps)
std::vector<double> kdrw_velocity_direct(const ProjectedState& state, const Kernel1D& kernel);

//! Kernel-average approximation of k * v~: v^i = sum_j k_ij v~^j / sum_j k_ij.
std::vector<double> rrw_velocity_direct(const ProjectedState& state, const Kernel1D& kernel);

//! Cloud-in-cell deposit of `weights` at `points` onto `grid` (accumulating).
//! Points must lie in [origin, right - spacing].
void deposit_linear(std::span<const double> points, std::span<const double> weights, Grid1D& grid);

//! Linear interpolation of grid values at `points` with the deposit weights.
std::vector<double> interpolate_linear(const Grid1D& grid, std::span<const double> points);

//! Quadrature of the continuous convolution, h * sum_m k(z_l - z_m) f_m,
//! with the kernel truncated at R = L b. With `differentiate` the spectral
//! derivative of that field (i.e. k' * f) is returned instead. The caller
//! provides at least R of zero padding around the support of the data.
Grid1D fft_convolve_grid(const Grid1D& grid,
                         const Kernel1D& kernel,
                         const FftParams& params,
                         bool differentiate);

std::vector<double> kdrw_velocity_fft(const ProjectedState& state,
                                      const Kernel1D& kernel,
                                      const FftParams& params);

std::vector<double> rrw_velocity_fft(const ProjectedState& state,
                                     const Kernel1D& kernel,
                                     const FftParams& params);

//! For nondecreasing points returns sum_i w^i exp(-|p^j - p^i| / b) for every j
//! using the left/right exponential recurrences (O(n)).
std::vector<double> laplace_convolve_sorted(std::span<const double> points,
                                            std::span<const double> weights,
                                            double bandwidth);

//! KDRW velocity for the unit-mass Laplace kernel in O(n log n).
std::vector<double> kdrw_velocity_laplace(const ProjectedState& state, double bandwidth);

//! Dispatches on `backend`; the Laplace backend uses kernel.bandwidth().
std::vector<double> compute_velocity(VelocityBackend backend,
                                     const ProjectedState& state,
                                     const Kernel1D& kernel,
                                     const FftParams& params);

} // namespace rwflow
