#include "rwflow/continuum1d.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace rwflow;

namespace {

double grid_mean(const DensityGrid& g)
{
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    m += g.center(i) * g.values[i] * g.spacing;
  return m;
}

double sup(const std::vector<double>& v)
{
  double s = 0.0;
  for (double x : v)
    s = std::max(s, std::abs(x));
  return s;
}

} // namespace

TEST_CASE("density grids")
{
  const DensityGrid g = gaussian_density_grid(0.5, 1.0, -8.0, 8.0, 0.02);
  CHECK(g.size() == 800);
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.center(0) == doctest::Approx(-7.99));
  CHECK_THROWS(gaussian_density_grid(0.0, 0.0, -8.0, 8.0, 0.02));
  CHECK_THROWS(target_density_grid(gaussian_target(2), -8.0, 8.0, 0.02));
}

TEST_CASE("KL divergence on the grid")
{
  const Target t = gaussian_target(1);
  const DensityGrid pi = target_density_grid(t, -8.0, 8.0, 0.02);
  CHECK(std::abs(kl_divergence_grid(pi, t)) < 1e-10);
  const DensityGrid rho = gaussian_density_grid(0.5, 1.0, -8.0, 8.0, 0.02);
  CHECK(kl_divergence_grid(rho, t) == doctest::Approx(0.125).epsilon(1e-6));
  for (double mu : { -2.0, 0.1, 1.0 })
    for (double sd : { 0.3, 1.0, 1.7 })
      CHECK(kl_divergence_grid(gaussian_density_grid(mu, sd, -8.0, 8.0, 0.02), t) >= 0.0);
}

TEST_CASE("the target is stationary")
{
  const Target t = gaussian_target(1);
  const Kernel1D k = gaussian_kernel(0.3);
  for (double h : { 0.02, 0.01 }) {
    const DensityGrid pi = target_density_grid(t, -8.0, 8.0, h);
    const auto f = rrw_continuum_fields(pi, k, 1e-3, t);
    CHECK(std::abs(f.dissipation) < 1e-8);
    CHECK(sup(f.velocity) <= 1e-5);

    DensityGrid moved = pi;
    upwind_step(moved, f.velocity, 0.005);
    double change = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i)
      change = std::max(change, std::abs(moved.values[i] - pi.values[i]));
    CHECK(change < 1e-6);
  }
}

TEST_CASE("zero velocity leaves the density unchanged")
{
  DensityGrid g = gaussian_density_grid(1.0, 0.7, -8.0, 8.0, 0.02);
  const auto before = g.values;
  upwind_step(g, std::vector<double>(g.size(), 0.0), 0.01);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(g.values[i] - before[i]) < 1e-10);
  CHECK(g.time == doctest::Approx(0.01));
}

TEST_CASE("symmetric density gives an odd velocity and nonnegative dissipation")
{
  const Target t = gaussian_target(1);
  const Kernel1D k = gaussian_kernel(0.3);
  const DensityGrid g = gaussian_density_grid(0.0, 1.8, -8.0, 8.0, 0.02);
  const auto f = rrw_continuum_fields(g, k, 1e-3, t);
  const std::size_t n = g.size();
  const double scale = sup(f.velocity);
  for (std::size_t i = 0; i < n / 2; ++i)
    CHECK(std::abs(f.velocity[i] + f.velocity[n - 1 - i]) < 1e-10 * scale);
  CHECK(f.dissipation > 0.0);
  CHECK(dissipation_rate(g, k, 1e-3, t) == f.dissipation);
  CHECK(rrw_velocity_continuum_1d(g, k, 1e-3, t) == f.velocity);
}

TEST_CASE("CFL violations are rejected")
{
  DensityGrid g = gaussian_density_grid(0.0, 1.0, -8.0, 8.0, 0.02);
  CHECK_THROWS_AS(upwind_step(g, std::vector<double>(g.size(), 10.0), 0.01), std::runtime_error);
  CHECK_THROWS_AS(upwind_step(g, std::vector<double>(3, 0.0), 0.01), std::invalid_argument);
}

TEST_CASE("evolution conserves mass and moves the mean toward zero")
{
  const Target t = gaussian_target(1);
  const Kernel1D k = gaussian_kernel(0.3);
  std::vector<double> means;
  std::size_t calls = 0;
  const DensityGrid out = evolve_continuum(
    gaussian_density_grid(0.5, 1.0, -8.0, 8.0, 0.02), k, 1e-3, t, 0.005, 10000,
    [&](const DensityGrid& g, double d) {
      CHECK(d >= 0.0);
      if (++calls % 100 == 0)
        means.push_back(grid_mean(g));
    });
  CHECK(calls == 10000);
  CHECK(std::abs(out.mass() - 1.0) < 1e-8);
  for (double v : out.values)
    CHECK(v >= -1e-12);
  // Past the first recorded samples the mean decreases monotonically.
  for (std::size_t i = 2; i < means.size(); ++i)
    CHECK(means[i] <= means[i - 1] + 1e-12);
  CHECK(std::abs(means.back()) < 0.1 * 0.5);
}

TEST_CASE("entropy trace")
{
  const Target t = gaussian_target(1);
  DensityGrid g = gaussian_density_grid(0.5, 1.0, -8.0, 8.0, 0.02);
  const auto rows = trace_entropy_balance(g, gaussian_kernel(0.3), 1e-3, t, 0.005, 205, 50);
  REQUIRE(rows.size() == 6);
  CHECK(rows.front().t == 0.0);
  CHECK(rows.front().balance_residual == 0.0);
  CHECK(rows.back().t == doctest::Approx(205 * 0.005));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].t > rows[i - 1].t);
    CHECK(rows[i].kl <= rows[i - 1].kl + std::abs(rows[i].balance_residual));
  }
  CHECK_THROWS(trace_entropy_balance(g, gaussian_kernel(0.3), 1e-3, t, 0.005, 10, 0));
}

TEST_CASE("quantiles and W2 against the target")
{
  const Target t = gaussian_target(1);
  const DensityGrid pi = target_density_grid(t, -8.0, 8.0, 0.02);
  const auto q = density_quantiles(pi, 2048);
  CHECK(std::is_sorted(q.begin(), q.end()));
  CHECK(q[1024] == doctest::Approx(-q[1023]).epsilon(1e-6));
  CHECK(w2_to_target_1d(pi, t) < 1e-12);
  // Shifted copy: W2 between N(0.5, 1) and N(0, 1) is 0.5.
  CHECK(w2_to_target_1d(gaussian_density_grid(0.5, 1.0, -8.0, 8.0, 0.02), t) == doctest::Approx(0.5).epsilon(1e-2));
}
