#include "rwflow/targets.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace rwflow;

namespace {

std::vector<double> central_difference_score(const Target& t, std::vector<double> x, double h)
{
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = t.potential(x);
    x[k] = x0 - h;
    const double dn = t.potential(x);
    x[k] = x0;
    g[k] = -(up - dn) / (2 * h);
  }
  return g;
}

std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t d, double scale = 1.0)
{
  std::normal_distribution<double> n;
  std::vector<double> x(d);
  for (auto& v : x)
    v = scale * n(rng);
  return x;
}

double density_identity(const Target& t, const std::vector<double>& z)
{
  std::vector<double> x(z.size());
  t.forward(z, x);
  double zz = 0.0;
  for (double v : z)
    zz += v * v;
  return t.potential(x) - 0.5 * zz - t.log_det_jacobian();
}

} // namespace

TEST_CASE("gaussian target values")
{
  const Target t1 = gaussian_target(1);
  const double zero = 0.0;
  CHECK(t1.potential({ &zero, 1 }) == 0.0);
  CHECK(t1.score({ &zero, 1 })[0] == 0.0);

  const Target t2 = gaussian_target(2);
  const std::vector<double> x{ 1.0, 1.0 };
  CHECK(t2.potential(x) == doctest::Approx(1.0));
  const auto s = t2.score(x);
  CHECK(s[0] == -1.0);
  CHECK(s[1] == -1.0);
  CHECK_THROWS_AS(gaussian_target(0), std::invalid_argument);
}

TEST_CASE("banana target transform and rejections")
{
  CHECK_THROWS_AS(banana_target(1), std::invalid_argument);
  const Target t = banana_target(2);
  const std::vector<double> z{ 0.0, 0.0 };
  std::vector<double> x(2);
  t.forward(z, x);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == doctest::Approx(-1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-15));
  // |det DT| = 1/4 for the banana map.
  CHECK(t.log_det_jacobian() == doctest::Approx(std::log(0.25)));
}

TEST_CASE("banana2d demo target")
{
  const Target t = banana2d_demo_target();
  const std::vector<double> origin{ 0.0, 0.0 };
  CHECK(t.potential(origin) == 0.0);
  const std::vector<double> z{ 1.0, 0.0 };
  std::vector<double> x(2);
  t.forward(z, x);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == doctest::Approx(0.4));
}

TEST_CASE("make_target parses names")
{
  CHECK(make_target("gaussian", 3).dim() == 3);
  CHECK(make_target("banana", 5).kind() == TargetKind::Banana);
  CHECK(make_target("banana2d", 2).dim() == 2);
  CHECK_THROWS(make_target("rosenbrock", 2));
  CHECK_THROWS(make_target("banana2d", 3));
}

TEST_CASE("scores match central differences of the potential")
{
  std::mt19937_64 rng(7);
  const std::vector<Target> targets{ gaussian_target(3), banana_target(2), banana_target(3), banana_target(8),
                                     banana2d_demo_target() };
  for (const auto& t : targets) {
    CAPTURE(t.name());
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = normal_vector(rng, t.dim());
      const auto s = t.score(x);
      const auto fd = central_difference_score(t, x, 1e-5);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        num = std::max(num, std::abs(s[k] - fd[k]));
        den = std::max(den, std::abs(s[k]));
      }
      worst = std::max(worst, num / std::max(den, 1.0));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("transforms invert and satisfy the log-density identity")
{
  std::mt19937_64 rng(11);
  const std::vector<Target> targets{ gaussian_target(4), banana_target(2), banana_target(8), banana_target(64),
                                     banana2d_demo_target() };
  for (const auto& t : targets) {
    CAPTURE(t.name());
    CAPTURE(t.dim());
    const double c0 = density_identity(t, std::vector<double>(t.dim(), 0.0));
    for (int trial = 0; trial < 200; ++trial) {
      const auto z = normal_vector(rng, t.dim());
      std::vector<double> x(z.size()), back(z.size());
      t.forward(z, x);
      t.inverse(x, back);
      for (std::size_t k = 0; k < z.size(); ++k)
        CHECK(std::abs(back[k] - z[k]) < 1e-10);
      CHECK(std::abs(density_identity(t, z) - c0) < 1e-8);
    }
  }
}

TEST_CASE("banana potential at T(0) equals the identity constant")
{
  for (std::size_t d : { 2u, 5u, 16u }) {
    const Target t = banana_target(d);
    std::vector<double> z(d, 0.0), x(d);
    t.forward(z, x);
    // The fibre term vanishes at T(0) and the first d-1 coordinates are zero.
    CHECK(std::abs(t.potential(x)) < 1e-14);
    CHECK(density_identity(t, z) == doctest::Approx(-t.log_det_jacobian()));
  }
}

TEST_CASE("finite-difference directional score")
{
  const Target g = gaussian_target(2);
  const std::vector<double> x{ 1.0, 0.0 }, theta{ 1.0, 0.0 }, neg{ -1.0, 0.0 };
  CHECK(std::abs(finite_difference_directional_score(g, x, theta, 1e-4) + 1.0) < 1e-6);
  CHECK(finite_difference_directional_score(g, x, neg, 1e-4) ==
        doctest::Approx(-finite_difference_directional_score(g, x, theta, 1e-4)));

  std::mt19937_64 rng(3);
  const Target b = banana_target(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = normal_vector(rng, 3);
    auto th = normal_vector(rng, 3);
    double nrm = 0.0;
    for (double v : th)
      nrm += v * v;
    for (double& v : th)
      v /= std::sqrt(nrm);
    const auto s = b.score(y);
    double proj = 0.0;
    for (int k = 0; k < 3; ++k)
      proj += th[k] * s[k];
    const double fd = finite_difference_directional_score(b, y, th, 1e-4);
    CHECK(std::abs(fd - proj) < 1e-5 * std::max(1.0, std::abs(proj)));
  }
}

TEST_CASE("potentials are quadratically confining along rays")
{
  std::mt19937_64 rng(5);
  const std::vector<Target> targets{ gaussian_target(3), banana_target(2), banana_target(6), banana2d_demo_target() };
  for (const auto& t : targets) {
    for (int ray = 0; ray < 20; ++ray) {
      auto u = normal_vector(rng, t.dim());
      double nrm = 0.0;
      for (double v : u)
        nrm += v * v;
      for (double& v : u)
        v /= std::sqrt(nrm);
      // a = 0.01, c = 10 bound the observed growth for every target here.
      for (double r = 0.0; r <= 50.0; r += 0.5) {
        std::vector<double> x(u);
        for (double& v : x)
          v *= r;
        CHECK(t.potential(x) >= 0.01 * r * r - 10.0);
      }
    }
  }
}
