#include "rwflow/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using namespace rwflow;
using boost::math::quadrature::gauss_kronrod;

TEST_CASE("gaussian kernel values")
{
  const Kernel1D k = gaussian_kernel(1.0);
  CHECK(k.eval(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(k.eval(0.0) == doctest::Approx(0.398942).epsilon(1e-6));
  CHECK(k.deriv(0.0) == 0.0);
  CHECK_THROWS_AS(gaussian_kernel(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_kernel(-1.0), std::invalid_argument);
}

TEST_CASE("gaussian kernel at b = 0.5 against numeric oracles")
{
  const Kernel1D k = gaussian_kernel(0.5);
  const double p = 0.5, h = 1e-5;
  CHECK(k.deriv(p) == doctest::Approx((k.eval(p + h) - k.eval(p - h)) / (2 * h)).epsilon(1e-6));
  // k(p) is the density of N(0, b^2): its integral up to p is the normal CDF.
  const double cdf = gauss_kronrod<double, 61>::integrate([&](double q) { return k.eval(q); }, -10.0, p, 15, 1e-14);
  CHECK(cdf == doctest::Approx(0.5 * std::erfc(-p / (0.5 * std::sqrt(2.0)))).epsilon(1e-12));
}

TEST_CASE("laplace kernel values")
{
  const Kernel1D k = laplace_kernel(1.0);
  CHECK(k.eval(0.0) == 0.5);
  CHECK(k.eval(std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(k.deriv(0.0) == 0.0);
  CHECK_THROWS_AS(laplace_kernel(0.0), std::invalid_argument);
  const Kernel1D kb = laplace_kernel(0.7);
  for (double p : { 0.1, 0.9, 3.0 }) {
    CHECK(kb.eval(p) == kb.eval(-p));
    CHECK(kb.deriv(p) == -kb.deriv(-p));
    CHECK(kb.deriv(p) == doctest::Approx(-kb.eval(p) / 0.7));
  }
}

TEST_CASE("kernels are even, positive, unit mass and self-similar")
{
  for (auto family : { KernelFamily::Gaussian, KernelFamily::Laplace }) {
    for (double b : { 0.05, 0.3, 1.0, 2.5 }) {
      const Kernel1D k(family, b);
      const Kernel1D k1(family, 1.0);
      for (double p = -5.0 * b; p <= 5.0 * b; p += 0.37 * b) {
        CHECK(k.eval(p) > 0.0);
        CHECK(k.eval(p) == k.eval(-p));
        CHECK(k.deriv(-p) == -k.deriv(p));
        CHECK(k.eval(p) == doctest::Approx(k1.eval(p / b) / b).epsilon(1e-13));
      }
      auto f = [&](double p) { return k.eval(p); };
      // Split at 0 so the Laplace cusp sits on an endpoint.
      const double mass = gauss_kronrod<double, 61>::integrate(f, -20.0 * b, 0.0, 15, 1e-14) +
                          gauss_kronrod<double, 61>::integrate(f, 0.0, 20.0 * b, 15, 1e-14);
      CHECK(std::abs(mass - 1.0) < 1e-8);
      CHECK(k.mass() == 1.0);
    }
  }
}

TEST_CASE("gaussian derivative matches finite differences")
{
  const Kernel1D k = gaussian_kernel(0.8);
  for (double p = -3.0; p <= 3.0; p += 0.25) {
    const double h = 1e-5;
    const double fd = (k.eval(p + h) - k.eval(p - h)) / (2 * h);
    CHECK(std::abs(k.deriv(p) - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
  }
}

TEST_CASE("fixed bandwidth rule")
{
  CHECK(fixed_bandwidth_rule(FlowKind::KDRW, 1) == 2.0);
  CHECK(fixed_bandwidth_rule(FlowKind::RRW, 1024) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(fixed_bandwidth_rule(FlowKind::KDRW, 32) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("adaptive bandwidth rule")
{
  const std::vector<double> same(10, 3.0);
  CHECK(adaptive_bandwidth_rule(FlowKind::KDRW, same) == fixed_bandwidth_rule(FlowKind::KDRW, 10));
  const std::vector<double> pm{ -1.0, 1.0 };
  CHECK(adaptive_bandwidth_rule(FlowKind::RRW, pm) == doctest::Approx(std::pow(2.0, -0.2)).epsilon(1e-15));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> p(1024);
  for (auto& v : p)
    v = nd(rng);
  CHECK(adaptive_bandwidth_rule(FlowKind::KDRW, p) == doctest::Approx(0.5).epsilon(0.1));

  for (double lambda : { 0.1, 3.0, 17.0 }) {
    std::vector<double> q(p);
    for (auto& v : q)
      v *= lambda;
    CHECK(adaptive_bandwidth_rule(FlowKind::KDRW, q) ==
          doctest::Approx(lambda * adaptive_bandwidth_rule(FlowKind::KDRW, p)).epsilon(1e-12));
  }
}

TEST_CASE("kernel family parsing")
{
  CHECK(parse_kernel_family("gaussian") == KernelFamily::Gaussian);
  CHECK(parse_kernel_family("laplace") == KernelFamily::Laplace);
  CHECK_THROWS(parse_kernel_family("epanechnikov"));
}
