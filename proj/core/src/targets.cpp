#include "rwflow/targets.hpp"

#include <cmath>
#include <stdexcept>

namespace rwflow {

namespace {

// Fiber scale of the banana families: x_d = shift(x_{<d}) + z_d * scale.
constexpr double kBananaFiberScale = 0.25;
constexpr double kDemoCurvature = 0.4;
constexpr double kDemoStiffness = 10.0;

double sum_squares_head(std::span<const double> x)
{
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    s += x[i] * x[i];
  return s;
}

double banana_shift(std::span<const double> x)
{
  const auto d = static_cast<double>(x.size());
  return (sum_squares_head(x) - (d - 1.0)) / (2.0 * std::sqrt(d));
}

void check_dim(std::size_t expected, std::size_t got)
{
  if (expected != got)
    throw std::invalid_argument("point dimension does not match target");
}

} // namespace

std::string_view Target::name() const
{
  switch (kind_) {
    case TargetKind::Gaussian:
      return "gaussian";
    case TargetKind::Banana:
      return "banana";
    case TargetKind::Banana2d:
      return "banana2d";
  }
  return "unknown";
}

double Target::potential(std::span<const double> x) const
{
  check_dim(dim_, x.size());
  switch (kind_) {
    case TargetKind::Gaussian: {
      double s = 0.0;
      for (double v : x)
        s += v * v;
      return 0.5 * s;
    }
    case TargetKind::Banana: {
      const double r = x.back() - banana_shift(x);
      return 0.5 * sum_squares_head(x) + 8.0 * r * r;
    }
    case TargetKind::Banana2d: {
      const double r = x[1] - kDemoCurvature * x[0] * x[0];
      return 0.5 * (x[0] * x[0] + kDemoStiffness * r * r);
    }
  }
  return 0.0;
}

void Target::score(std::span<const double> x, std::span<double> out) const
{
  check_dim(dim_, x.size());
  check_dim(dim_, out.size());
  switch (kind_) {
    case TargetKind::Gaussian:
      for (std::size_t i = 0; i < dim_; ++i)
        out[i] = -x[i];
      return;
    case TargetKind::Banana: {
      const double c = 1.0 / (2.0 * std::sqrt(static_cast<double>(dim_)));
      const double r = x.back() - banana_shift(x);
      // dU/dx_i = x_i - 32 c r x_i for i < d, dU/dx_d = 16 r
      for (std::size_t i = 0; i + 1 < dim_; ++i)
        out[i] = -(x[i] - 32.0 * c * r * x[i]);
      out[dim_ - 1] = -16.0 * r;
      return;
    }
    case TargetKind::Banana2d: {
      const double r = x[1] - kDemoCurvature * x[0] * x[0];
      out[0] = -(x[0] - 2.0 * kDemoStiffness * kDemoCurvature * r * x[0]);
      out[1] = -kDemoStiffness * r;
      return;
    }
  }
}

std::vector<double> Target::score(std::span<const double> x) const
{
  std::vector<double> out(dim_);
  score(x, out);
  return out;
}

void Target::forward(std::span<const double> z, std::span<double> x) const
{
  check_dim(dim_, z.size());
  check_dim(dim_, x.size());
  switch (kind_) {
    case TargetKind::Gaussian:
      for (std::size_t i = 0; i < dim_; ++i)
        x[i] = z[i];
      return;
    case TargetKind::Banana: {
      const double shift = banana_shift(z);
      for (std::size_t i = 0; i + 1 < dim_; ++i)
        x[i] = z[i];
      x[dim_ - 1] = shift + kBananaFiberScale * z[dim_ - 1];
      return;
    }
    case TargetKind::Banana2d:
      x[0] = z[0];
      x[1] = kDemoCurvature * z[0] * z[0] + z[1] / std::sqrt(kDemoStiffness);
      return;
  }
}

void Target::inverse(std::span<const double> x, std::span<double> z) const
{
  check_dim(dim_, x.size());
  check_dim(dim_, z.size());
  switch (kind_) {
    case TargetKind::Gaussian:
      for (std::size_t i = 0; i < dim_; ++i)
        z[i] = x[i];
      return;
    case TargetKind::Banana: {
      const double shift = banana_shift(x);
      for (std::size_t i = 0; i + 1 < dim_; ++i)
        z[i] = x[i];
      z[dim_ - 1] = (x[dim_ - 1] - shift) / kBananaFiberScale;
      return;
    }
    case TargetKind::Banana2d:
      z[0] = x[0];
      z[1] = (x[1] - kDemoCurvature * x[0] * x[0]) * std::sqrt(kDemoStiffness);
      return;
  }
}

double Target::log_det_jacobian() const
{
  switch (kind_) {
    case TargetKind::Gaussian:
      return 0.0;
    case TargetKind::Banana:
      return std::log(kBananaFiberScale);
    case TargetKind::Banana2d:
      return -0.5 * std::log(kDemoStiffness);
  }
  return 0.0;
}

Target gaussian_target(std::size_t d)
{
  if (d == 0)
    throw std::invalid_argument("gaussian target needs dimension >= 1");
  return Target(TargetKind::Gaussian, d);
}

Target banana_target(std::size_t d)
{
  if (d < 2)
    throw std::invalid_argument("banana target needs dimension >= 2");
  return Target(TargetKind::Banana, d);
}

Target banana2d_demo_target()
{
  return Target(TargetKind::Banana2d, 2);
}

Target make_target(std::string_view name, std::size_t d)
{
  if (name == "gaussian")
    return gaussian_target(d);
  if (name == "banana")
    return banana_target(d);
  if (name == "banana2d") {
    if (d != 2 && d != 0)
      throw std::invalid_argument("banana2d is two-dimensional");
    return banana2d_demo_target();
  }
  throw std::invalid_argument("unknown target '" + std::string(name) + "'");
}

double finite_difference_directional_score(const Target& target,
                                           std::span<const double> x,
                                           std::span<const double> theta,
                                           double dp)
{
  if (!(dp > 0.0))
    throw std::invalid_argument("finite-difference step must be positive");
  const std::size_t d = target.dim();
  std::vector<double> plus(d), minus(d);
  for (std::size_t i = 0; i < d; ++i) {
    plus[i] = x[i] + dp * theta[i];
    minus[i] = x[i] - dp * theta[i];
  }
  return -(target.potential(plus) - target.potential(minus)) / (2.0 * dp);
}

} // namespace rwflow
