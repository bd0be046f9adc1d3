#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rwflow {

enum class TargetKind { Gaussian, Banana, Banana2d };

//! Target distribution pi proportional to exp(-U) on R^d.
//!
//! Carries the potential U, the score S = -grad U and, for the built-in
//! families, an explicit map T pushing the standard normal onto pi together
//! with its inverse. Targets are immutable value objects.
class Target
{
public:
  TargetKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::string_view name() const;

  double potential(std::span<const double> x) const;

  //! Writes S(x) = -grad U(x) into `out` (length dim()).
  void score(std::span<const double> x, std::span<double> out) const;
  std::vector<double> score(std::span<const double> x) const;

  bool has_transform() const { return true; }
  //! x = T(z), pushes the standard normal onto the target.
  void forward(std::span<const double> z, std::span<double> x) const;
  //! z = T^{-1}(x).
  void inverse(std::span<const double> x, std::span<double> z) const;

  //! log |det DT(z)|; constant for the built-in families.
  double log_det_jacobian() const;

  friend Target gaussian_target(std::size_t d);
  friend Target banana_target(std::size_t d);
  friend Target banana2d_demo_target();

private:
  Target(TargetKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  TargetKind kind_;
  std::size_t dim_;
};

//! Standard normal: U(x) = |x|^2 / 2.
Target gaussian_target(std::size_t d);

//! Rosenbrock "banana" in d >= 2 dimensions:
//! U(x) = 1/2 sum_{i<d} x_i^2 + 8 (x_d - (sum_{i<d} x_i^2 - (d-1)) / (2 sqrt d))^2.
Target banana_target(std::size_t d);

//! Two-dimensional demo banana, U(x) = (x_1^2 + 10 (x_2 - 0.4 x_1^2)^2) / 2.
Target banana2d_demo_target();

//! Builds a target from its CLI name (`gaussian`, `banana`, `banana2d`).
Target make_target(std::string_view name, std::size_t d);

//! Central-difference estimate of theta . S(x) from two potential evaluations.
double finite_difference_directional_score(const Target& target,
                                           std::span<const double> x,
                                           std::span<const double> theta,
                                           double dp);

} // namespace rwflow
