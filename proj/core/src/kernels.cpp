#include "rwflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rwflow {

Kernel1D::Kernel1D(KernelFamily family, double bandwidth)
  : family_(family)
  , bandwidth_(bandwidth)
{
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw std::invalid_argument("kernel bandwidth must be positive");
  norm_ = family == KernelFamily::Gaussian
            ? 1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi))
            : 1.0 / (2.0 * bandwidth);
}

double Kernel1D::eval(double p) const
{
  const double u = p / bandwidth_;
  if (family_ == KernelFamily::Gaussian)
    return norm_ * std::exp(-0.5 * u * u);
  return norm_ * std::exp(-std::abs(u));
}

double Kernel1D::deriv(double p) const
{
  if (family_ == KernelFamily::Gaussian)
    return -(p / (bandwidth_ * bandwidth_)) * eval(p);
  if (p == 0.0)
    return 0.0;
  return (p > 0.0 ? -1.0 : 1.0) * eval(p) / bandwidth_;
}

Kernel1D gaussian_kernel(double b)
{
  return Kernel1D(KernelFamily::Gaussian, b);
}

Kernel1D laplace_kernel(double b)
{
  return Kernel1D(KernelFamily::Laplace, b);
}

KernelFamily parse_kernel_family(std::string_view name)
{
  if (name == "gaussian")
    return KernelFamily::Gaussian;
  if (name == "laplace")
    return KernelFamily::Laplace;
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

double fixed_bandwidth_rule(FlowKind flow, std::size_t n)
{
  const double c = flow == FlowKind::KDRW ? 2.0 : 1.0;
  return c * std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), -0.2);
}

double adaptive_bandwidth_rule(FlowKind flow, std::span<const double> projections)
{
  const std::size_t n = projections.size();
  if (n < 2)
    return fixed_bandwidth_rule(flow, std::max<std::size_t>(n, 1));
  double mean = 0.0;
  for (double p : projections)
    mean += p;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double p : projections)
    var += (p - mean) * (p - mean);
  const double sigma = std::sqrt(var / static_cast<double>(n));
  if (!(sigma > 0.0))
    return fixed_bandwidth_rule(flow, n);
  return sigma * fixed_bandwidth_rule(flow, n);
}

} // namespace rwflow
