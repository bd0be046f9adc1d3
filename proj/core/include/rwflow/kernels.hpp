#pragma once

#include <span>
#include <string_view>

namespace rwflow {

enum class KernelFamily { Gaussian, Laplace };

//! Which flow a bandwidth rule is tuned for.
enum class FlowKind { KDRW, RRW };

//! Unit-mass, even 1-D smoothing kernel k_b(p) = k_1(p / b) / b.
class Kernel1D
{
public:
  Kernel1D(KernelFamily family, double bandwidth);

  KernelFamily family() const { return family_; }
  double bandwidth() const { return bandwidth_; }
  double mass() const { return 1.0; }

  double eval(double p) const;
  //! k'(p); the Laplace kernel uses k'(0) = 0.
  double deriv(double p) const;

private:
  KernelFamily family_;
  double bandwidth_;
  double norm_;
};

Kernel1D gaussian_kernel(double b);
Kernel1D laplace_kernel(double b);

KernelFamily parse_kernel_family(std::string_view name);

//! 2 n^{-1/5} for KDRW and n^{-1/5} for RRW.
double fixed_bandwidth_rule(FlowKind flow, std::size_t n);

//! c sigma n^{-1/5} with sigma the population standard deviation of the
//! projections (c = 2 for KDRW, 1 for RRW). Falls back to the fixed rule
//! when the projections are degenerate.
double adaptive_bandwidth_rule(FlowKind flow, std::span<const double> projections);

} // namespace rwflow
