#include "convolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rwflow::detail {

namespace {

std::size_t kernel_half_width(double spacing, double cutoff)
{
  return static_cast<std::size_t>(std::floor(cutoff / spacing + 1e-9));
}

} // namespace

std::shared_ptr<const GridConvolver::Spectrum> GridConvolver::spectrum_for(RealFft& fft,
                                                                           double spacing,
                                                                           const Kernel1D& kernel,
                                                                           std::size_t half)
{
  struct Key
  {
    std::size_t length;
    std::size_t half;
    double spacing;
    double bandwidth;
    KernelFamily family;
    bool operator==(const Key&) const = default;
  };
  thread_local Key last_key{};
  thread_local std::shared_ptr<const Spectrum> last;

  const std::size_t n = fft.length();
  const Key key{ n, half, spacing, kernel.bandwidth(), kernel.family() };
  if (last && key == last_key)
    return last;

  auto spec = std::make_shared<Spectrum>();
  std::vector<double> samples(n, 0.0);
  samples[0] = kernel.eval(0.0);
  for (std::size_t j = 1; j <= half; ++j) {
    const double v = kernel.eval(static_cast<double>(j) * spacing);
    samples[j] = v;
    samples[n - j] = v;
  }
  spec->kernel_hat.resize(fft.spectrum_length());
  fft.forward(samples, spec->kernel_hat);

  spec->omega.resize(fft.spectrum_length());
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * spacing);
  for (std::size_t j = 0; j < spec->omega.size(); ++j)
    spec->omega[j] = base * static_cast<double>(j);
  if (n % 2 == 0)
    spec->omega.back() = 0.0; // Nyquist mode has no odd counterpart

  last_key = key;
  last = spec;
  return last;
}

GridConvolver::GridConvolver(std::size_t grid_size,
                             double spacing,
                             const Kernel1D& kernel,
                             double cutoff)
  : grid_size_(grid_size)
  , fft_(next_fast_size(std::max(grid_size, 2 * kernel_half_width(spacing, cutoff) + 1)))
  , spectrum_(spectrum_for(fft_, spacing, kernel, kernel_half_width(spacing, cutoff)))
{
  in_hat_.resize(fft_.spectrum_length());
  work_.resize(fft_.spectrum_length());
}

void GridConvolver::transform_input(std::span<const double> in)
{
  if (in.size() != grid_size_)
    throw std::invalid_argument("grid size does not match convolver");
  fft_.forward(in, in_hat_);
  for (std::size_t j = 0; j < in_hat_.size(); ++j)
    in_hat_[j] *= spectrum_->kernel_hat[j];
}

void GridConvolver::smooth(std::span<const double> in, std::span<double> out, double scale)
{
  transform_input(in);
  fft_.inverse(in_hat_, out.first(grid_size_));
  const double s = scale / static_cast<double>(fft_.length());
  for (std::size_t l = 0; l < grid_size_; ++l)
    out[l] *= s;
}

void GridConvolver::smooth_with_derivative(std::span<const double> in,
                                           std::span<double> out,
                                           std::span<double> dout,
                                           double scale)
{
  transform_input(in);
  for (std::size_t j = 0; j < in_hat_.size(); ++j)
    work_[j] = in_hat_[j] * std::complex<double>(0.0, spectrum_->omega[j]);
  const double s = scale / static_cast<double>(fft_.length());
  fft_.inverse(in_hat_, out.first(grid_size_));
  fft_.inverse(work_, dout.first(grid_size_));
  for (std::size_t l = 0; l < grid_size_; ++l) {
    out[l] *= s;
    dout[l] *= s;
  }
}

} // namespace rwflow::detail
