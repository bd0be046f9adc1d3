#pragma once

#include "fft.hpp"
#include "rwflow/kernels.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace rwflow::detail {

//! Periodic convolution of grid data with the kernel sampled on the same
//! spacing and truncated to |p| <= cutoff. The transform length is the next
//! fast size >= the grid size (and large enough to hold the truncated kernel
//! without self-overlap); samples beyond the grid are zero padding.
class GridConvolver
{
public:
  GridConvolver(std::size_t grid_size, double spacing, const Kernel1D& kernel, double cutoff);

  std::size_t fft_length() const { return fft_.length(); }

  //! out[l] = scale * sum_m k(z_l - z_m) in[m]
  void smooth(std::span<const double> in, std::span<double> out, double scale);

  //! As smooth(), also writing the spectral derivative of the result to dout.
  void smooth_with_derivative(std::span<const double> in,
                              std::span<double> out,
                              std::span<double> dout,
                              double scale);

private:
  void transform_input(std::span<const double> in);

  struct Spectrum
  {
    std::vector<std::complex<double>> kernel_hat;
    std::vector<double> omega;
  };
  static std::shared_ptr<const Spectrum> spectrum_for(RealFft& fft,
                                                      double spacing,
                                                      const Kernel1D& kernel,
                                                      std::size_t half);

  std::size_t grid_size_;
  RealFft fft_;
  std::shared_ptr<const Spectrum> spectrum_;
  std::vector<std::complex<double>> in_hat_;
  std::vector<std::complex<double>> work_;
};

} // namespace rwflow::detail
