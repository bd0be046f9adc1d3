#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rwflow::detail {

//! Smallest n' >= n of the form 2^a 3^b 5^c 7^d.
std::size_t next_fast_size(std::size_t n);

//! Real <-> half-complex transforms of a fixed length backed by cached FFTW
//! plans. Execution is thread-safe; plan creation is serialized internally.
class RealFft
{
public:
  explicit RealFft(std::size_t length);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t length() const { return length_; }
  std::size_t spectrum_length() const { return length_ / 2 + 1; }

  //! Zero-pads `in` to length() and transforms it.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  //! Unnormalized inverse; the caller divides by length().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
  struct Buffers;
  std::size_t length_;
  const void* plans_;
  std::unique_ptr<Buffers> buf_;
};

} // namespace rwflow::detail
