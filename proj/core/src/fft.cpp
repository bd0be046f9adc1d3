#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace rwflow::detail {

namespace {

struct PlanPair
{
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n)
{
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end())
    return it->second;
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  PlanPair p;
  const int len = static_cast<int>(n);
  p.r2c = fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE);
  p.c2r = fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(spec);
  if (!p.r2c || !p.c2r)
    throw std::runtime_error("FFTW planning failed");
  return cache.emplace(n, p).first->second;
}

} // namespace

std::size_t next_fast_size(std::size_t n)
{
  if (n <= 1)
    return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : { 2, 3, 5, 7 })
      while (r % f == 0)
        r /= f;
    if (r == 1)
      return m;
  }
}

struct RealFft::Buffers
{
  double* real;
  fftw_complex* spec;
};

RealFft::RealFft(std::size_t length)
  : length_(length)
{
  if (length == 0)
    throw std::invalid_argument("FFT length must be positive");
  plans_ = &plans_for(length);
  buf_ = std::make_unique<Buffers>();
  buf_->real = fftw_alloc_real(length);
  buf_->spec = fftw_alloc_complex(length / 2 + 1);
}

RealFft::~RealFft()
{
  if (buf_) {
    fftw_free(buf_->real);
    fftw_free(buf_->spec);
  }
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out)
{
  if (in.size() > length_ || out.size() != spectrum_length())
    throw std::invalid_argument("FFT buffer size mismatch");
  std::copy(in.begin(), in.end(), buf_->real);
  std::fill(buf_->real + in.size(), buf_->real + length_, 0.0);
  fftw_execute_dft_r2c(static_cast<const PlanPair*>(plans_)->r2c, buf_->real, buf_->spec);
  const auto* spec = reinterpret_cast<const std::complex<double>*>(buf_->spec);
  std::copy(spec, spec + spectrum_length(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out)
{
  if (in.size() != spectrum_length() || out.size() > length_)
    throw std::invalid_argument("FFT buffer size mismatch");
  // c2r destroys its input, so it always works on the private copy.
  std::memcpy(buf_->spec, in.data(), sizeof(fftw_complex) * spectrum_length());
  fftw_execute_dft_c2r(static_cast<const PlanPair*>(plans_)->c2r, buf_->spec, buf_->real);
  std::copy(buf_->real, buf_->real + out.size(), out.begin());
}

} // namespace rwflow::detail
