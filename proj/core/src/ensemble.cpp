#include "rwflow/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwflow {

ParticleEnsemble::ParticleEnsemble(std::size_t n, std::size_t d)
  : n_(n)
  , d_(d)
  , data_(n * d, 0.0)
{
}

ParticleEnsemble::ParticleEnsemble(std::size_t n, std::size_t d, std::vector<double> positions)
  : n_(n)
  , d_(d)
  , data_(std::move(positions))
{
  if (data_.size() != n * d)
    throw std::invalid_argument("position buffer does not match n * d");
}

bool ParticleEnsemble::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void DirectionStream::sample(std::span<double> theta)
{
  if (theta.empty())
    throw std::invalid_argument("direction dimension must be >= 1");
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& t : theta) {
      t = normal_(engine_);
      norm2 += t * t;
    }
  } while (!(norm2 > 0.0));
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& t : theta)
    t *= inv;
}

std::vector<double> DirectionStream::sample(std::size_t d)
{
  std::vector<double> theta(d);
  sample(theta);
  return theta;
}

std::vector<double> sample_direction(DirectionStream& stream, std::size_t d)
{
  return stream.sample(d);
}

ParticleEnsemble gaussian_init(std::size_t n,
                               std::size_t d,
                               std::span<const double> mean,
                               double covariance_scale,
                               std::uint64_t seed)
{
  if (n == 0 || d == 0)
    throw std::invalid_argument("gaussian_init needs n >= 1 and d >= 1");
  if (!(covariance_scale >= 0.0))
    throw std::invalid_argument("covariance scale must be nonnegative");
  if (!mean.empty() && mean.size() != d)
    throw std::invalid_argument("mean has the wrong dimension");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(covariance_scale);
  ParticleEnsemble e(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = e[i];
    for (std::size_t k = 0; k < d; ++k)
      x[k] = (mean.empty() ? 0.0 : mean[k]) + sd * normal(engine);
  }
  return e;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace rwflow
