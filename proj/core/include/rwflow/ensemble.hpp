#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rwflow {

//! n particles in R^d, stored row-major.
class ParticleEnsemble
{
public:
  ParticleEnsemble() = default;
  ParticleEnsemble(std::size_t n, std::size_t d);
  ParticleEnsemble(std::size_t n, std::size_t d, std::vector<double> positions);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

  std::span<double> operator[](std::size_t i) { return { data_.data() + i * d_, d_ }; }
  std::span<const double> operator[](std::size_t i) const { return { data_.data() + i * d_, d_ }; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const ParticleEnsemble&, const ParticleEnsemble&) = default;

private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

//! Seeded stream of i.i.d. uniform directions on the unit sphere.
class DirectionStream
{
public:
  explicit DirectionStream(std::uint64_t seed) : engine_(seed) {}

  //! Normalized standard-normal draw; re-draws the (measure-zero) zero vector.
  void sample(std::span<double> theta);
  std::vector<double> sample(std::size_t d);

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::vector<double> sample_direction(DirectionStream& stream, std::size_t d);

//! i.i.d. draws from N(mean, scale * I). An empty `mean` means the origin.
ParticleEnsemble gaussian_init(std::size_t n,
                               std::size_t d,
                               std::span<const double> mean,
                               double covariance_scale,
                               std::uint64_t seed);

//! Decorrelates derived seeds (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace rwflow
