#include "rwflow/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rwflow {

MmdSpec MmdSpec::for_dim(std::size_t d)
{
  return { std::sqrt(static_cast<double>(d)), d };
}

double mmd2_vs_standard_gaussian(const ParticleEnsemble& ensemble, const MmdSpec& spec)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  if (n == 0)
    throw std::invalid_argument("MMD of an empty ensemble");
  if (!(spec.sigma > 0.0))
    throw std::invalid_argument("MMD bandwidth must be positive");
  if (spec.dim != d)
    throw std::invalid_argument("MMD spec dimension does not match ensemble");
  const double s2 = spec.sigma * spec.sigma;
  const double half_d = 0.5 * static_cast<double>(d);

  double pair = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = ensemble[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto xj = ensemble[j];
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        r2 += diff * diff;
      }
      row += std::exp(-r2 / (2.0 * s2));
    }
    pair += row;
  }
  const double nn = static_cast<double>(n);

  // E_z k(x, z), z ~ N(0, I): (s2/(s2+1))^{d/2} exp(-|x|^2 / (2(s2+1)))
  const double cross_scale = std::pow(s2 / (s2 + 1.0), half_d);
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (double v : ensemble[i])
      r2 += v * v;
    cross += std::exp(-r2 / (2.0 * (s2 + 1.0)));
  }
  cross *= cross_scale;

  // E_{z,z'} k(z, z') with z - z' ~ N(0, 2I)
  const double self = std::pow(s2 / (s2 + 2.0), half_d);
  return pair / (nn * nn) - 2.0 * cross / nn + self;
}

double mmd2_transformed(const ParticleEnsemble& ensemble, const Target& target, const MmdSpec& spec)
{
  if (!target.has_transform())
    throw std::invalid_argument("target has no normal pushforward transform");
  if (ensemble.dim() != target.dim())
    throw std::invalid_argument("ensemble dimension does not match target");
  ParticleEnsemble pulled(ensemble.size(), ensemble.dim());
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    target.inverse(ensemble[i], pulled[i]);
  return mmd2_vs_standard_gaussian(pulled, spec);
}

double mean_error(const ParticleEnsemble& ensemble)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  if (n == 0)
    throw std::invalid_argument("mean error of an empty ensemble");
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k)
      mean[k] += ensemble[i][k];
  double acc = 0.0;
  for (double m : mean)
    acc += std::abs(m / static_cast<double>(n));
  return acc / static_cast<double>(d);
}

double variance_per_coordinate(const ParticleEnsemble& ensemble)
{
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  if (n < 2)
    return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += ensemble[i][k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = ensemble[i][k] - mean;
      var += diff * diff;
    }
    total += var / static_cast<double>(n - 1);
  }
  return total / static_cast<double>(d);
}

std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n)
{
  if (cost.size() != n * n)
    throw std::invalid_argument("assignment cost matrix must be n x n");
  // Shortest augmenting path with potentials (Hungarian method), 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j])
          continue;
        const double cur = cost[(r0 - 1) * n + (j - 1)] - u[r0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j)
    assignment[match[j] - 1] = j - 1;
  return assignment;
}

double w2_exact_small(const ParticleEnsemble& a, const ParticleEnsemble& b)
{
  if (a.size() != b.size())
    throw std::invalid_argument("w2_exact_small needs equal particle counts");
  if (a.dim() != b.dim())
    throw std::invalid_argument("w2_exact_small needs equal dimensions");
  const std::size_t n = a.size();
  if (n == 0)
    return 0.0;
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < a.dim(); ++k) {
        const double diff = a[i][k] - b[j][k];
        r2 += diff * diff;
      }
      cost[i * n + j] = r2;
    }
  const auto assignment = solve_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    total += cost[i * n + assignment[i]];
  return std::sqrt(total / static_cast<double>(n));
}

double sliced_w2_estimate(const ParticleEnsemble& a,
                          const ParticleEnsemble& b,
                          std::size_t num_directions,
                          DirectionStream& stream)
{
  if (a.size() != b.size() || a.dim() != b.dim())
    throw std::invalid_argument("sliced_w2_estimate needs equal counts and dimensions");
  const std::size_t n = a.size();
  const std::size_t d = a.dim();
  if (n == 0 || num_directions == 0)
    return 0.0;
  std::vector<double> theta(d), pa(n), pb(n);
  double total = 0.0;
  for (std::size_t m = 0; m < num_directions; ++m) {
    stream.sample(theta);
    for (std::size_t i = 0; i < n; ++i) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        sa += a[i][k] * theta[k];
        sb += b[i][k] * theta[k];
      }
      pa[i] = sa;
      pb[i] = sb;
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      w += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    total += w / static_cast<double>(n);
  }
  return std::sqrt(total / static_cast<double>(num_directions));
}

std::string format_double(double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_run_record_csv(std::ostream& os, const RunRecord& record, bool zero_wall_clock)
{
  os << kRunRecordHeader << '\n';
  for (const auto& row : record.rows) {
    os << row.step << ',' << format_double(row.t) << ',' << row.metric << ','
       << format_double(row.value) << ',' << format_double(zero_wall_clock ? 0.0 : row.wall_seconds)
       << '\n';
  }
}

} // namespace rwflow
