#pragma once

#include "rwflow/ensemble.hpp"
#include "rwflow/targets.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rwflow {

//! Gaussian MMD kernel exp(-|x - y|^2 / (2 sigma^2)).
struct MmdSpec
{
  double sigma = 1.0;
  std::size_t dim = 1;

  //! sigma = sqrt(d).
  static MmdSpec for_dim(std::size_t d);
};

//! Exact MMD^2 between the empirical measure and the standard normal.
double mmd2_vs_standard_gaussian(const ParticleEnsemble& ensemble, const MmdSpec& spec);

//! MMD^2 of the pulled-back sample T^{-1}(x^i) against the standard normal.
double mmd2_transformed(const ParticleEnsemble& ensemble, const Target& target, const MmdSpec& spec);

//! (1/d) sum_k |mean_k|.
double mean_error(const ParticleEnsemble& ensemble);

//! Average over coordinates of the unbiased sample variance.
double variance_per_coordinate(const ParticleEnsemble& ensemble);

//! Exact W2 between two equal-size uniform empirical measures (optimal assignment).
double w2_exact_small(const ParticleEnsemble& a, const ParticleEnsemble& b);

//! Sliced W2: root of the mean over random directions of the squared 1-D W2
//! between sorted projections.
double sliced_w2_estimate(const ParticleEnsemble& a,
                          const ParticleEnsemble& b,
                          std::size_t num_directions,
                          DirectionStream& stream);

//! Min-cost perfect assignment on a dense square cost matrix (row-major).
//! Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n);

struct RunRecordRow
{
  std::size_t step = 0;
  double t = 0.0;
  std::string metric;
  double value = 0.0;
  double wall_seconds = 0.0;
};

//! Metric time series of one run plus the wall time of every step.
struct RunRecord
{
  std::vector<RunRecordRow> rows;
  std::vector<double> step_seconds;
};

inline constexpr const char* kRunRecordHeader = "step,t,metric,value,wall_seconds";

//! Writes the record with the fixed header. With `zero_wall_clock` the
//! wall_seconds column is written as 0 so that reruns are byte-identical.
void write_run_record_csv(std::ostream& os, const RunRecord& record, bool zero_wall_clock);

//! Shortest round-trip decimal representation.
std::string format_double(double v);

} // namespace rwflow
