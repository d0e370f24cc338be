#pragma once

#include <cstdint>
#include <vector>

#include "rlip/forward_models.hpp"

namespace rlip {

/// Solution estimates x_{T-1}, one per evaluation trajectory.
using Ensemble = std::vector<Vector>;

struct CiBand {
  Vector lower;
  Vector upper;
  double level = 0.99;
};

struct BootstrapOptions {
  int resamples = 10000;
  double level = 0.99;
  bool clamp_nonnegative = false;
  std::uint64_t seed = 0;
};

/// Percentile bootstrap of the ensemble mean: `resamples` resamples with
/// replacement, entrywise nearest-rank percentiles at (1-level)/2 and
/// 1-(1-level)/2. Optionally clamps negative lower bounds to zero.
[[nodiscard]] CiBand bootstrap_ci(const Ensemble& ensemble, const BootstrapOptions& options);

[[nodiscard]] Vector ensemble_mean(const Ensemble& ensemble);

/// Nearest-rank percentile of an ascending-sorted sample, p in [0, 1].
[[nodiscard]] double nearest_rank(const std::vector<double>& sorted, double p);

struct KmeansResult {
  std::vector<int> labels;
  std::vector<Vector> means;
  std::vector<int> sizes;
  double wcss = 0.0;
  int iterations = 0;
};

struct KmeansOptions {
  int k = 2;
  int restarts = 10;
  int max_iterations = 500;
  std::uint64_t seed = 0;
};

/// Lloyd's algorithm from farthest-point seeding (first centre drawn at
/// random, each further centre the point farthest from those chosen);
/// the restart with the smallest within-cluster sum of squares wins.
[[nodiscard]] KmeansResult kmeans(const Ensemble& ensemble, const KmeansOptions& options);

/// Lloyd iterations from given centres; records the WCSS after every
/// assignment step when `wcss_trace` is non-null.
[[nodiscard]] KmeansResult lloyd(const Ensemble& ensemble, std::vector<Vector> centres, int max_iterations,
                                 std::vector<double>* wcss_trace = nullptr);

/// 1 - sum (est - ref)^2 / sum (ref - mean(ref))^2.
[[nodiscard]] double r_squared(const VectorRef& estimate, const VectorRef& reference);

struct Moments {
  Vector mean;
  Matrix covariance;  // unbiased
};

/// Sample mean and unbiased covariance of states[burn_in:].
[[nodiscard]] Moments empirical_moments(const std::vector<Vector>& states, std::size_t burn_in);

} // namespace rlip
