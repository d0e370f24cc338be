#include "rlip/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rlip/errors.hpp"
#include "rlip/random.hpp"

namespace rlip {

namespace {

void check_ensemble(const Ensemble& ensemble, const char* what) {
  if (ensemble.empty()) {
    throw ConfigError(std::string(what) + ": ensemble is empty");
  }
  const auto d = ensemble.front().size();
  for (const auto& x : ensemble) {
    if (x.size() != d) {
      throw ShapeError(std::string(what) + ": ensemble members differ in dimension");
    }
  }
}

} // namespace

Vector ensemble_mean(const Ensemble& ensemble) {
  check_ensemble(ensemble, "ensemble_mean");
  Vector mean = Vector::Zero(ensemble.front().size());
  for (const auto& x : ensemble) {
    mean += x;
  }
  return mean / static_cast<double>(ensemble.size());
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) {
    throw ConfigError("nearest_rank: empty sample");
  }
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

CiBand bootstrap_ci(const Ensemble& ensemble, const BootstrapOptions& options) {
  check_ensemble(ensemble, "bootstrap_ci");
  if (options.resamples < 100) {
    throw ConfigError("bootstrap_ci: need at least 100 resamples");
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw ConfigError("bootstrap_ci: level must lie in (0, 1)");
  }
  const auto n = ensemble.size();
  const auto d = ensemble.front().size();
  const auto b = static_cast<std::size_t>(options.resamples);

  // Row i holds the bootstrap means of coordinate i.
  Matrix means(d, static_cast<Eigen::Index>(b));
  Rng rng = make_stream(options.seed, {stream::kBootstrap});
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Vector acc(d);
  for (std::size_t r = 0; r < b; ++r) {
    acc.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      acc += ensemble[pick(rng)];
    }
    means.col(static_cast<Eigen::Index>(r)) = acc / static_cast<double>(n);
  }

  const double tail = (1.0 - options.level) / 2.0;
  CiBand band;
  band.level = options.level;
  band.lower.resize(d);
  band.upper.resize(d);
  std::vector<double> row(b);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (std::size_t r = 0; r < b; ++r) {
      row[r] = means(i, static_cast<Eigen::Index>(r));
    }
    std::sort(row.begin(), row.end());
    band.lower[i] = nearest_rank(row, tail);
    band.upper[i] = nearest_rank(row, 1.0 - tail);
  }
  if (options.clamp_nonnegative) {
    band.lower = band.lower.cwiseMax(0.0);
    band.upper = band.upper.cwiseMax(band.lower);
  }
  return band;
}

// ---------------------------------------------------------------------------

KmeansResult lloyd(const Ensemble& ensemble, std::vector<Vector> centres, int max_iterations,
                   std::vector<double>* wcss_trace) {
  const auto n = ensemble.size();
  const auto k = centres.size();
  KmeansResult res;
  res.labels.assign(n, -1);
  res.means = std::move(centres);
  res.sizes.assign(k, 0);

  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = (ensemble[i] - res.means[c]).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(c);
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
      wcss += best_d;
    }
    if (wcss_trace != nullptr) {
      wcss_trace->push_back(wcss);
    }
    res.iterations = it + 1;
    if (!changed && it > 0) {
      break;
    }
    // Update step; an emptied cluster keeps its previous centre.
    std::vector<Vector> sums(k, Vector::Zero(ensemble.front().size()));
    std::fill(res.sizes.begin(), res.sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(res.labels[i])] += ensemble[i];
      ++res.sizes[static_cast<std::size_t>(res.labels[i])];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (res.sizes[c] > 0) {
        res.means[c] = sums[c] / static_cast<double>(res.sizes[c]);
      }
    }
  }

  std::fill(res.sizes.begin(), res.sizes.end(), 0);
  res.wcss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(res.labels[i]);
    ++res.sizes[c];
    res.wcss += (ensemble[i] - res.means[c]).squaredNorm();
  }
  return res;
}

KmeansResult kmeans(const Ensemble& ensemble, const KmeansOptions& options) {
  check_ensemble(ensemble, "kmeans");
  if (options.k < 1) {
    throw ConfigError("kmeans: k must be positive");
  }
  if (static_cast<std::size_t>(options.k) > ensemble.size()) {
    throw ConfigError("kmeans: k=" + std::to_string(options.k) + " exceeds ensemble size " +
                      std::to_string(ensemble.size()));
  }
  if (options.restarts < 1) {
    throw ConfigError("kmeans: restarts must be positive");
  }
  const auto n = ensemble.size();
  const auto k = static_cast<std::size_t>(options.k);

  KmeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng = make_stream(options.seed, {stream::kKmeans, static_cast<std::uint64_t>(restart)});
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Vector> centres;
    centres.reserve(k);
    centres.push_back(ensemble[pick(rng)]);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (centres.size() < k) {
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], (ensemble[i] - centres.back()).squaredNorm());
        if (nearest[i] > far_d) {
          far_d = nearest[i];
          far = i;
        }
      }
      centres.push_back(ensemble[far]);
    }
    KmeansResult res = lloyd(ensemble, std::move(centres), options.max_iterations);
    if (res.wcss < best.wcss) {
      best = std::move(res);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

double r_squared(const VectorRef& estimate, const VectorRef& reference) {
  if (estimate.size() != reference.size()) {
    throw ShapeError("r_squared: dimension mismatch");
  }
  if (reference.size() < 2) {
    throw ConfigError("r_squared: need at least 2 entries");
  }
  const double total = (reference.array() - reference.mean()).square().sum();
  if (total == 0.0) {
    throw NumericError("r_squared: reference has zero variance");
  }
  return 1.0 - (estimate - reference).squaredNorm() / total;
}

Moments empirical_moments(const std::vector<Vector>& states, std::size_t burn_in) {
  if (states.size() <= burn_in + 1) {
    throw ConfigError("empirical_moments: sequence must be longer than burn_in + 1");
  }
  const auto d = states.front().size();
  const auto n = states.size() - burn_in;
  Moments m;
  m.mean = Vector::Zero(d);
  for (std::size_t i = burn_in; i < states.size(); ++i) {
    m.mean += states[i];
  }
  m.mean /= static_cast<double>(n);
  m.covariance = Matrix::Zero(d, d);
  for (std::size_t i = burn_in; i < states.size(); ++i) {
    const Vector c = states[i] - m.mean;
    m.covariance.noalias() += c * c.transpose();
  }
  m.covariance /= static_cast<double>(n - 1);
  return m;
}

} // namespace rlip
