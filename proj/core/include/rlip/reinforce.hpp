#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlip/analysis.hpp"
#include "rlip/mdp.hpp"
#include "rlip/policy.hpp"

namespace rlip {

/// a_n = c1 / (c2 + n). Sum a_n diverges and sum a_n^2 converges, as
/// stochastic approximation requires.
struct StepSchedule {
  double c1 = 0.001;
  double c2 = 50000.0;

  [[nodiscard]] double step(long long n) const { return c1 / (c2 + static_cast<double>(n)); }
  void validate() const;
};

/// How the performance indicator r is computed at log points.
enum class PerformanceMode {
  /// r = sum_t R(xbar_t, 0) with xbar_t the mean state at step t.
  MeanState,
  /// Final states split by k-means; r = mean over groups of R(group mean, 0).
  GroupMeans,
};

struct TrainConfig {
  int horizon = 10;            // T
  int trajectories = 1000;     // L
  int max_updates = 8000;      // N
  double threshold = std::numeric_limits<double>::infinity();  // H0
  double beta = 0.0;
  Vector weights;              // empty means all ones
  StepSchedule schedule;
  std::uint64_t seed = 0;
  int log_every = 100;
  int patience = 0;            // logs without improvement before stopping; 0 disables
  double divergence_ceiling = 1e6;
  bool fresh_performance = false;
  int performance_trajectories = 0;  // fresh batch size; 0 means L
  PerformanceMode performance = PerformanceMode::MeanState;
  int performance_groups = 2;
  int workers = 0;             // 0 means worker_count()

  void validate(int param_count) const;
};

enum class StopReason { Threshold, MaxUpdates, Patience };
[[nodiscard]] std::string_view to_string(StopReason reason);
[[nodiscard]] StopReason stop_reason_from_string(std::string_view name);

struct TrainLogEntry {
  long long update = 0;
  double performance = 0.0;
  double grad_norm = 0.0;
  double theta_norm = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  StopReason stop_reason = StopReason::MaxUpdates;
  long long updates = 0;
};

/// (1/L) sum_l R(h^l) sum_t grad log pi(a^l_t | x^l_t). Trajectories are
/// reduced in fixed blocks so the sum does not depend on the worker count.
[[nodiscard]] Vector estimate_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories,
                                       int workers = 0);

/// theta + a_n (grad - 2 beta w .* theta). Throws DivergenceError on a
/// non-finite gradient.
[[nodiscard]] Vector reinforce_step(const VectorRef& theta, const VectorRef& grad, long long n,
                                    const TrainConfig& config);

/// Called with every training batch before the update it drives.
using TrainObserver = std::function<void(long long n, const Policy& policy, const std::vector<Trajectory>& batch)>;

struct TrainResult {
  std::unique_ptr<Policy> policy;
  TrainLog log;
};

/// REINFORCE training loop. Each update draws L trajectories, logs the
/// performance every `log_every` updates (stopping once it exceeds H0 or
/// patience runs out) and takes one gradient step. Throws DivergenceError if
/// ||theta|| exceeds the configured ceiling.
[[nodiscard]] TrainResult train(const Policy& initial, const RewardEnv& env, const InitStateDist& init,
                                const TrainConfig& config, const TrainObserver& observer = {});

/// Performance indicator of `policy` on a batch, per `config.performance`.
[[nodiscard]] double batch_performance(const std::vector<Trajectory>& batch, const RewardEnv& env,
                                       const TrainConfig& config);

struct Problem {
  std::shared_ptr<const RewardEnv> env;
  InitStateDist init;
  std::shared_ptr<const Policy> initial_policy;
  std::optional<Vector> reference;
  bool nonnegative = false;
};

struct SolveOptions {
  TrainConfig train;
  int eval_trajectories = 10000;
  int kmeans_k = 0;  // 0 disables grouping
  int kmeans_restarts = 10;
  bool bootstrap = true;
  BootstrapOptions ci;
  bool keep_ensemble = false;
};

struct GroupSummary {
  Vector mean;
  int size = 0;
  std::optional<CiBand> ci;
  std::optional<double> r2_reference;
  std::optional<double> r2_negated_reference;
};

struct SolveReport {
  Vector theta;
  TrainLog log;
  Vector mean;
  std::optional<CiBand> ci;
  std::vector<GroupSummary> groups;
  std::optional<double> r2;
  std::optional<Vector> reference;
  double final_performance = std::numeric_limits<double>::quiet_NaN();
  /// Named closed-form vectors reported next to the trained result.
  std::vector<std::pair<std::string, Vector>> oracles;
  Ensemble ensemble;  // only filled when keep_ensemble is set
};

/// Trains pi_theta, rolls out `eval_trajectories` trajectories, takes each
/// x_{T-1} as a solution estimate and summarises the ensemble.
[[nodiscard]] SolveReport solve(const Problem& problem, const SolveOptions& options);

/// Ensemble statistics for an already trained policy.
[[nodiscard]] SolveReport summarise(const Policy& policy, const Problem& problem, const SolveOptions& options);

} // namespace rlip
