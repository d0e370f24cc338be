#include "rlip/reinforce.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "rlip/errors.hpp"
#include "rlip/parallel.hpp"
#include "rlip/random.hpp"

namespace rlip {

namespace {

// Fixed reduction block for gradient accumulation; independent of workers.
constexpr std::size_t kGradientBlock = 16;

int resolve_workers(int workers) { return workers > 0 ? workers : worker_count(); }

} // namespace

void StepSchedule::validate() const {
  if (!(c1 > 0.0) || !std::isfinite(c1)) {
    throw ConfigError("step schedule numerator c1 must be positive");
  }
  if (!(c2 > 0.0) || !std::isfinite(c2)) {
    throw ConfigError("step schedule offset c2 must be positive");
  }
}

void TrainConfig::validate(int param_count) const {
  if (horizon < 1) {
    throw ConfigError("train.T must be >= 1");
  }
  if (trajectories < 1) {
    throw ConfigError("train.L must be >= 1");
  }
  if (max_updates < 1) {
    throw ConfigError("train.N must be >= 1");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("train.beta must be a finite nonnegative number");
  }
  if (weights.size() != 0) {
    if (weights.size() != param_count) {
      throw ConfigError("train.weights must have one entry per policy parameter (" + std::to_string(param_count) +
                        ")");
    }
    if ((weights.array() <= 0.0).any()) {
      throw ConfigError("train.weights entries must be positive");
    }
  }
  schedule.validate();
  if (log_every < 1) {
    throw ConfigError("train.log_every must be >= 1");
  }
  if (patience < 0) {
    throw ConfigError("train.patience must be >= 0");
  }
  if (!(divergence_ceiling > 0.0)) {
    throw ConfigError("train.divergence_ceiling must be positive");
  }
  if (performance_trajectories < 0) {
    throw ConfigError("train.performance_trajectories must be >= 0");
  }
  if (performance == PerformanceMode::GroupMeans && performance_groups < 1) {
    throw ConfigError("train.performance_groups must be >= 1");
  }
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
  case StopReason::Threshold:
    return "threshold";
  case StopReason::MaxUpdates:
    return "max-updates";
  case StopReason::Patience:
    return "patience";
  }
  return "unknown";
}

StopReason stop_reason_from_string(std::string_view name) {
  if (name == "threshold") {
    return StopReason::Threshold;
  }
  if (name == "max-updates") {
    return StopReason::MaxUpdates;
  }
  if (name == "patience") {
    return StopReason::Patience;
  }
  throw ConfigError("unknown stop reason '" + std::string(name) + "'");
}

Vector estimate_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories, int workers) {
  const int d = policy.param_count();
  if (trajectories.empty()) {
    throw ConfigError("estimate_gradient: no trajectories");
  }
  const std::size_t n = trajectories.size();
  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<Vector> partial(blocks, Vector::Zero(d));
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * kGradientBlock);
        for (std::size_t l = b * kGradientBlock; l < end; ++l) {
          const Trajectory& h = trajectories[l];
          if (h.return_value != 0.0) {
            policy.accumulate_score_sum(h.states, h.actions, h.return_value, partial[b]);
          }
        }
      },
      resolve_workers(workers));
  Vector grad = Vector::Zero(d);
  for (const auto& p : partial) {
    grad += p;
  }
  return grad / static_cast<double>(n);
}

Vector reinforce_step(const VectorRef& theta, const VectorRef& grad, long long n, const TrainConfig& config) {
  if (n < 0) {
    throw ConfigError("reinforce_step: update index must be >= 0");
  }
  if (grad.size() != theta.size()) {
    throw ShapeError("reinforce_step: gradient and theta differ in size");
  }
  if (!grad.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite policy-gradient estimate at update " << n
        << "; rewards or log-density scores overflowed (check reward floor and policy std)";
    throw DivergenceError(msg.str());
  }
  const double step = config.schedule.step(n);
  if (config.beta == 0.0) {
    return theta + step * grad;
  }
  if (config.weights.size() == 0) {
    return theta + step * (grad - 2.0 * config.beta * theta);
  }
  return theta + step * (grad - 2.0 * config.beta * config.weights.cwiseProduct(theta));
}

double batch_performance(const std::vector<Trajectory>& batch, const RewardEnv& env, const TrainConfig& config) {
  if (config.performance == PerformanceMode::MeanState) {
    return policy_performance(batch, env);
  }
  Ensemble finals;
  finals.reserve(batch.size());
  for (const auto& h : batch) {
    finals.push_back(h.final_state());
  }
  KmeansOptions opts;
  opts.k = std::min<int>(config.performance_groups, static_cast<int>(finals.size()));
  opts.restarts = 3;
  opts.seed = config.seed;
  const KmeansResult groups = kmeans(finals, opts);
  double r = 0.0;
  for (const auto& m : groups.means) {
    r += env.reward_at(m);
  }
  return r / static_cast<double>(groups.means.size());
}

TrainResult train(const Policy& initial, const RewardEnv& env, const InitStateDist& init,
                  const TrainConfig& config, const TrainObserver& observer) {
  config.validate(initial.param_count());
  init.validate(initial.state_dim());
  if (initial.state_dim() != env.state_dim()) {
    throw ShapeError("policy state dimension does not match the forward model input");
  }
  const int workers = resolve_workers(config.workers);

  TrainResult result;
  result.policy = initial.clone();
  Policy& policy = *result.policy;
  TrainLog& log = result.log;
  log.stop_reason = StopReason::MaxUpdates;

  double best = -std::numeric_limits<double>::infinity();
  int stale_logs = 0;
  for (long long n = 0; n < config.max_updates; ++n) {
    const auto batch = generate_batch(policy, init, config.horizon, config.trajectories, env,
                                      {config.seed, stream::kTraining, static_cast<std::uint64_t>(n)}, workers);
    if (observer) {
      observer(n, policy, batch);
    }
    const Vector grad = estimate_gradient(policy, batch, workers);

    if (n % config.log_every == 0) {
      double r = 0.0;
      if (config.fresh_performance) {
        const int count = config.performance_trajectories > 0 ? config.performance_trajectories : config.trajectories;
        r = batch_performance(generate_batch(policy, init, config.horizon, count, env,
                                             {config.seed, stream::kPerformance, static_cast<std::uint64_t>(n)},
                                             workers),
                              env, config);
      } else {
        r = batch_performance(batch, env, config);
      }
      log.entries.push_back({n, r, grad.norm(), policy.theta().norm()});
      if (r > config.threshold) {
        log.stop_reason = StopReason::Threshold;
        break;
      }
      if (r > best) {
        best = r;
        stale_logs = 0;
      } else if (config.patience > 0 && ++stale_logs >= config.patience) {
        log.stop_reason = StopReason::Patience;
        break;
      }
    }

    Vector next = reinforce_step(policy.theta(), grad, n, config);
    const double norm = next.norm();
    if (!(norm <= config.divergence_ceiling)) {
      std::ostringstream msg;
      msg << "||theta|| = " << norm << " exceeded the divergence ceiling " << config.divergence_ceiling
          << " at update " << n << "; the iterates are not staying bounded, so reduce the step size c1 or "
          << "increase beta";
      throw DivergenceError(msg.str());
    }
    policy.set_theta(std::move(next));
    log.updates = n + 1;
  }
  return result;
}

SolveReport summarise(const Policy& policy, const Problem& problem, const SolveOptions& options) {
  if (options.eval_trajectories < 1) {
    throw ConfigError("analysis.ensemble must be >= 1");
  }
  const int workers = resolve_workers(options.train.workers);
  const RewardEnv& env = *problem.env;
  const auto batch = generate_batch(policy, problem.init, options.train.horizon, options.eval_trajectories, env,
                                    {options.train.seed, stream::kEvaluation, 0}, workers);
  Ensemble ensemble;
  ensemble.reserve(batch.size());
  for (const auto& h : batch) {
    ensemble.push_back(h.final_state());
  }

  SolveReport report;
  report.theta = policy.theta();
  report.mean = ensemble_mean(ensemble);
  report.reference = problem.reference;

  BootstrapOptions ci = options.ci;
  ci.clamp_nonnegative = ci.clamp_nonnegative || problem.nonnegative;
  if (options.bootstrap) {
    report.ci = bootstrap_ci(ensemble, ci);
  }
  if (problem.reference && problem.reference->size() >= 2) {
    report.r2 = r_squared(report.mean, *problem.reference);
  }

  if (options.kmeans_k > 0) {
    KmeansOptions km;
    km.k = options.kmeans_k;
    km.restarts = options.kmeans_restarts;
    km.seed = options.train.seed;
    const KmeansResult groups = kmeans(ensemble, km);
    for (std::size_t c = 0; c < groups.means.size(); ++c) {
      GroupSummary g;
      g.mean = groups.means[c];
      g.size = groups.sizes[c];
      if (options.bootstrap && g.size > 0) {
        Ensemble members;
        members.reserve(static_cast<std::size_t>(g.size));
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
          if (groups.labels[i] == static_cast<int>(c)) {
            members.push_back(ensemble[i]);
          }
        }
        BootstrapOptions gci = ci;
        gci.seed = ci.seed + c + 1;
        g.ci = bootstrap_ci(members, gci);
      }
      if (problem.reference && problem.reference->size() >= 2) {
        g.r2_reference = r_squared(g.mean, *problem.reference);
        g.r2_negated_reference = r_squared(g.mean, -*problem.reference);
      }
      report.groups.push_back(std::move(g));
    }
  }
  if (options.keep_ensemble) {
    report.ensemble = std::move(ensemble);
  }
  return report;
}

SolveReport solve(const Problem& problem, const SolveOptions& options) {
  if (!problem.env || !problem.initial_policy) {
    throw ConfigError("solve: problem needs a reward environment and an initial policy");
  }
  TrainResult trained = train(*problem.initial_policy, *problem.env, problem.init, options.train);
  SolveReport report = summarise(*trained.policy, problem, options);
  report.log = std::move(trained.log);
  if (!report.log.entries.empty()) {
    report.final_performance = report.log.entries.back().performance;
  }
  return report;
}

} // namespace rlip
