#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rlip/forward_models.hpp"
#include "rlip/policy.hpp"
#include "rlip/random.hpp"

namespace rlip {

enum class RewardForm { Reciprocal, Negative };
enum class Regularizer { None, SquaredNorm, BoundaryAbs };
/// How one squared misfit ||f - y_k||^2 is normalized before averaging over
/// the K samples: as is, or divided by the output dimension M.
enum class ResidualNormalizer { Sum, MeanPerEntry };

struct RewardSpec {
  RewardForm form = RewardForm::Reciprocal;
  double alpha = 0.0;
  Regularizer regularizer = Regularizer::None;
  double floor = 0.001;
  ResidualNormalizer normalizer = ResidualNormalizer::Sum;

  void validate() const;
};

/// Omega(x): 0, ||x||^2, or |x_0| + |x_{D-1}|.
[[nodiscard]] double regularizer_value(Regularizer kind, const VectorRef& x);

/// Forward model, observations and reward definition bundled together.
/// Immutable after construction and safe to share across threads.
class RewardEnv {
public:
  RewardEnv(std::shared_ptr<const ForwardModel> model, ObservationSet obs, RewardSpec spec);

  [[nodiscard]] const ForwardModel& model() const { return *model_; }
  [[nodiscard]] std::shared_ptr<const ForwardModel> model_ptr() const { return model_; }
  [[nodiscard]] const ObservationSet& observations() const { return obs_; }
  [[nodiscard]] const RewardSpec& spec() const { return spec_; }
  [[nodiscard]] int state_dim() const { return model_->input_dim(); }

  /// (1/K) sum_k rho(f(z), y_k), rho = ||.||^2 or ||.||^2 / M.
  [[nodiscard]] double residual(const VectorRef& z) const;

  /// Reciprocal: 1 / (residual(x+a) + floor + alpha Omega(x)).
  /// Negative:   -(residual(x+a) + alpha Omega(x)).
  /// Omega is evaluated at the pre-action state x.
  [[nodiscard]] double reward(const VectorRef& x, const VectorRef& a) const;

  /// reward(x, 0).
  [[nodiscard]] double reward_at(const VectorRef& x) const;

private:
  std::shared_ptr<const ForwardModel> model_;
  ObservationSet obs_;
  RewardSpec spec_;
  // (1/K) sum_k ||f - y_k||^2 = ||f - ybar||^2 + (1/K) sum_k ||y_k - ybar||^2
  Vector y_mean_;
  double y_spread_ = 0.0;
};

/// Free-function form of RewardEnv::reward.
[[nodiscard]] double reward(const RewardEnv& env, const VectorRef& x, const VectorRef& a);

enum class InitKind { FixedPoint, Gaussian, FiniteMixture };

/// Distribution of x_0. It does not depend on theta.
struct InitStateDist {
  InitKind kind = InitKind::FixedPoint;
  // FixedPoint: atoms[0]. Gaussian: mean = atoms[0], std = gaussian_std.
  // FiniteMixture: atoms with probabilities.
  std::vector<Vector> atoms;
  std::vector<double> probabilities;
  Vector gaussian_std;

  static InitStateDist fixed(Vector point);
  static InitStateDist gaussian(Vector mean, Vector std);
  static InitStateDist mixture(std::vector<Vector> atoms, std::vector<double> probabilities);

  void validate(int state_dim) const;
  [[nodiscard]] Vector sample(Rng& rng) const;
};

/// Length-T rollout. Column t of states/actions is (x_t, a_t).
struct Trajectory {
  Matrix states;
  Matrix actions;
  Vector rewards;
  double return_value = 0.0;  // (1/T) sum_t rewards[t]

  [[nodiscard]] int length() const { return static_cast<int>(states.cols()); }
  [[nodiscard]] Vector final_state() const { return states.col(states.cols() - 1); }
};

/// x_0 ~ init, a_t ~ pi(. | x_t), x_{t+1} = x_t + a_t; rewards are computed
/// eagerly. Throws ConfigError when horizon < 1.
[[nodiscard]] Trajectory generate_trajectory(const Policy& policy, const InitStateDist& init, int horizon,
                                             const RewardEnv& env, Rng& rng);

/// Identifies the rng substream of a batch of trajectories. Trajectory l of
/// the batch draws from make_stream(seed, {tag, index, l}).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t tag = 0;
  std::uint64_t index = 0;
};

/// L trajectories generated in parallel on independent substreams; the
/// result is identical for any worker count.
[[nodiscard]] std::vector<Trajectory> generate_batch(const Policy& policy, const InitStateDist& init, int horizon,
                                                     int count, const RewardEnv& env, const StreamKey& key,
                                                     int workers);

/// xbar_t = mean over trajectories of x_t, for each t.
[[nodiscard]] Matrix mean_states(const std::vector<Trajectory>& trajectories);

/// r = sum_t R(xbar_t, 0) over the given trajectories.
[[nodiscard]] double policy_performance(const std::vector<Trajectory>& trajectories, const RewardEnv& env);

/// Generates L fresh trajectories and returns r = sum_t R(xbar_t, 0).
[[nodiscard]] double policy_performance(const Policy& policy, const InitStateDist& init, int horizon, int count,
                                        const RewardEnv& env, const StreamKey& key, int workers);

} // namespace rlip
