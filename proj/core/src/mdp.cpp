#include "rlip/mdp.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rlip/errors.hpp"
#include "rlip/parallel.hpp"

namespace rlip {

void RewardSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("reward alpha must be a finite nonnegative number");
  }
  if (form == RewardForm::Reciprocal && !(floor > 0.0)) {
    throw ConfigError("reciprocal reward needs a positive floor");
  }
}

double regularizer_value(Regularizer kind, const VectorRef& x) {
  switch (kind) {
  case Regularizer::None:
    return 0.0;
  case Regularizer::SquaredNorm:
    return x.squaredNorm();
  case Regularizer::BoundaryAbs:
    if (x.size() == 0) {
      return 0.0;
    }
    return std::abs(x[0]) + std::abs(x[x.size() - 1]);
  }
  return 0.0;
}

RewardEnv::RewardEnv(std::shared_ptr<const ForwardModel> model, ObservationSet obs, RewardSpec spec)
    : model_(std::move(model)), obs_(std::move(obs)), spec_(spec) {
  if (!model_) {
    throw ConfigError("reward environment needs a forward model");
  }
  spec_.validate();
  if (obs_.samples.empty()) {
    throw ConfigError("reward environment needs at least one observation");
  }
  const int m = model_->output_dim();
  y_mean_ = Vector::Zero(m);
  for (const auto& y : obs_.samples) {
    if (y.size() != m) {
      throw ShapeError("observation dimension does not match the forward model output");
    }
    y_mean_ += y;
  }
  y_mean_ /= static_cast<double>(obs_.samples.size());
  double spread = 0.0;
  for (const auto& y : obs_.samples) {
    spread += (y - y_mean_).squaredNorm();
  }
  y_spread_ = spread / static_cast<double>(obs_.samples.size());
}

double RewardEnv::residual(const VectorRef& z) const {
  const Vector fz = model_->eval(z);
  double r = (fz - y_mean_).squaredNorm() + y_spread_;
  if (spec_.normalizer == ResidualNormalizer::MeanPerEntry) {
    r /= static_cast<double>(fz.size());
  }
  return r;
}

double RewardEnv::reward(const VectorRef& x, const VectorRef& a) const {
  const double resid = residual(x + a);
  const double reg = spec_.alpha == 0.0 ? 0.0 : spec_.alpha * regularizer_value(spec_.regularizer, x);
  if (spec_.form == RewardForm::Reciprocal) {
    return 1.0 / (resid + spec_.floor + reg);
  }
  return -(resid + reg);
}

double RewardEnv::reward_at(const VectorRef& x) const { return reward(x, Vector::Zero(x.size())); }

double reward(const RewardEnv& env, const VectorRef& x, const VectorRef& a) { return env.reward(x, a); }

// ---------------------------------------------------------------------------

InitStateDist InitStateDist::fixed(Vector point) {
  InitStateDist d;
  d.kind = InitKind::FixedPoint;
  d.atoms.push_back(std::move(point));
  d.probabilities = {1.0};
  return d;
}

InitStateDist InitStateDist::gaussian(Vector mean, Vector std) {
  InitStateDist d;
  d.kind = InitKind::Gaussian;
  d.atoms.push_back(std::move(mean));
  d.gaussian_std = std::move(std);
  return d;
}

InitStateDist InitStateDist::mixture(std::vector<Vector> atoms, std::vector<double> probabilities) {
  InitStateDist d;
  d.kind = InitKind::FiniteMixture;
  d.atoms = std::move(atoms);
  d.probabilities = std::move(probabilities);
  return d;
}

void InitStateDist::validate(int state_dim) const {
  if (atoms.empty()) {
    throw ConfigError("initial-state distribution has no atoms");
  }
  for (const auto& a : atoms) {
    if (a.size() != state_dim) {
      throw ShapeError("initial state has dimension " + std::to_string(a.size()) + ", expected " +
                       std::to_string(state_dim));
    }
  }
  if (kind == InitKind::Gaussian) {
    if (gaussian_std.size() != state_dim || (gaussian_std.array() < 0.0).any()) {
      throw ConfigError("gaussian initial state needs a nonnegative std vector of matching dimension");
    }
  }
  if (kind == InitKind::FiniteMixture) {
    if (probabilities.size() != atoms.size()) {
      throw ConfigError("mixture needs one probability per atom");
    }
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    for (double p : probabilities) {
      if (!(p >= 0.0)) {
        throw ConfigError("mixture probabilities must be nonnegative");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("mixture probabilities must sum to 1");
    }
  }
}

Vector InitStateDist::sample(Rng& rng) const {
  switch (kind) {
  case InitKind::FixedPoint:
    return atoms.front();
  case InitKind::Gaussian: {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x = atoms.front();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] += gaussian_std[i] * normal(rng);
    }
    return x;
  }
  case InitKind::FiniteMixture: {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      cumulative += probabilities[i];
      if (u < cumulative) {
        return atoms[i];
      }
    }
    return atoms.back();
  }
  }
  return atoms.front();
}

// ---------------------------------------------------------------------------

Trajectory generate_trajectory(const Policy& policy, const InitStateDist& init, int horizon, const RewardEnv& env,
                               Rng& rng) {
  if (horizon < 1) {
    throw ConfigError("trajectory length T must be >= 1");
  }
  const int d = policy.state_dim();
  Trajectory traj;
  traj.states.resize(d, horizon);
  traj.actions.resize(d, horizon);
  traj.rewards.resize(horizon);
  Vector x = init.sample(rng);
  for (int t = 0; t < horizon; ++t) {
    const Vector a = policy.sample_action(x, rng);
    traj.states.col(t) = x;
    traj.actions.col(t) = a;
    traj.rewards[t] = env.reward(x, a);
    x += a;
  }
  traj.return_value = traj.rewards.sum() / static_cast<double>(horizon);
  return traj;
}

std::vector<Trajectory> generate_batch(const Policy& policy, const InitStateDist& init, int horizon, int count,
                                       const RewardEnv& env, const StreamKey& key, int workers) {
  if (count < 1) {
    throw ConfigError("number of trajectories L must be >= 1");
  }
  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  parallel_for(
      out.size(),
      [&](std::size_t l) {
        Rng rng = make_stream(key.seed, {key.tag, key.index, static_cast<std::uint64_t>(l)});
        out[l] = generate_trajectory(policy, init, horizon, env, rng);
      },
      workers);
  return out;
}

Matrix mean_states(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) {
    throw ConfigError("mean_states: no trajectories");
  }
  Matrix mean = Matrix::Zero(trajectories.front().states.rows(), trajectories.front().states.cols());
  for (const auto& traj : trajectories) {
    mean += traj.states;
  }
  return mean / static_cast<double>(trajectories.size());
}

double policy_performance(const std::vector<Trajectory>& trajectories, const RewardEnv& env) {
  const Matrix xbar = mean_states(trajectories);
  double r = 0.0;
  for (Eigen::Index t = 0; t < xbar.cols(); ++t) {
    r += env.reward_at(xbar.col(t));
  }
  return r;
}

double policy_performance(const Policy& policy, const InitStateDist& init, int horizon, int count,
                          const RewardEnv& env, const StreamKey& key, int workers) {
  return policy_performance(generate_batch(policy, init, horizon, count, env, key, workers), env);
}

} // namespace rlip
