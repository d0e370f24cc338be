#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "rlip/analysis.hpp"
#include "rlip/baselines.hpp"
#include "rlip/errors.hpp"
#include "rlip/reinforce.hpp"

using namespace rlip;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    out[i++] = x;
  }
  return out;
}

Trajectory one_step(double x, double a, double ret) {
  Trajectory h;
  h.states = Matrix::Constant(1, 1, x);
  h.actions = Matrix::Constant(1, 1, a);
  h.rewards = Vector::Constant(1, ret);
  h.return_value = ret;
  return h;
}

std::shared_ptr<RewardEnv> scalar_env(double a, double y, RewardForm form, double alpha) {
  RewardSpec s;
  s.form = form;
  s.alpha = alpha;
  s.regularizer = alpha > 0 ? Regularizer::SquaredNorm : Regularizer::None;
  return std::make_shared<RewardEnv>(std::make_shared<LinearModel>(Matrix::Constant(1, 1, a)),
                                     single_observation(Vector::Constant(1, y)), s);
}

} // namespace

TEST(Schedule, Step) {
  const StepSchedule s{0.001, 50000.0};
  EXPECT_DOUBLE_EQ(s.step(0), 2e-8);
  EXPECT_DOUBLE_EQ(s.step(50000), 1e-8);
  EXPECT_THROW((StepSchedule{0.0, 1.0}.validate()), ConfigError);
}

TEST(Estimator, ZeroReturnsGiveZero) {
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  const auto g = estimate_gradient(p, {one_step(0.0, 0.5, 0.0), one_step(1.0, -0.3, 0.0)}, 1);
  EXPECT_EQ(g, Vector::Zero(1));
}

TEST(Estimator, SingleStepHandValue) {
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  EXPECT_NEAR(estimate_gradient(p, {one_step(0.0, 0.5, 2.0)}, 1)[0], 1.0, 1e-15);
}

TEST(Estimator, IndependentOfWorkers) {
  MlpPolicy p(MlpArchitecture::for_state(3, {6, 6}, 3, 0.05));
  p.init_glorot(3);
  RewardSpec s;
  s.alpha = 0.1;
  s.regularizer = Regularizer::BoundaryAbs;
  const RewardEnv env(std::make_shared<AutoConvModel>(3), single_observation(vec({0.0, 0.2, 0.5})), s);
  const auto batch = generate_batch(p, InitStateDist::fixed(Vector::Zero(3)), 5, 53, env, {1, 2, 3}, 1);
  const Vector g1 = estimate_gradient(p, batch, 1);
  const Vector g4 = estimate_gradient(p, batch, 4);
  EXPECT_EQ(g1, g4);
}

TEST(Estimator, UnbiasedAgainstClosedForm) {
  const Matrix a = Matrix::Constant(1, 1, 0.8);
  const Vector y = vec({0.5});
  const Vector theta = vec({-0.2});
  const Matrix sigma = Matrix::Constant(1, 1, 0.3);
  const Vector x0 = vec({0.4});
  const double alpha = 0.2;
  const int horizon = 3;
  const auto env = scalar_env(0.8, 0.5, RewardForm::Negative, alpha);
  const AffinePolicyI p(theta, sigma);
  const int n = 100000;
  const auto batch = generate_batch(p, InitStateDist::fixed(x0), horizon, n, *env, {17, 1, 0}, 0);
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& h : batch) {
    Vector g = Vector::Zero(1);
    p.accumulate_score_sum(h.states, h.actions, h.return_value, g);
    sum += g[0];
    sq += g[0] * g[0];
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
  const double exact = closed_form_JT(a, y, theta, sigma, alpha, horizon, x0).gradient[0];
  EXPECT_LT(std::abs(mean - exact), 4.0 * se);
}

TEST(Step, FixedPointAndHandUpdate) {
  TrainConfig c;
  c.schedule = {1.0, 10.0};  // a_0 = 0.1
  EXPECT_EQ(reinforce_step(vec({1, 1}), Vector::Zero(2), 0, c), vec({1, 1}));
  c.beta = 0.5;
  c.weights = vec({1, 1});
  EXPECT_TRUE(reinforce_step(vec({1, 1}), vec({1, 0}), 0, c).isApprox(vec({1.0, 0.9})));
}

TEST(Step, RejectsNonFiniteGradient) {
  TrainConfig c;
  EXPECT_THROW((void)reinforce_step(vec({1}), vec({std::numeric_limits<double>::infinity()}), 0, c),
               DivergenceError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.beta = -0.1;
  EXPECT_THROW(c.validate(1), ConfigError);
  c.beta = 0.0;
  c.horizon = 0;
  EXPECT_THROW(c.validate(1), ConfigError);
  c.horizon = 3;
  c.weights = vec({1, 1});
  EXPECT_THROW(c.validate(3), ConfigError);
}

TEST(Train, BudgetExhaustion) {
  const auto env = scalar_env(1.0, 1.0, RewardForm::Reciprocal, 0.0);
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  TrainConfig c;
  c.horizon = 3;
  c.trajectories = 8;
  c.max_updates = 5;
  c.log_every = 1;
  const auto res = train(p, *env, InitStateDist::fixed(Vector::Zero(1)), c);
  EXPECT_EQ(res.log.updates, 5);
  EXPECT_EQ(res.log.stop_reason, StopReason::MaxUpdates);
  EXPECT_EQ(to_string(res.log.stop_reason), "max-updates");
}

TEST(Train, ThresholdMetAtFirstLog) {
  const auto env = scalar_env(1.0, 1.0, RewardForm::Reciprocal, 0.0);
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  TrainConfig c;
  c.horizon = 3;
  c.trajectories = 8;
  c.max_updates = 100;
  c.threshold = 0.0;
  const auto res = train(p, *env, InitStateDist::fixed(Vector::Zero(1)), c);
  EXPECT_EQ(res.log.stop_reason, StopReason::Threshold);
  EXPECT_EQ(res.log.updates, 0);
  ASSERT_EQ(res.log.entries.size(), 1u);
}

TEST(Train, ObserverSeesEveryBatch) {
  const auto env = scalar_env(1.0, 1.0, RewardForm::Negative, 0.0);
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  TrainConfig c;
  c.horizon = 2;
  c.trajectories = 4;
  c.max_updates = 7;
  long long calls = 0;
  const auto res = train(p, *env, InitStateDist::fixed(Vector::Zero(1)), c,
                         [&](long long n, const Policy&, const std::vector<Trajectory>& batch) {
                           EXPECT_EQ(n, calls);
                           EXPECT_EQ(batch.size(), 4u);
                           ++calls;
                         });
  EXPECT_EQ(calls, 7);
}

TEST(Train, DivergenceCeiling) {
  const auto env = scalar_env(1.0, 1.0, RewardForm::Negative, 0.0);
  const AffinePolicyI p(Vector::Zero(1), Matrix::Identity(1, 1));
  TrainConfig c;
  c.horizon = 2;
  c.trajectories = 4;
  c.max_updates = 50;
  c.schedule = {1e6, 1.0};
  c.divergence_ceiling = 10.0;
  EXPECT_THROW((void)train(p, *env, InitStateDist::fixed(Vector::Zero(1)), c), DivergenceError);
}

TEST(Train, DeterministicAcrossWorkers) {
  MlpPolicy p(MlpArchitecture::for_state(4, {8, 8}, 3, 0.05));
  p.init_glorot(2, {0.1, -1.0});
  RewardSpec s;
  s.alpha = 0.2;
  s.regularizer = Regularizer::BoundaryAbs;
  const RewardEnv env(std::make_shared<AutoConvModel>(4), single_observation(vec({0.0, 0.3, 0.6, 0.7})), s);
  TrainConfig c;
  c.horizon = 4;
  c.trajectories = 40;
  c.max_updates = 15;
  c.schedule = {0.5, 100.0};
  c.log_every = 5;
  c.workers = 1;
  const auto a = train(p, env, InitStateDist::fixed(Vector::Zero(4)), c);
  c.workers = 3;
  const auto b = train(p, env, InitStateDist::fixed(Vector::Zero(4)), c);
  EXPECT_EQ(a.policy->theta(), b.policy->theta());
  ASSERT_EQ(a.log.entries.size(), b.log.entries.size());
  for (std::size_t i = 0; i < a.log.entries.size(); ++i) {
    EXPECT_EQ(a.log.entries[i].performance, b.log.entries[i].performance);
  }
}

TEST(Solve, ScalarPseudoInverse) {
  // A = 2, y = 4, alpha = beta = 0: the chain's invariant mean is theta and
  // training pushes theta to A^+ y = 2.
  Problem pr;
  pr.env = scalar_env(2.0, 4.0, RewardForm::Negative, 0.0);
  pr.init = InitStateDist::fixed(Vector::Zero(1));
  pr.initial_policy = std::make_shared<AffinePolicyI>(Vector::Zero(1), Matrix::Constant(1, 1, 0.01));
  SolveOptions o;
  o.train.horizon = 5;
  o.train.trajectories = 64;
  o.train.max_updates = 3000;
  o.train.schedule = {0.5, 50.0};
  o.train.seed = 4;
  o.eval_trajectories = 4000;
  o.bootstrap = false;
  o.keep_ensemble = true;
  const auto rep = solve(pr, o);
  double var = 0.0;
  for (const auto& x : rep.ensemble) {
    var += (x[0] - rep.mean[0]) * (x[0] - rep.mean[0]);
  }
  const double se = std::sqrt(var / (rep.ensemble.size() - 1) / rep.ensemble.size());
  EXPECT_LT(std::abs(rep.mean[0] - 2.0), 3.0 * se + 0.01);
  EXPECT_NEAR(rep.theta[0], 2.0, 0.02);
}

TEST(Solve, PerfectEstimatesGiveUnitR2) {
  const Vector ref = vec({0.0, 1.0, 2.0});
  Problem pr;
  pr.env = std::make_shared<RewardEnv>(std::make_shared<LinearModel>(Matrix::Identity(3, 3)), single_observation(ref),
                                       RewardSpec{});
  pr.init = InitStateDist::fixed(ref);
  pr.initial_policy = std::make_shared<AffinePolicyI>(ref, 1e-24 * Matrix::Identity(3, 3));
  pr.reference = ref;
  SolveOptions o;
  o.eval_trajectories = 50;
  o.bootstrap = false;
  const auto rep = summarise(*pr.initial_policy, pr, o);
  ASSERT_TRUE(rep.r2.has_value());
  EXPECT_NEAR(*rep.r2, 1.0, 1e-12);
}

TEST(Solve, MixtureInitOnSymmetricProblemSplitsBySign) {
  // With T = 1 the estimate is x_0 itself.
  const int d = 8;
  const Vector ref = exact_solution(d);
  const auto model = std::make_shared<AutoConvModel>(d);
  Problem pr;
  pr.env = std::make_shared<RewardEnv>(model, single_observation(autoconv_forward(*model, ref)), RewardSpec{});
  pr.init = InitStateDist::mixture({ref, Vector(-ref)}, {0.5, 0.5});
  pr.initial_policy = std::make_shared<AffinePolicyI>(Vector::Zero(d), 1e-4 * Matrix::Identity(d, d));
  pr.reference = ref;
  SolveOptions o;
  o.train.horizon = 1;
  o.eval_trajectories = 400;
  o.kmeans_k = 2;
  o.ci.resamples = 200;
  const auto rep = summarise(*pr.initial_policy, pr, o);
  ASSERT_EQ(rep.groups.size(), 2u);
  EXPECT_LT(rep.groups[0].mean.dot(rep.groups[1].mean), 0.0);
  for (const auto& g : rep.groups) {
    ASSERT_TRUE(g.ci.has_value());
    EXPECT_GT(std::max(*g.r2_reference, *g.r2_negated_reference), 0.99);
  }
}
