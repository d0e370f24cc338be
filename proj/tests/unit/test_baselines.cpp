#include <gtest/gtest.h>

#include <cmath>

#include "rlip/analysis.hpp"
#include "rlip/baselines.hpp"
#include "rlip/errors.hpp"
#include "rlip/mdp.hpp"
#include "rlip/random.hpp"

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

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  m.diagonal() = vec(v);
  return m;
}

Matrix random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = n(rng);
  }
  return m;
}

Vector random_vector(int d, Rng& rng) { return random_matrix(d, 1, rng); }

} // namespace

TEST(Tikhonov, Cases) {
  EXPECT_TRUE(tikhonov_solution(Matrix::Identity(2, 2), vec({1, 2}), 0.0).isApprox(vec({1, 2})));
  EXPECT_TRUE(tikhonov_solution(diag({1, 2}), vec({1, 2}), 1.0).isApprox(vec({0.5, 0.8})));
  Rng rng = make_stream(1);
  const Matrix a = random_matrix(4, 4, rng);
  const Vector y = random_vector(4, rng);
  EXPECT_LT(tikhonov_solution(a, y, 1e8).norm(), 1e-6 * (a.transpose() * y).norm());
  EXPECT_THROW((void)tikhonov_solution(Matrix::Zero(2, 2), vec({1, 1}), 0.0), NumericError);
}

TEST(Tikhonov, SatisfiesNormalEquations) {
  Rng rng = make_stream(2);
  const Matrix a = random_matrix(5, 3, rng);
  const Vector y = random_vector(5, rng);
  const Vector x = tikhonov_solution(a, y, 0.3);
  EXPECT_LT(((a.transpose() * a + 0.3 * Matrix::Identity(3, 3)) * x - a.transpose() * y).norm(), 1e-12);
}

TEST(PseudoInverse, Cases) {
  EXPECT_TRUE(pseudo_inverse_solution(Matrix::Identity(3, 3), vec({1, 2, 3})).isApprox(vec({1, 2, 3})));
  Matrix row(1, 2);
  row << 1, 1;
  EXPECT_TRUE(pseudo_inverse_solution(row, vec({2})).isApprox(vec({1, 1})));
  EXPECT_EQ(pseudo_inverse_solution(Matrix::Zero(2, 2), vec({1, 2})), Vector::Zero(2));
}

TEST(BuildB, Cases) {
  EXPECT_NEAR(build_B(Matrix::Constant(1, 1, 1.0), 0.1, 0.0)(0, 0), 0.1, 1e-15);
  EXPECT_THROW((void)build_B(Matrix::Constant(1, 1, 1.0), 0.4, 0.0), ConfigError);
  EXPECT_TRUE(build_B(diag({1, 2}), 0.05, 1.0).isApprox(diag({0.1, 0.25})));
  EXPECT_NEAR(omega_upper_bound(Matrix::Constant(1, 1, 1.0), 0.0), 1.0 / 3.0, 1e-12);
}

TEST(SpectralNorm, MatchesSvd) {
  Rng rng = make_stream(3);
  const Matrix a = random_matrix(6, 4, rng);
  const double s = Eigen::JacobiSVD<Matrix>(a).singularValues()[0];
  EXPECT_NEAR(spectral_norm(a, 1000, 1e-14), s, 1e-8 * s);
}

TEST(Invariant, Example1) {
  const auto g = invariant_dist_example1(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_EQ(g.mean, Vector::Zero(2));
  EXPECT_EQ(g.cov, Matrix::Identity(2, 2));
}

TEST(Invariant, Example2Scalars) {
  const auto a = invariant_dist_example2(vec({1.0}), Matrix::Constant(1, 1, 0.25), 0.0);
  EXPECT_NEAR(a.mean[0], 4.0, 1e-14);
  EXPECT_NEAR(a.cov(0, 0), 0.0, 1e-15);
  const auto b = invariant_dist_example2(vec({0.0}), Matrix::Constant(1, 1, 0.5), 1.0);
  EXPECT_NEAR(b.cov(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(Invariant, Example1ChainMoments) {
  const Vector theta = vec({0.5, -1.0});
  Matrix sigma(2, 2);
  sigma << 0.5, 0.1, 0.1, 0.2;
  const AffinePolicyI p(theta, sigma);
  Rng rng = make_stream(4);
  std::vector<Vector> states;
  Vector x = Vector::Zero(2);
  for (int t = 0; t < 100 + 10000; ++t) {
    states.push_back(x);
    x += p.sample_action(x, rng);
  }
  const auto m = empirical_moments(states, 100);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(m.mean[i] - theta[i]), 4.0 * std::sqrt(sigma(i, i) / 10000.0));
  }
}

TEST(Invariant, Example2ChainMoments) {
  Rng rng = make_stream(5);
  const Matrix a = random_matrix(3, 3, rng);
  const double eps = 0.05;
  const double omega = 0.6 * omega_upper_bound(a, eps);
  const Vector theta = random_vector(3, rng);
  const auto p = AffinePolicyII::from_operator(theta, a, omega, eps, 0.3);
  const auto law = invariant_dist_example2(theta, p.b_matrix(), 0.3);
  std::vector<Vector> states;
  Vector x = law.mean;
  for (int t = 0; t < 100000; ++t) {
    states.push_back(x);
    x += p.sample_action(x, rng);
  }
  const auto m = empirical_moments(states, 0);
  EXPECT_LT((m.covariance - law.cov).norm() / law.cov.norm(), 0.1);
}

TEST(Example2ThetaStar, ScalarAndForms) {
  const Matrix one = Matrix::Constant(1, 1, 1.0);
  EXPECT_NEAR(example2_theta_star(one, vec({2.0}), 0.0, Matrix::Constant(1, 1, 0.1))[0], 0.2, 1e-14);
  Rng rng = make_stream(6);
  for (int i = 0; i < 20; ++i) {
    const Matrix a = random_matrix(4, 4, rng);
    const Vector y = random_vector(4, rng);
    const Matrix b = build_B(a, 0.5 * omega_upper_bound(a, 0.1), 0.1);
    const Vector direct = example2_theta_star(a, y, 0.2, b);
    const Vector simple = example2_theta_star_simplified(a, y, 0.2, b);
    EXPECT_LT((direct - simple).norm(), 1e-10 * simple.norm());
  }
  const Matrix a = random_matrix(4, 4, rng);
  const Vector y = random_vector(4, rng);
  EXPECT_TRUE(example2_theta_star(a, y, 1e-12, Matrix::Identity(4, 4)).isApprox(pseudo_inverse_solution(a, y), 1e-8));
}

TEST(Landweber, ScalarStep) {
  Rng rng = make_stream(7);
  const Vector x =
      landweber_iterate(Matrix::Constant(1, 1, 1.0), vec({2.0}), vec({0.0}), 0.5, 0.0, 0.0, 0.0, rng);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
}

TEST(Landweber, PlainAndDampedForms) {
  Rng rng = make_stream(8);
  for (int i = 0; i < 20; ++i) {
    const Matrix a = random_matrix(4, 4, rng);
    const Vector y = random_vector(4, rng);
    const Vector x = random_vector(4, rng);
    const double omega = 0.1;
    const Vector plain = x + omega * a.transpose() * (y - a * x);
    const Vector got = landweber_iterate(a, y, x, omega, 0.0, 0.0, 0.0, rng);
    EXPECT_LT((got - plain).norm(), 1e-12 * (1.0 + plain.norm()));
    const double eps = 0.3;
    const Vector damped = (1.0 - omega * eps) * x + omega * a.transpose() * (y - a * x);
    const Vector got2 = landweber_iterate(a, y, x, omega, eps, eps, 0.0, rng);
    EXPECT_LT((got2 - damped).norm(), 1e-12 * (1.0 + damped.norm()));
  }
}

TEST(ClosedFormJ, DeterministicLimit) {
  Rng rng = make_stream(9);
  const Matrix a = random_matrix(3, 3, rng);
  const Vector y = random_vector(3, rng);
  const Vector theta = pseudo_inverse_solution(a, y);
  const auto j = closed_form_JT(a, y, theta, Matrix::Zero(3, 3), 0.0, 4, Vector::Zero(3));
  EXPECT_NEAR(j.value, -(a * theta - y).squaredNorm(), 1e-12);
}

TEST(ClosedFormJ, ScalarHandValue) {
  const Matrix one = Matrix::Constant(1, 1, 1.0);
  EXPECT_NEAR(closed_form_JT(one, vec({0.0}), vec({1.0}), one, 0.0, 2, vec({0.0})).value, -2.0, 1e-15);
}

TEST(ClosedFormJ, GradientMatchesFiniteDifference) {
  Rng rng = make_stream(10);
  const Matrix a = random_matrix(3, 3, rng);
  const Vector y = random_vector(3, rng);
  const Vector theta = random_vector(3, rng);
  const Matrix sigma = 0.2 * Matrix::Identity(3, 3);
  const Vector x0 = random_vector(3, rng);
  const auto j = closed_form_JT(a, y, theta, sigma, 0.3, 5, x0);
  Vector fd(3);
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-5;
    Vector up = theta;
    Vector down = theta;
    up[k] += h;
    down[k] -= h;
    fd[k] = (closed_form_JT(a, y, up, sigma, 0.3, 5, x0).value - closed_form_JT(a, y, down, sigma, 0.3, 5, x0).value) /
            (2 * h);
  }
  EXPECT_LT((j.gradient - fd).norm(), 1e-8 * fd.norm());
}

TEST(ClosedFormJ, MatchesMonteCarlo) {
  const Matrix a = Matrix::Constant(1, 1, 1.3);
  const Vector y = vec({0.7});
  const Vector theta = vec({0.4});
  const Matrix sigma = Matrix::Constant(1, 1, 0.25);
  const Vector x0 = vec({0.2});
  RewardSpec s;
  s.form = RewardForm::Negative;
  s.alpha = 0.1;
  s.regularizer = Regularizer::SquaredNorm;
  const RewardEnv env(std::make_shared<LinearModel>(a), single_observation(y), s);
  const AffinePolicyI p(theta, sigma);
  const int n = 200000;
  const auto batch = generate_batch(p, InitStateDist::fixed(x0), 2, n, env, {3, 1, 0}, 0);
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& h : batch) {
    sum += h.return_value;
    sq += h.return_value * h.return_value;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
  EXPECT_LT(std::abs(mean - closed_form_JT(a, y, theta, sigma, 0.1, 2, x0).value), 4.0 * se);
}

TEST(ClosedFormJ, MaximiserIsShiftedTikhonov) {
  Rng rng = make_stream(11);
  const Matrix a = random_matrix(4, 4, rng);
  const Vector y = random_vector(4, rng);
  const double alpha = 0.1;
  const int horizon = 5;
  const Vector star = tikhonov_solution(a, y, alpha * (horizon - 1) / horizon);
  const auto j = closed_form_JT(a, y, star, 0.01 * Matrix::Identity(4, 4), alpha, horizon, Vector::Zero(4));
  EXPECT_LT(j.gradient.norm(), 1e-10);
}
