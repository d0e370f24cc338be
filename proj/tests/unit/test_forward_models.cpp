#include <gtest/gtest.h>

#include <cmath>

#include "rlip/errors.hpp"
#include "rlip/forward_models.hpp"
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

// O(D^2) reference straight from the trapezoid rule on t_j = j h.
Vector trapezoid_reference(const Vector& x) {
  const auto d = x.size();
  const double h = 1.0 / static_cast<double>(d - 1);
  Vector y = Vector::Zero(d);
  for (Eigen::Index j = 1; j < d; ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double w = (k == 0 || k == j) ? 0.5 : 1.0;
      s += w * x[j - k] * x[k];
    }
    y[j] = h * s;
  }
  return y;
}

} // namespace

TEST(LinearModel, HandProducts) {
  EXPECT_TRUE(linear_apply(LinearModel(Matrix::Identity(2, 2)), vec({1, 2})).isApprox(vec({1, 2})));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() = vec({1, 2});
  EXPECT_TRUE(linear_apply(LinearModel(d), vec({1, 2})).isApprox(vec({1, 4})));
  Matrix u(2, 2);
  u << 1, 1, 0, 1;
  EXPECT_TRUE(linear_apply(LinearModel(u), vec({1, 1})).isApprox(vec({2, 1})));
}

TEST(LinearModel, RejectsWrongInputSize) {
  const LinearModel m(Matrix::Identity(3, 3));
  EXPECT_THROW((void)m.eval(vec({1, 2})), ShapeError);
}

TEST(AutoConv, ZeroInputGivesZero) {
  const AutoConvModel m(64);
  EXPECT_EQ(autoconv_forward(m, Vector::Zero(64)), Vector::Zero(64));
}

TEST(AutoConv, ThreePointHandCase) {
  const AutoConvModel m(3);
  const Vector y = autoconv_forward(m, Vector::Ones(3));
  EXPECT_NEAR(y[0], 0.0, 1e-15);
  EXPECT_NEAR(y[1], 0.5, 1e-15);
  EXPECT_NEAR(y[2], 1.0, 1e-15);
}

TEST(AutoConv, FirstEntryAlwaysZero) {
  const AutoConvModel m(64);
  EXPECT_EQ(autoconv_forward(m, exact_solution(64))[0], 0.0);
  Rng rng = make_stream(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    Vector x(64);
    for (auto& v : x) {
      v = n(rng);
    }
    EXPECT_EQ(autoconv_forward(m, x)[0], 0.0);
  }
}

TEST(AutoConv, MatchesDirectTrapezoidSum) {
  Rng rng = make_stream(11);
  std::normal_distribution<double> n;
  for (int d : {2, 5, 16, 33}) {
    Vector x(d);
    for (auto& v : x) {
      v = n(rng);
    }
    const Vector y = autoconv_forward(AutoConvModel(d), x);
    EXPECT_LT((y - trapezoid_reference(x)).norm(), 1e-12 * (1.0 + y.norm())) << "D=" << d;
  }
}

TEST(AutoConv, HomogeneityAndSignSymmetry) {
  const AutoConvModel m(16);
  Rng rng = make_stream(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 10; ++i) {
    Vector x(16);
    for (auto& v : x) {
      v = n(rng);
    }
    const Vector y = autoconv_forward(m, x);
    const double c = 1.0 + 3.0 * std::abs(n(rng));
    EXPECT_LE((autoconv_forward(m, c * x) - c * c * y).norm(), 1e-12 * c * c * y.norm());
    EXPECT_LE((autoconv_forward(m, -x) - y).norm(), 1e-12 * y.norm());
  }
}

TEST(ExactSolution, SampledValues) {
  EXPECT_EQ(exact_solution(2), Vector::Zero(2));
  const Vector x3 = exact_solution(3);
  EXPECT_NEAR(x3[0], 0.0, 1e-15);
  EXPECT_NEAR(x3[1], 1.25, 1e-15);
  EXPECT_NEAR(x3[2], 0.0, 1e-15);
  EXPECT_NEAR(exact_solution(5)[1], 1.40625, 1e-15);
}

TEST(ToyLoss, Values) {
  EXPECT_EQ(toy_scalar_loss(1.0), 0.0);
  EXPECT_NEAR(toy_scalar_loss(-1.0), 1.2, 1e-15);
  EXPECT_NEAR(toy_scalar_loss(-1.5), 3.4375, 1e-15);
}

TEST(ToyLoss, DerivativeMatchesFiniteDifference) {
  for (double x : {-1.7, -0.85, 0.0, 0.4, 1.3}) {
    const double h = 1e-6;
    const double fd = (toy_scalar_loss(x + h) - toy_scalar_loss(x - h)) / (2 * h);
    EXPECT_NEAR(toy_scalar_loss_derivative(x), fd, 1e-7);
  }
}

TEST(ToyLoss, ModelSquaredOutputIsLoss) {
  const ToyLossModel m;
  for (double x : {-1.5, -0.8, 0.3, 1.0}) {
    const double y = m.eval(vec({x}))[0];
    EXPECT_NEAR(y * y, toy_scalar_loss(x), 1e-12);
  }
}

TEST(Observations, ZeroNoiseGivesCopies) {
  const AutoConvModel m(8);
  const Vector x = exact_solution(8);
  const Vector ye = autoconv_forward(m, x);
  for (auto kind : {NoiseKind::GaussianRelative, NoiseKind::GaussianAbsolute}) {
    NoiseSpec s{kind, 0.0, 1, 3};
    const auto obs = generate_observations(m, x, s, 1);
    ASSERT_EQ(obs.size(), 3);
    for (const auto& y : obs.samples) {
      EXPECT_EQ(y, ye);
    }
  }
}

TEST(Observations, RelativeNoiseLevel) {
  const AutoConvModel m(16);
  const Vector x = exact_solution(16);
  const Vector ye = autoconv_forward(m, x);
  const auto obs = generate_observations(m, x, NoiseSpec{NoiseKind::GaussianRelative, 0.05, 1, 100}, 9);
  for (Eigen::Index i = 0; i < ye.size(); ++i) {
    if (std::abs(ye[i]) <= 0.1) {
      continue;
    }
    double mean = 0.0;
    for (const auto& y : obs.samples) {
      mean += y[i];
    }
    mean /= obs.size();
    double var = 0.0;
    for (const auto& y : obs.samples) {
      var += (y[i] - mean) * (y[i] - mean);
    }
    const double sd = std::sqrt(var / (obs.size() - 1));
    EXPECT_NEAR(sd / (0.05 * std::abs(ye[i])), 1.0, 0.3) << "entry " << i;
  }
}

TEST(Observations, ShiftWithoutNoise) {
  Matrix id = Matrix::Identity(3, 3);
  const LinearModel m(id);
  const auto obs = generate_observations(m, vec({1, 2, 3}), NoiseSpec{NoiseKind::ShiftThenGaussian, 0.0, 1, 50}, 4);
  int left = 0;
  int right = 0;
  for (const auto& y : obs.samples) {
    if (y == vec({2, 3, 0})) {
      ++left;
    } else if (y == vec({0, 1, 2})) {
      ++right;
    } else {
      ADD_FAILURE() << "unexpected shifted vector " << y.transpose();
    }
  }
  EXPECT_GT(left, 0);
  EXPECT_GT(right, 0);
}

TEST(Observations, SeedDeterminism) {
  const AutoConvModel m(8);
  const NoiseSpec s{NoiseKind::GaussianRelative, 0.05, 1, 10};
  const auto a = generate_observations(m, exact_solution(8), s, 42);
  const auto b = generate_observations(m, exact_solution(8), s, 42);
  const auto c = generate_observations(m, exact_solution(8), s, 43);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Observations, InvalidSpecRejected) {
  const AutoConvModel m(4);
  EXPECT_THROW((void)generate_observations(m, exact_solution(4), NoiseSpec{NoiseKind::GaussianRelative, -0.1, 1, 3}, 0),
               ConfigError);
  EXPECT_THROW((void)generate_observations(m, exact_solution(4), NoiseSpec{NoiseKind::GaussianRelative, 0.1, 1, 0}, 0),
               ConfigError);
}
