#include "rlip/forward_models.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rlip/errors.hpp"
#include "rlip/random.hpp"

namespace rlip {

Vector ForwardModel::eval(const VectorRef& x) const {
  if (x.size() != input_dim()) {
    throw ShapeError("forward model expects input of dimension " + std::to_string(input_dim()) + ", got " +
                     std::to_string(x.size()));
  }
  Vector y(output_dim());
  eval_into(x, y);
  return y;
}

LinearModel::LinearModel(Matrix a) : a_(std::move(a)) {
  if (a_.rows() == 0 || a_.cols() == 0) {
    throw ConfigError("linear model matrix must be non-empty");
  }
}

void LinearModel::eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const { y.noalias() = a_ * x; }

AutoConvModel::AutoConvModel(int grid_points) : d_(grid_points) {
  if (grid_points < 2) {
    throw ConfigError("auto-convolution grid needs at least 2 points, got " + std::to_string(grid_points));
  }
}

void AutoConvModel::eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const {
  const double h = 1.0 / static_cast<double>(d_ - 1);
  y[0] = 0.0;
  for (int j = 1; j < d_; ++j) {
    double acc = 0.0;
    // x(t_j - t_i) is entry j-i; index arithmetic stays on the grid.
    for (int i = 1; i <= j; ++i) {
      acc += 0.5 * (x[j - i] * x[i] + x[j - i + 1] * x[i - 1]);
    }
    y[j] = h * acc;
  }
}

void ToyLossModel::eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const {
  y[0] = std::sqrt(toy_scalar_loss(x[0]));
}

Vector linear_apply(const LinearModel& model, const VectorRef& x) { return model.eval(x); }

Vector autoconv_forward(const AutoConvModel& model, const VectorRef& x) { return model.eval(x); }

Vector exact_solution(int grid_points) {
  if (grid_points < 2) {
    throw ConfigError("exact_solution needs at least 2 grid points");
  }
  Vector x(grid_points);
  const double denom = static_cast<double>(grid_points - 1);
  for (int j = 0; j < grid_points; ++j) {
    const double t = static_cast<double>(j) / denom;
    x[j] = 10.0 * t * (1.0 - t) * (1.0 - t);
  }
  return x;
}

double toy_scalar_loss(double x) {
  const double q = x * x - 1.0;
  const double l = x - 1.0;
  return q * q + 0.3 * l * l;
}

double toy_scalar_loss_derivative(double x) { return 4.0 * x * x * x - 3.4 * x - 0.6; }

void NoiseSpec::validate() const {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw ConfigError("noise level must be a finite nonnegative number");
  }
  if (sample_count < 1) {
    throw ConfigError("noise sample count K must be >= 1");
  }
  if (kind == NoiseKind::ShiftThenGaussian && shift_magnitude < 0) {
    throw ConfigError("shift magnitude must be nonnegative");
  }
}

namespace {

Vector shifted(const Vector& y, int by) {
  // by > 0 moves entries left: [y_by, ..., y_{M-1}, 0, ...]; by < 0 moves right.
  const auto m = static_cast<int>(y.size());
  Vector out = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    const int src = i + by;
    if (src >= 0 && src < m) {
      out[i] = y[src];
    }
  }
  return out;
}

} // namespace

ObservationSet generate_observations(const ForwardModel& model, const VectorRef& x_true, const NoiseSpec& spec,
                                     std::uint64_t seed) {
  spec.validate();
  const Vector clean = model.eval(x_true);
  Rng rng = make_stream(seed, {stream::kObservations});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  ObservationSet obs;
  obs.clean = clean;
  obs.samples.reserve(static_cast<std::size_t>(spec.sample_count));
  for (int k = 0; k < spec.sample_count; ++k) {
    Vector base = clean;
    if (spec.kind == NoiseKind::ShiftThenGaussian) {
      base = shifted(clean, coin(rng) ? spec.shift_magnitude : -spec.shift_magnitude);
    }
    Vector sample = base;
    if (spec.level > 0.0) {
      for (Eigen::Index i = 0; i < sample.size(); ++i) {
        const double sd = spec.kind == NoiseKind::GaussianAbsolute ? spec.level : spec.level * std::abs(base[i]);
        sample[i] += sd * normal(rng);
      }
    }
    obs.samples.push_back(std::move(sample));
  }
  return obs;
}

ObservationSet single_observation(Vector y) {
  ObservationSet obs;
  obs.clean = y;
  obs.samples.push_back(std::move(y));
  return obs;
}

} // namespace rlip
