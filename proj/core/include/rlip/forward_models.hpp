#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace rlip {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Deterministic forward operator f: R^D -> R^M. This is the only
/// problem-specific plug-in point; user surrogates derive from it.
class ForwardModel {
public:
  virtual ~ForwardModel() = default;

  [[nodiscard]] virtual int input_dim() const = 0;
  [[nodiscard]] virtual int output_dim() const = 0;

  /// Evaluates f(x). Throws ShapeError when x.size() != input_dim().
  [[nodiscard]] Vector eval(const VectorRef& x) const;

protected:
  virtual void eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const = 0;
};

/// f(x) = A x.
class LinearModel final : public ForwardModel {
public:
  explicit LinearModel(Matrix a);

  [[nodiscard]] int input_dim() const override { return static_cast<int>(a_.cols()); }
  [[nodiscard]] int output_dim() const override { return static_cast<int>(a_.rows()); }
  [[nodiscard]] const Matrix& matrix() const { return a_; }

protected:
  void eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const override;

private:
  Matrix a_;
};

/// Trapezoid discretization of y(t) = \int_0^t x(t-s) x(s) ds on the
/// uniform grid t_j = j/(D-1). Output has the same length as the input.
class AutoConvModel final : public ForwardModel {
public:
  explicit AutoConvModel(int grid_points);

  [[nodiscard]] int input_dim() const override { return d_; }
  [[nodiscard]] int output_dim() const override { return d_; }

protected:
  void eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const override;

private:
  int d_;
};

/// 1-D model whose squared output is the double-well loss, so that
/// ||f(x) - 0||^2 == toy_scalar_loss(x).
class ToyLossModel final : public ForwardModel {
public:
  [[nodiscard]] int input_dim() const override { return 1; }
  [[nodiscard]] int output_dim() const override { return 1; }

protected:
  void eval_into(const VectorRef& x, Eigen::Ref<Vector> y) const override;
};

[[nodiscard]] Vector linear_apply(const LinearModel& model, const VectorRef& x);
[[nodiscard]] Vector autoconv_forward(const AutoConvModel& model, const VectorRef& x);

/// x(t) = 10 t (1-t)^2 sampled on t_j = j/(D-1).
[[nodiscard]] Vector exact_solution(int grid_points);

/// (x^2 - 1)^2 + 0.3 (x - 1)^2: global minimum at x = 1, local one near -0.85.
[[nodiscard]] double toy_scalar_loss(double x);
[[nodiscard]] double toy_scalar_loss_derivative(double x);

enum class NoiseKind { GaussianRelative, GaussianAbsolute, ShiftThenGaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::GaussianRelative;
  double level = 0.05;
  int shift_magnitude = 1;
  int sample_count = 100;

  void validate() const;
};

struct ObservationSet {
  std::vector<Vector> samples;
  std::optional<Vector> clean;

  [[nodiscard]] int size() const { return static_cast<int>(samples.size()); }
  [[nodiscard]] int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
};

/// Draws K noisy copies of y_e = f(x_true). Relative noise uses std
/// level*|y_e| entrywise; the shift variant first moves y_e left or right by
/// shift_magnitude entries (zero fill) with probability 1/2 each.
[[nodiscard]] ObservationSet generate_observations(const ForwardModel& model, const VectorRef& x_true,
                                                   const NoiseSpec& spec, std::uint64_t seed);

/// Observation set holding a single noise-free vector.
[[nodiscard]] ObservationSet single_observation(Vector y);

} // namespace rlip
