#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rlip/forward_models.hpp"
#include "rlip/random.hpp"

namespace rlip {

enum class PolicyFamily { AffineI, AffineII, Mlp };

[[nodiscard]] std::string_view to_string(PolicyFamily family);

/// Gaussian action-selection rule pi_theta(. | x) over increments a with
/// x_{t+1} = x_t + a. All trainable parameters live in one flat vector.
///
/// Policies are value-like: the const interface is safe to call from many
/// threads at once, and training mutates a single owned copy via set_theta().
class Policy {
public:
  virtual ~Policy() = default;

  [[nodiscard]] virtual PolicyFamily family() const = 0;
  [[nodiscard]] virtual int state_dim() const = 0;
  [[nodiscard]] int param_count() const { return static_cast<int>(theta_.size()); }

  [[nodiscard]] const Vector& theta() const { return theta_; }
  /// Replaces the parameter vector. Throws ShapeError on a size change and
  /// NumericError on non-finite entries.
  void set_theta(Vector theta);

  /// Mean of the action distribution at state x.
  [[nodiscard]] virtual Vector action_mean(const VectorRef& x) const = 0;

  /// a = mean(x) + L u with u ~ N(0, I) drawn in coordinate order.
  [[nodiscard]] virtual Vector sample_action(const VectorRef& x, Rng& rng) const = 0;

  /// Exact Gaussian log-density of a under pi_theta(. | x).
  [[nodiscard]] virtual double log_density(const VectorRef& x, const VectorRef& a) const = 0;

  /// grad += scale * d/dtheta log pi_theta(a | x).
  virtual void accumulate_score(const VectorRef& x, const VectorRef& a, double scale,
                                Eigen::Ref<Vector> grad) const = 0;

  /// grad += scale * sum_t d/dtheta log pi_theta(a_t | x_t) over the columns
  /// of states/actions. The default loops over accumulate_score().
  virtual void accumulate_score_sum(const Eigen::Ref<const Matrix>& states, const Eigen::Ref<const Matrix>& actions,
                                    double scale, Eigen::Ref<Vector> grad) const;

  [[nodiscard]] Vector grad_log_density(const VectorRef& x, const VectorRef& a) const;

  [[nodiscard]] virtual std::unique_ptr<Policy> clone() const = 0;

protected:
  explicit Policy(Vector theta);
  Policy(const Policy&) = default;
  Policy& operator=(const Policy&) = default;

  void check_state(const VectorRef& x) const;
  void check_action(const VectorRef& a) const;

  Vector theta_;
};

/// pi_theta(. | x) = N(theta - x, Sigma) with a fixed SPD Sigma. The chain
/// x_{t+1} = x_t + a_t then has invariant law N(theta, Sigma).
class AffinePolicyI final : public Policy {
public:
  AffinePolicyI(Vector theta, Matrix sigma);

  [[nodiscard]] PolicyFamily family() const override { return PolicyFamily::AffineI; }
  [[nodiscard]] int state_dim() const override { return static_cast<int>(theta_.size()); }
  [[nodiscard]] const Matrix& covariance() const { return sigma_; }

  [[nodiscard]] Vector action_mean(const VectorRef& x) const override;
  [[nodiscard]] Vector sample_action(const VectorRef& x, Rng& rng) const override;
  [[nodiscard]] double log_density(const VectorRef& x, const VectorRef& a) const override;
  void accumulate_score(const VectorRef& x, const VectorRef& a, double scale, Eigen::Ref<Vector> grad) const override;
  [[nodiscard]] std::unique_ptr<Policy> clone() const override;

private:
  Matrix sigma_;
  Eigen::LLT<Matrix> chol_;
  Matrix chol_l_;
  double log_det_ = 0.0;
};

/// pi_theta(. | x) = N(theta - B x, sigma^2 I) with B = omega (A^T A + eps I).
/// sigma = 0 is accepted for chain simulation; densities then throw.
class AffinePolicyII final : public Policy {
public:
  /// Takes B directly; rejects B with ||I - B|| >= 1.
  AffinePolicyII(Vector theta, Matrix b, double sigma);

  /// Builds B from the forward matrix, enforcing the admissible omega range.
  static AffinePolicyII from_operator(Vector theta, const Matrix& a, double omega, double epsilon, double sigma);

  [[nodiscard]] PolicyFamily family() const override { return PolicyFamily::AffineII; }
  [[nodiscard]] int state_dim() const override { return static_cast<int>(theta_.size()); }
  [[nodiscard]] const Matrix& b_matrix() const { return b_; }
  [[nodiscard]] double sigma() const { return sigma_; }

  [[nodiscard]] Vector action_mean(const VectorRef& x) const override;
  [[nodiscard]] Vector sample_action(const VectorRef& x, Rng& rng) const override;
  [[nodiscard]] double log_density(const VectorRef& x, const VectorRef& a) const override;
  void accumulate_score(const VectorRef& x, const VectorRef& a, double scale, Eigen::Ref<Vector> grad) const override;
  [[nodiscard]] std::unique_ptr<Policy> clone() const override;

private:
  Matrix b_;
  double sigma_;
};

/// Numerically stable log(1 + e^z).
[[nodiscard]] double softplus(double z);
/// 1 / (1 + e^-z), the derivative of softplus.
[[nodiscard]] double sigmoid(double z);

/// Centered moving average; the window shrinks to the available entries at
/// the edges. Throws ConfigError for an even or non-positive window.
[[nodiscard]] Vector moving_average(const VectorRef& z, int window);

struct MlpArchitecture {
  std::vector<int> layer_sizes;  // D, hidden..., 2D
  int ma_window = 3;
  double min_std = 1e-6;

  [[nodiscard]] int state_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  [[nodiscard]] int param_count() const;
  void validate() const;

  /// D -> hidden... -> 2D.
  static MlpArchitecture for_state(int state_dim, const std::vector<int>& hidden, int ma_window = 3,
                                   double min_std = 1e-6);
};

/// Optional adjustments applied on top of Glorot initialisation.
struct MlpInit {
  double output_gain = 1.0;  // multiplies the last layer's weights
  double std_bias = 0.0;     // initial bias of the std head
};

/// Gaussian policy driven by a ReLU network N_theta(x) = (z1, z2):
/// mean = moving_average(z1), std = min_std + softplus(z2), diagonal.
///
/// theta layout, for each layer in order: the weight matrix (out x in,
/// row-major) followed by the bias vector.
class MlpPolicy final : public Policy {
public:
  /// Zero parameters; call init_glorot() or set_theta() afterwards.
  explicit MlpPolicy(MlpArchitecture arch);
  MlpPolicy(MlpArchitecture arch, Vector theta);

  /// Weights ~ U(-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))), biases 0,
  /// then `init` applied.
  void init_glorot(std::uint64_t seed, const MlpInit& init = {});

  [[nodiscard]] PolicyFamily family() const override { return PolicyFamily::Mlp; }
  [[nodiscard]] int state_dim() const override { return arch_.state_dim(); }
  [[nodiscard]] const MlpArchitecture& architecture() const { return arch_; }

  /// Raw network output for one state.
  struct Output {
    Vector z1;
    Vector z2;
  };
  [[nodiscard]] Output forward(const VectorRef& x) const;

  [[nodiscard]] Vector action_mean(const VectorRef& x) const override;
  [[nodiscard]] Vector action_std(const VectorRef& x) const;
  [[nodiscard]] Vector sample_action(const VectorRef& x, Rng& rng) const override;
  [[nodiscard]] double log_density(const VectorRef& x, const VectorRef& a) const override;
  void accumulate_score(const VectorRef& x, const VectorRef& a, double scale, Eigen::Ref<Vector> grad) const override;
  void accumulate_score_sum(const Eigen::Ref<const Matrix>& states, const Eigen::Ref<const Matrix>& actions,
                            double scale, Eigen::Ref<Vector> grad) const override;
  [[nodiscard]] std::unique_ptr<Policy> clone() const override;

private:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct LayerView {
    Eigen::Map<const RowMajor> w;
    Eigen::Map<const Vector> b;
  };
  [[nodiscard]] LayerView layer(std::size_t l) const;

  /// Column-batched forward pass; keeps per-layer inputs and pre-activations.
  void forward_batch(const Eigen::Ref<const Matrix>& x, std::vector<Matrix>& inputs, Matrix& out) const;
  void heads(const Eigen::Ref<const Matrix>& out, Matrix& mean, Matrix& stdev) const;

  MlpArchitecture arch_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights in theta
};

} // namespace rlip
