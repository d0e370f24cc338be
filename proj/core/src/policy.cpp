#include "rlip/policy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rlip/baselines.hpp"
#include "rlip/errors.hpp"

namespace rlip {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)

void fill_standard_normal(Vector& u, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u[i] = normal(rng);
  }
}

} // namespace

std::string_view to_string(PolicyFamily family) {
  switch (family) {
  case PolicyFamily::AffineI:
    return "affine1";
  case PolicyFamily::AffineII:
    return "affine2";
  case PolicyFamily::Mlp:
    return "mlp";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(Vector theta) : theta_(std::move(theta)) {
  if (!theta_.allFinite()) {
    throw NumericError("policy parameters must be finite");
  }
}

void Policy::set_theta(Vector theta) {
  if (theta.size() != theta_.size()) {
    throw ShapeError("set_theta: expected " + std::to_string(theta_.size()) + " parameters, got " +
                     std::to_string(theta.size()));
  }
  if (!theta.allFinite()) {
    throw NumericError("set_theta: parameters must be finite");
  }
  theta_ = std::move(theta);
}

void Policy::check_state(const VectorRef& x) const {
  if (x.size() != state_dim()) {
    throw ShapeError("policy expects state of dimension " + std::to_string(state_dim()) + ", got " +
                     std::to_string(x.size()));
  }
}

void Policy::check_action(const VectorRef& a) const {
  if (a.size() != state_dim()) {
    throw ShapeError("policy expects action of dimension " + std::to_string(state_dim()) + ", got " +
                     std::to_string(a.size()));
  }
}

void Policy::accumulate_score_sum(const Eigen::Ref<const Matrix>& states, const Eigen::Ref<const Matrix>& actions,
                                  double scale, Eigen::Ref<Vector> grad) const {
  for (Eigen::Index t = 0; t < states.cols(); ++t) {
    accumulate_score(states.col(t), actions.col(t), scale, grad);
  }
}

Vector Policy::grad_log_density(const VectorRef& x, const VectorRef& a) const {
  Vector g = Vector::Zero(param_count());
  accumulate_score(x, a, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------
// AffinePolicyI

AffinePolicyI::AffinePolicyI(Vector theta, Matrix sigma) : Policy(std::move(theta)), sigma_(std::move(sigma)) {
  if (sigma_.rows() != theta_.size() || sigma_.cols() != theta_.size()) {
    throw ShapeError("AffinePolicyI: Sigma must be D x D with D = dim(theta)");
  }
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma_.cwiseAbs().maxCoeff())) {
    throw ConfigError("AffinePolicyI: Sigma must be symmetric");
  }
  chol_.compute(sigma_);
  if (chol_.info() != Eigen::Success || (chol_.matrixL().toDenseMatrix().diagonal().array() <= 0.0).any()) {
    throw ConfigError("AffinePolicyI: Sigma must be symmetric positive definite");
  }
  chol_l_ = chol_.matrixL();
  log_det_ = 2.0 * chol_l_.diagonal().array().log().sum();
}

Vector AffinePolicyI::action_mean(const VectorRef& x) const {
  check_state(x);
  return theta_ - x;
}

Vector AffinePolicyI::sample_action(const VectorRef& x, Rng& rng) const {
  Vector u(state_dim());
  fill_standard_normal(u, rng);
  return action_mean(x) + chol_l_ * u;
}

double AffinePolicyI::log_density(const VectorRef& x, const VectorRef& a) const {
  check_action(a);
  const Vector r = a - action_mean(x);
  const Vector w = chol_l_.triangularView<Eigen::Lower>().solve(r);
  return -0.5 * (static_cast<double>(state_dim()) * kLog2Pi + log_det_ + w.squaredNorm());
}

void AffinePolicyI::accumulate_score(const VectorRef& x, const VectorRef& a, double scale,
                                     Eigen::Ref<Vector> grad) const {
  check_action(a);
  // d/dtheta of -1/2 (a - theta + x)^T Sigma^{-1} (a - theta + x)
  grad += scale * chol_.solve(Vector(a - action_mean(x)));
}

std::unique_ptr<Policy> AffinePolicyI::clone() const { return std::make_unique<AffinePolicyI>(*this); }

// ---------------------------------------------------------------------------
// AffinePolicyII

AffinePolicyII::AffinePolicyII(Vector theta, Matrix b, double sigma)
    : Policy(std::move(theta)), b_(std::move(b)), sigma_(sigma) {
  if (b_.rows() != theta_.size() || b_.cols() != theta_.size()) {
    throw ShapeError("AffinePolicyII: B must be D x D with D = dim(theta)");
  }
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw ConfigError("AffinePolicyII: sigma must be a finite nonnegative number");
  }
  const Matrix contraction = Matrix::Identity(b_.rows(), b_.cols()) - b_;
  if (spectral_norm(contraction) >= 1.0) {
    throw ConfigError("AffinePolicyII: ||I - B|| must be < 1");
  }
}

AffinePolicyII AffinePolicyII::from_operator(Vector theta, const Matrix& a, double omega, double epsilon,
                                             double sigma) {
  return AffinePolicyII(std::move(theta), build_B(a, omega, epsilon), sigma);
}

Vector AffinePolicyII::action_mean(const VectorRef& x) const {
  check_state(x);
  return theta_ - b_ * x;
}

Vector AffinePolicyII::sample_action(const VectorRef& x, Rng& rng) const {
  Vector u(state_dim());
  fill_standard_normal(u, rng);
  return action_mean(x) + sigma_ * u;
}

double AffinePolicyII::log_density(const VectorRef& x, const VectorRef& a) const {
  check_action(a);
  if (sigma_ <= 0.0) {
    throw NumericError("AffinePolicyII: log-density undefined for sigma = 0");
  }
  const Vector r = a - action_mean(x);
  const double d = static_cast<double>(state_dim());
  return -0.5 * d * (kLog2Pi + 2.0 * std::log(sigma_)) - 0.5 * r.squaredNorm() / (sigma_ * sigma_);
}

void AffinePolicyII::accumulate_score(const VectorRef& x, const VectorRef& a, double scale,
                                      Eigen::Ref<Vector> grad) const {
  check_action(a);
  if (sigma_ <= 0.0) {
    throw NumericError("AffinePolicyII: score undefined for sigma = 0");
  }
  grad += (scale / (sigma_ * sigma_)) * (a - action_mean(x));
}

std::unique_ptr<Policy> AffinePolicyII::clone() const { return std::make_unique<AffinePolicyII>(*this); }

// ---------------------------------------------------------------------------
// MLP helpers

double softplus(double z) {
  if (z > 0.0) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_window(int window) {
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("moving-average window must be a positive odd integer, got " + std::to_string(window));
  }
}

// m_i = mean of z over [i-h, i+h] clipped to the valid range.
template <typename In, typename Out>
void moving_average_cols(const In& z, int window, Out& m) {
  const auto d = static_cast<Eigen::Index>(z.rows());
  const Eigen::Index h = window / 2;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - h);
    const Eigen::Index hi = std::min<Eigen::Index>(d - 1, i + h);
    m.row(i) = z.middleRows(lo, hi - lo + 1).colwise().sum() / static_cast<double>(hi - lo + 1);
  }
}

// Adjoint of moving_average_cols.
template <typename In, typename Out>
void moving_average_adjoint_cols(const In& gm, int window, Out& gz) {
  const auto d = static_cast<Eigen::Index>(gm.rows());
  const Eigen::Index h = window / 2;
  gz.setZero();
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - h);
    const Eigen::Index hi = std::min<Eigen::Index>(d - 1, i + h);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      gz.row(j) += inv * gm.row(i);
    }
  }
}

} // namespace

Vector moving_average(const VectorRef& z, int window) {
  check_window(window);
  Vector m(z.size());
  moving_average_cols(z, window, m);
  return m;
}

// ---------------------------------------------------------------------------
// MlpArchitecture

int MlpArchitecture::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
  }
  return n;
}

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("MLP needs at least an input and an output layer");
  }
  for (int n : layer_sizes) {
    if (n < 1) {
      throw ConfigError("MLP layer sizes must be positive");
    }
  }
  if (layer_sizes.back() != 2 * layer_sizes.front()) {
    throw ConfigError("MLP output size must be twice the state dimension (mean and std heads)");
  }
  check_window(ma_window);
  if (!(min_std > 0.0)) {
    throw ConfigError("MLP min_std must be positive");
  }
}

MlpArchitecture MlpArchitecture::for_state(int state_dim, const std::vector<int>& hidden, int ma_window,
                                           double min_std) {
  MlpArchitecture arch;
  arch.layer_sizes.push_back(state_dim);
  arch.layer_sizes.insert(arch.layer_sizes.end(), hidden.begin(), hidden.end());
  arch.layer_sizes.push_back(2 * state_dim);
  arch.ma_window = ma_window;
  arch.min_std = min_std;
  arch.validate();
  return arch;
}

// ---------------------------------------------------------------------------
// MlpPolicy

MlpPolicy::MlpPolicy(MlpArchitecture arch) : MlpPolicy(arch, Vector::Zero(arch.param_count())) {}

MlpPolicy::MlpPolicy(MlpArchitecture arch, Vector theta) : Policy(std::move(theta)), arch_(std::move(arch)) {
  arch_.validate();
  if (theta_.size() != arch_.param_count()) {
    throw ShapeError("MlpPolicy: expected " + std::to_string(arch_.param_count()) + " parameters, got " +
                     std::to_string(theta_.size()));
  }
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < arch_.layer_sizes.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(arch_.layer_sizes[l + 1]) * (arch_.layer_sizes[l] + 1);
  }
}

void MlpPolicy::init_glorot(std::uint64_t seed, const MlpInit& init) {
  if (!(init.output_gain > 0.0) || !std::isfinite(init.output_gain) || !std::isfinite(init.std_bias)) {
    throw ConfigError("MLP init: output_gain must be positive and std_bias finite");
  }
  Rng rng = make_stream(seed, {stream::kPolicyInit});
  Vector theta = Vector::Zero(param_count());
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    const int n_in = arch_.layer_sizes[l];
    const int n_out = arch_.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const Eigen::Index n_w = static_cast<Eigen::Index>(n_in) * n_out;
    const double gain = l + 1 == offsets_.size() ? init.output_gain : 1.0;
    for (Eigen::Index i = 0; i < n_w; ++i) {
      theta[offsets_[l] + i] = gain * uniform(rng);
    }
  }
  theta.tail(state_dim()).setConstant(init.std_bias);
  set_theta(std::move(theta));
}

MlpPolicy::LayerView MlpPolicy::layer(std::size_t l) const {
  const int n_in = arch_.layer_sizes[l];
  const int n_out = arch_.layer_sizes[l + 1];
  const double* base = theta_.data() + offsets_[l];
  return {Eigen::Map<const RowMajor>(base, n_out, n_in),
          Eigen::Map<const Vector>(base + static_cast<Eigen::Index>(n_out) * n_in, n_out)};
}

void MlpPolicy::forward_batch(const Eigen::Ref<const Matrix>& x, std::vector<Matrix>& inputs, Matrix& out) const {
  const std::size_t n_layers = offsets_.size();
  inputs.resize(n_layers);
  inputs[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerView lv = layer(l);
    Matrix z = lv.w * inputs[l];
    z.colwise() += lv.b;
    if (l + 1 < n_layers) {
      inputs[l + 1] = z.cwiseMax(0.0);
    } else {
      out = std::move(z);
    }
  }
}

void MlpPolicy::heads(const Eigen::Ref<const Matrix>& out, Matrix& mean, Matrix& stdev) const {
  const int d = state_dim();
  mean.resize(d, out.cols());
  moving_average_cols(out.topRows(d), arch_.ma_window, mean);
  stdev = out.bottomRows(d).unaryExpr([this](double z) { return arch_.min_std + softplus(z); });
}

MlpPolicy::Output MlpPolicy::forward(const VectorRef& x) const {
  check_state(x);
  std::vector<Matrix> inputs;
  Matrix out;
  forward_batch(x, inputs, out);
  const int d = state_dim();
  return {out.col(0).head(d), out.col(0).tail(d)};
}

Vector MlpPolicy::action_mean(const VectorRef& x) const {
  const Output o = forward(x);
  return moving_average(o.z1, arch_.ma_window);
}

Vector MlpPolicy::action_std(const VectorRef& x) const {
  const Output o = forward(x);
  return o.z2.unaryExpr([this](double z) { return arch_.min_std + softplus(z); });
}

Vector MlpPolicy::sample_action(const VectorRef& x, Rng& rng) const {
  check_state(x);
  std::vector<Matrix> inputs;
  Matrix out, mean, stdev;
  forward_batch(x, inputs, out);
  heads(out, mean, stdev);
  Vector u(state_dim());
  fill_standard_normal(u, rng);
  return mean.col(0) + stdev.col(0).cwiseProduct(u);
}

double MlpPolicy::log_density(const VectorRef& x, const VectorRef& a) const {
  check_state(x);
  check_action(a);
  std::vector<Matrix> inputs;
  Matrix out, mean, stdev;
  forward_batch(x, inputs, out);
  heads(out, mean, stdev);
  const Vector s = stdev.col(0);
  const Vector r = (a - mean.col(0)).cwiseQuotient(s);
  return -0.5 * static_cast<double>(state_dim()) * kLog2Pi - s.array().log().sum() - 0.5 * r.squaredNorm();
}

void MlpPolicy::accumulate_score(const VectorRef& x, const VectorRef& a, double scale,
                                 Eigen::Ref<Vector> grad) const {
  check_state(x);
  check_action(a);
  accumulate_score_sum(x, a, scale, grad);
}

void MlpPolicy::accumulate_score_sum(const Eigen::Ref<const Matrix>& states, const Eigen::Ref<const Matrix>& actions,
                                     double scale, Eigen::Ref<Vector> grad) const {
  if (states.rows() != state_dim() || actions.rows() != state_dim() || states.cols() != actions.cols()) {
    throw ShapeError("MlpPolicy: state/action batch shape mismatch");
  }
  if (grad.size() != param_count()) {
    throw ShapeError("MlpPolicy: gradient buffer has wrong size");
  }
  const int d = state_dim();
  std::vector<Matrix> inputs;
  Matrix out, mean, stdev;
  forward_batch(states, inputs, out);
  heads(out, mean, stdev);

  // d log N(a; m, s) / dm = (a - m) / s^2, / ds = -1/s + (a - m)^2 / s^3.
  const Matrix r = actions - mean;
  const Matrix inv_s = stdev.cwiseInverse();
  const Matrix z = r.cwiseProduct(inv_s);
  const Matrix g_mean = z.cwiseProduct(inv_s);
  const Matrix g_std = (z.cwiseProduct(z) - Matrix::Ones(d, r.cols())).cwiseProduct(inv_s);

  Matrix delta(2 * d, states.cols());
  Eigen::Block<Matrix> top = delta.topRows(d);
  moving_average_adjoint_cols(g_mean, arch_.ma_window, top);
  delta.bottomRows(d) = g_std.cwiseProduct(out.bottomRows(d).unaryExpr([](double z) { return sigmoid(z); }));
  delta *= scale;

  for (std::size_t l = offsets_.size(); l-- > 0;) {
    const LayerView lv = layer(l);
    const Eigen::Index n_out = lv.w.rows();
    const Eigen::Index n_in = lv.w.cols();
    Eigen::Map<RowMajor> gw(grad.data() + offsets_[l], n_out, n_in);
    Eigen::Map<Vector> gb(grad.data() + offsets_[l] + n_out * n_in, n_out);
    gw.noalias() += delta * inputs[l].transpose();
    gb += delta.rowwise().sum();
    if (l > 0) {
      Matrix back = lv.w.transpose() * delta;
      // inputs[l] = relu(z_{l-1}); its derivative is the positive mask.
      delta = back.cwiseProduct((inputs[l].array() > 0.0).cast<double>().matrix());
    }
  }
}

std::unique_ptr<Policy> MlpPolicy::clone() const { return std::make_unique<MlpPolicy>(*this); }

} // namespace rlip
