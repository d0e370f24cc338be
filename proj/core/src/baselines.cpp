#include "rlip/baselines.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "rlip/errors.hpp"

namespace rlip {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ShapeError(std::string(what) + " must be square");
  }
}

Matrix normal_matrix(const Matrix& a, double shift) {
  Matrix n = a.transpose() * a;
  n.diagonal().array() += shift;
  return n;
}

Vector spd_solve(const Matrix& m, const Vector& rhs, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": system matrix is not positive definite (rank-deficient?)");
  }
  return llt.solve(rhs);
}

} // namespace

double spectral_norm(const Matrix& a, int max_iterations, double tolerance) {
  if (a.size() == 0) {
    return 0.0;
  }
  const Matrix ata = a.transpose() * a;
  // Deterministic, non-degenerate start vector.
  Vector v(ata.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  }
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector w = ata * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      return 0.0;
    }
    w /= norm;
    const double next = w.dot(ata * w);
    v = std::move(w);
    if (std::abs(next - lambda) <= tolerance * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

Vector tikhonov_solution(const Matrix& a, const VectorRef& y, double alpha) {
  if (y.size() != a.rows()) {
    throw ShapeError("tikhonov_solution: y has wrong dimension");
  }
  if (alpha < 0.0) {
    throw ConfigError("tikhonov_solution: alpha must be nonnegative");
  }
  return spd_solve(normal_matrix(a, alpha), a.transpose() * y, "tikhonov_solution");
}

Vector pseudo_inverse_solution(const Matrix& a, const VectorRef& y) {
  if (y.size() != a.rows()) {
    throw ShapeError("pseudo_inverse_solution: y has wrong dimension");
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? 1e-12 * s[0] : 0.0;
  Vector uty = svd.matrixU().transpose() * y;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    uty[i] = (s[i] > cutoff && s[i] > 0.0) ? uty[i] / s[i] : 0.0;
  }
  return svd.matrixV() * uty;
}

double omega_upper_bound(const Matrix& a, double epsilon) {
  const double norm = spectral_norm(a);
  return 1.0 / (3.0 * (norm * norm + epsilon));
}

Matrix build_B(const Matrix& a, double omega, double epsilon) {
  if (epsilon < 0.0) {
    throw ConfigError("build_B: epsilon must be nonnegative");
  }
  const double upper = omega_upper_bound(a, epsilon);
  if (!(omega > 0.0 && omega < upper)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "build_B: omega=" << omega << " outside admissible interval (0, " << upper << ")";
    throw ConfigError(msg.str());
  }
  return omega * normal_matrix(a, epsilon);
}

GaussianDist invariant_dist_example1(const VectorRef& theta, const Matrix& sigma) {
  require_square(sigma, "Sigma");
  if (sigma.rows() != theta.size()) {
    throw ShapeError("invariant_dist_example1: Sigma does not match theta");
  }
  return {theta, sigma};
}

GaussianDist invariant_dist_example2(const VectorRef& theta, const Matrix& b, double sigma) {
  require_square(b, "B");
  if (b.rows() != theta.size()) {
    throw ShapeError("invariant_dist_example2: B does not match theta");
  }
  Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) {
    throw NumericError("invariant_dist_example2: B is singular");
  }
  const Vector mean = lu.solve(theta);
  const Matrix m = 2.0 * b - b * b;
  Eigen::FullPivLU<Matrix> mlu(m);
  if (!mlu.isInvertible()) {
    throw NumericError("invariant_dist_example2: 2B - B^2 is singular");
  }
  Matrix cov = sigma * sigma * mlu.inverse();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {mean, cov};
}

Vector example2_theta_star(const Matrix& a, const VectorRef& y, double alpha, const Matrix& b) {
  require_square(b, "B");
  Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) {
    throw NumericError("example2_theta_star: B is singular");
  }
  const Matrix b_inv = lu.inverse();
  const Matrix inner = b_inv * a.transpose() * a * b_inv + alpha * b_inv * b_inv;
  Eigen::FullPivLU<Matrix> ilu(inner);
  if (!ilu.isInvertible()) {
    throw NumericError("example2_theta_star: inner system is singular");
  }
  return ilu.solve(b_inv * (a.transpose() * y));
}

Vector example2_theta_star_simplified(const Matrix& a, const VectorRef& y, double alpha, const Matrix& b) {
  return b * tikhonov_solution(a, y, alpha);
}

Vector landweber_iterate(const Matrix& a, const VectorRef& y, const VectorRef& x, double omega, double epsilon,
                         double alpha, double sigma, Rng& rng) {
  if (x.size() != a.cols() || y.size() != a.rows()) {
    throw ShapeError("landweber_iterate: dimension mismatch");
  }
  const Vector target = tikhonov_solution(a, y, alpha);
  Vector next = x + omega * (normal_matrix(a, epsilon) * (target - x));
  if (sigma != 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      next[i] += sigma * normal(rng);
    }
  }
  return next;
}

ClosedFormJ closed_form_JT(const Matrix& a, const VectorRef& y, const VectorRef& theta, const Matrix& sigma,
                           double alpha, int horizon, const VectorRef& x0) {
  if (horizon < 1) {
    throw ConfigError("closed_form_JT: T must be >= 1");
  }
  const double t = static_cast<double>(horizon);
  const Vector resid = a * theta - y;
  const double trace_a = (a * sigma * a.transpose()).trace();
  const double value = resid.squaredNorm() + trace_a +
                       (alpha / t) * ((t - 1.0) * (theta.squaredNorm() + sigma.trace()) + x0.squaredNorm());
  ClosedFormJ out;
  out.value = -value;
  out.gradient = -2.0 * (a.transpose() * resid) - 2.0 * alpha * ((t - 1.0) / t) * theta;
  return out;
}

} // namespace rlip
