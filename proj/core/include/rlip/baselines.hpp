#pragma once

#include "rlip/forward_models.hpp"
#include "rlip/random.hpp"

namespace rlip {

/// Closed-form reference solutions for the linear problem f(x) = A x. The
/// trainer is checked against these.

struct GaussianDist {
  Vector mean;
  Matrix cov;
};

/// Largest singular value of A by power iteration on A^T A.
[[nodiscard]] double spectral_norm(const Matrix& a, int max_iterations = 100, double tolerance = 1e-10);

/// (A^T A + alpha I)^{-1} A^T y via Cholesky. Throws NumericError when the
/// normal matrix is not positive definite (e.g. rank-deficient A, alpha = 0).
[[nodiscard]] Vector tikhonov_solution(const Matrix& a, const VectorRef& y, double alpha);

/// Minimum-norm least-squares solution A^- y. Singular values below
/// 1e-12 * sigma_max are dropped.
[[nodiscard]] Vector pseudo_inverse_solution(const Matrix& a, const VectorRef& y);

/// Upper end of the admissible omega interval, 1 / (3 (||A||^2 + eps)).
[[nodiscard]] double omega_upper_bound(const Matrix& a, double epsilon);

/// B = omega (A^T A + eps I); throws ConfigError when omega is outside
/// (0, 1 / (3 (||A||^2 + eps))).
[[nodiscard]] Matrix build_B(const Matrix& a, double omega, double epsilon);

/// Stationary law N(theta, Sigma) of the chain driven by AffinePolicyI.
[[nodiscard]] GaussianDist invariant_dist_example1(const VectorRef& theta, const Matrix& sigma);

/// Stationary law N(B^{-1} theta, sigma^2 (2B - B^2)^{-1}) of the chain
/// driven by AffinePolicyII.
[[nodiscard]] GaussianDist invariant_dist_example2(const VectorRef& theta, const Matrix& b, double sigma);

/// (B^{-1} A^T A B^{-1} + alpha B^{-2})^{-1} B^{-1} A^T y, evaluated as written.
[[nodiscard]] Vector example2_theta_star(const Matrix& a, const VectorRef& y, double alpha, const Matrix& b);

/// The same optimum through the simplification B (A^T A + alpha I)^{-1} A^T y.
[[nodiscard]] Vector example2_theta_star_simplified(const Matrix& a, const VectorRef& y, double alpha,
                                                    const Matrix& b);

/// One step of the general rule
///   x + omega (A^T A + eps I) [ (A^T A + alpha I)^{-1} A^T y - x ] + sigma z.
/// With eps = alpha = sigma = 0 this is the Landweber step x + omega A^T (y - A x).
/// The alpha = 0 case requires A^T A invertible.
[[nodiscard]] Vector landweber_iterate(const Matrix& a, const VectorRef& y, const VectorRef& x, double omega,
                                       double epsilon, double alpha, double sigma, Rng& rng);

struct ClosedFormJ {
  double value = 0.0;
  Vector gradient;
};

/// Exact J_T for the AffinePolicyI chain started at the fixed x0 with the
/// negative reward -(||A(x+a) - y||^2 + alpha ||x||^2): every x_t for t >= 1
/// is N(theta, Sigma), so
///   J_T = -[ ||A theta - y||^2 + tr(A Sigma A^T)
///            + (alpha/T) ((T-1)(||theta||^2 + tr Sigma) + ||x0||^2) ].
[[nodiscard]] ClosedFormJ closed_form_JT(const Matrix& a, const VectorRef& y, const VectorRef& theta,
                                         const Matrix& sigma, double alpha, int horizon, const VectorRef& x0);

} // namespace rlip
