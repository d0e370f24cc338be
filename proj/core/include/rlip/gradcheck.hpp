#pragma once

#include <cstdint>
#include <vector>

#include "rlip/policy.hpp"

namespace rlip {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int instances = 50;          // random (theta, x, a) draws per policy family
  double tolerance = 1e-5;     // max relative error vs central differences
  int unbiasedness_draws = 200000;
  double max_z = 4.0;          // standard errors allowed for the estimator mean
  bool inject_bug = false;     // perturbs one analytic gradient entry by 1e-2
};

struct FamilyCheck {
  PolicyFamily family = PolicyFamily::Mlp;
  int instances = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct UnbiasednessCheck {
  double estimate = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;
  double z = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<FamilyCheck> families;
  UnbiasednessCheck unbiasedness;
  [[nodiscard]] bool passed() const;
};

/// ||g - g_fd|| / max(||g_fd||, 1e-12) with g = grad_log_density and g_fd
/// the central difference of log_density in each parameter.
[[nodiscard]] double score_relative_error(const Policy& policy, const VectorRef& x, const VectorRef& a,
                                          double step = 1e-6, bool inject_bug = false);

/// Finite-difference checks of all three policy families plus the
/// unbiasedness of the policy-gradient estimator on a scalar Example I
/// problem (T = 2) against the closed-form gradient.
[[nodiscard]] GradcheckReport run_gradcheck(const GradcheckOptions& options);

} // namespace rlip
