#include "rlip/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rlip/baselines.hpp"
#include "rlip/mdp.hpp"
#include "rlip/random.hpp"

namespace rlip {

namespace {

Vector normal_vector(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = normal(rng);
  }
  return v;
}

Matrix normal_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = normal(rng);
  }
  return m;
}

std::unique_ptr<Policy> random_policy(PolicyFamily family, Rng& rng) {
  std::uniform_int_distribution<int> dim_dist(1, 5);
  const int d = dim_dist(rng);
  switch (family) {
  case PolicyFamily::AffineI: {
    const Matrix m = normal_matrix(d, d, rng);
    return std::make_unique<AffinePolicyI>(normal_vector(d, rng), m * m.transpose() + 0.5 * Matrix::Identity(d, d));
  }
  case PolicyFamily::AffineII: {
    const Matrix a = normal_matrix(d, d, rng);
    std::uniform_real_distribution<double> u(0.2, 0.9);
    const double eps = u(rng) * 0.1;
    const double omega = u(rng) * omega_upper_bound(a, eps);
    return std::make_unique<AffinePolicyII>(
        AffinePolicyII::from_operator(normal_vector(d, rng), a, omega, eps, u(rng)));
  }
  case PolicyFamily::Mlp: {
    std::uniform_int_distribution<int> width(3, 12);
    const int state = d + 1;
    auto arch = MlpArchitecture::for_state(state, {width(rng), width(rng)}, 3, 1e-3);
    auto p = std::make_unique<MlpPolicy>(arch);
    p->init_glorot(rng());
    p->set_theta(p->theta() + normal_vector(p->param_count(), rng, 0.1));
    return p;
  }
  }
  return nullptr;
}

UnbiasednessCheck check_unbiasedness(const GradcheckOptions& opt) {
  const Matrix a = Matrix::Constant(1, 1, 1.3);
  const Vector y = Vector::Constant(1, 0.7);
  const Vector theta = Vector::Constant(1, 0.4);
  const Matrix sigma = Matrix::Constant(1, 1, 0.25);
  const Vector x0 = Vector::Constant(1, 0.2);
  const double alpha = 0.1;
  const int horizon = 2;

  RewardSpec spec;
  spec.form = RewardForm::Negative;
  spec.alpha = alpha;
  spec.regularizer = Regularizer::SquaredNorm;
  const RewardEnv env(std::make_shared<LinearModel>(a), single_observation(y), spec);
  const AffinePolicyI policy(theta, sigma);
  const auto batch = generate_batch(policy, InitStateDist::fixed(x0), horizon, opt.unbiasedness_draws, env,
                                    {opt.seed, stream::kTraining, 0}, 0);

  double sum = 0.0;
  double sum_sq = 0.0;
  Vector g(1);
  for (const auto& h : batch) {
    g.setZero();
    policy.accumulate_score_sum(h.states, h.actions, h.return_value, g);
    sum += g[0];
    sum_sq += g[0] * g[0];
  }
  const auto n = static_cast<double>(batch.size());
  UnbiasednessCheck c;
  c.estimate = sum / n;
  c.standard_error = std::sqrt(std::max(0.0, sum_sq / n - c.estimate * c.estimate) / (n - 1.0));
  c.exact = closed_form_JT(a, y, theta, sigma, alpha, horizon, x0).gradient[0];
  c.z = std::abs(c.estimate - c.exact) / c.standard_error;
  c.passed = c.z <= opt.max_z;
  return c;
}

} // namespace

bool GradcheckReport::passed() const {
  return unbiasedness.passed &&
         std::all_of(families.begin(), families.end(), [](const FamilyCheck& f) { return f.passed; });
}

double score_relative_error(const Policy& policy, const VectorRef& x, const VectorRef& a, double step,
                            bool inject_bug) {
  Vector g = policy.grad_log_density(x, a);
  if (inject_bug) {
    g[0] += 1e-2;
  }
  const std::unique_ptr<Policy> probe = policy.clone();
  const Vector theta = policy.theta();
  Vector fd(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector t = theta;
    t[k] = theta[k] + step;
    probe->set_theta(t);
    const double up = probe->log_density(x, a);
    t[k] = theta[k] - step;
    probe->set_theta(t);
    const double down = probe->log_density(x, a);
    fd[k] = (up - down) / (2.0 * step);
  }
  return (g - fd).norm() / std::max(fd.norm(), 1e-12);
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  GradcheckReport report;
  for (const PolicyFamily family : {PolicyFamily::AffineI, PolicyFamily::AffineII, PolicyFamily::Mlp}) {
    Rng rng = make_stream(opt.seed, {stream::kPolicyInit, static_cast<std::uint64_t>(family)});
    FamilyCheck check;
    check.family = family;
    for (int i = 0; i < opt.instances; ++i) {
      const auto policy = random_policy(family, rng);
      const int d = policy->state_dim();
      const Vector x = normal_vector(d, rng);
      const Vector a = policy->action_mean(x) + normal_vector(d, rng, 0.5);
      check.max_rel_error = std::max(check.max_rel_error, score_relative_error(*policy, x, a, 1e-6, opt.inject_bug));
      ++check.instances;
    }
    check.passed = check.max_rel_error < opt.tolerance;
    report.families.push_back(check);
  }
  report.unbiasedness = check_unbiasedness(opt);
  return report;
}

} // namespace rlip
