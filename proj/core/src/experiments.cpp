#include "rlip/experiments.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rlip/errors.hpp"

namespace rlip {

namespace {

struct RecipeName {
  Recipe recipe;
  std::string_view name;
};

constexpr RecipeName kRecipes[] = {
    {Recipe::Escape, "escape"},
    {Recipe::AutoconvSim1, "autoconv-sim1"},
    {Recipe::AutoconvSim2, "autoconv-sim2"},
    {Recipe::AutoconvSim3, "autoconv-sim3"},
    {Recipe::LinearExample1, "linear-example1"},
    {Recipe::LinearExample2, "linear-example2"},
};

RunConfig autoconv_config(Recipe recipe, Scale scale) {
  RunConfig c;
  const bool paper = scale == Scale::Paper;
  c.problem.model = ModelKind::AutoConv;
  c.problem.grid_points = paper ? 64 : 16;
  c.noise = NoiseSpec{NoiseKind::GaussianRelative, 0.05, 1, 100};
  c.reward.form = RewardForm::Reciprocal;
  c.reward.alpha = 0.2;
  c.reward.regularizer = Regularizer::BoundaryAbs;
  c.reward.floor = 0.001;

  c.policy.family = PolicyFamily::Mlp;
  c.train.horizon = 10;
  c.train.log_every = 100;
  if (paper) {
    c.policy.hidden = {64, 64, 64};
    c.policy.min_std = 1e-6;
    c.train.trajectories = 1000;
    c.train.max_updates = 8000;
    c.train.beta = 0.125;
    c.train.schedule = {0.001, 50000.0};
    c.train.threshold = 4.0;
    c.analysis.ensemble = 10000;
  } else {
    c.policy.hidden = {32, 32, 32};
    c.policy.min_std = 0.05;
    c.policy.init = {0.1, -2.0};
    c.train.trajectories = 512;
    c.train.max_updates = 4000;
    c.train.beta = 0.005;
    c.train.schedule = {3.0, 100.0};
    c.analysis.ensemble = 10000;
  }

  c.init.kind = InitKind::FixedPoint;
  switch (recipe) {
  case Recipe::AutoconvSim1:
    c.init.atoms = {VectorSpec::constant(0.01)};
    c.problem.nonnegative = true;
    break;
  case Recipe::AutoconvSim2:
    c.reward.alpha = 0.1;
    c.init.atoms = {VectorSpec::constant(0.0)};
    break;
  case Recipe::AutoconvSim3:
    c.init.kind = InitKind::FiniteMixture;
    c.init.atoms = {VectorSpec::reference(0.75), VectorSpec::reference(-0.75)};
    c.init.probabilities = {0.5, 0.5};
    c.train.performance = PerformanceMode::GroupMeans;
    c.train.performance_groups = 2;
    c.analysis.kmeans_k = 2;
    if (paper) {
      c.train.threshold = 20.0;
    }
    break;
  default:
    break;
  }
  if (!paper) {
    c.train.threshold = std::numeric_limits<double>::infinity();
  }
  return c;
}

RunConfig linear_config(Recipe recipe) {
  RunConfig c;
  c.problem.model = ModelKind::Linear;
  c.problem.dim = 4;
  c.noise.reset();
  c.reward.form = RewardForm::Negative;
  c.reward.alpha = 0.1;
  c.reward.regularizer = Regularizer::SquaredNorm;
  c.init.kind = InitKind::FixedPoint;
  c.init.atoms = {VectorSpec::constant(0.0)};
  c.train.horizon = 5;
  c.train.trajectories = 64;
  c.train.max_updates = 20000;
  c.train.beta = 0.0;
  c.train.schedule = {0.05, 50.0};
  c.train.log_every = 1000;
  c.analysis.ensemble = 2000;
  c.analysis.resamples = 2000;
  if (recipe == Recipe::LinearExample1) {
    c.policy.family = PolicyFamily::AffineI;
    c.policy.covariance = 0.01;
  } else {
    c.policy.family = PolicyFamily::AffineII;
    c.policy.epsilon = 0.01;
    c.policy.sigma = 0.1;
  }
  return c;
}

RunConfig escape_config() {
  RunConfig c;
  c.problem.model = ModelKind::Toy;
  c.noise.reset();
  c.reward.form = RewardForm::Negative;
  c.reward.alpha = 0.0;
  c.reward.regularizer = Regularizer::None;
  c.policy.family = PolicyFamily::Mlp;
  c.policy.hidden = {16, 16};
  c.policy.min_std = 0.01;
  c.policy.init = {0.1, -1.0};
  c.init.kind = InitKind::FixedPoint;
  c.init.atoms = {VectorSpec::constant(-1.5)};
  c.train.horizon = 3;
  c.train.trajectories = 256;
  c.train.max_updates = 500;
  c.train.beta = 0.0;
  c.train.schedule = {2.0, 200.0};
  c.train.log_every = 10;
  c.analysis.ensemble = 2000;
  c.analysis.bootstrap = false;
  c.gradient_descent = GradientDescentConfig{0.01, 200};
  return c;
}

} // namespace

std::string_view to_string(Recipe recipe) {
  for (const auto& r : kRecipes) {
    if (r.recipe == recipe) {
      return r.name;
    }
  }
  return "unknown";
}

std::string_view to_string(Scale scale) { return scale == Scale::Paper ? "paper" : "desk"; }

Recipe recipe_from_string(std::string_view name) {
  std::string known;
  for (const auto& r : kRecipes) {
    if (r.name == name) {
      return r.recipe;
    }
    known += known.empty() ? "" : ", ";
    known += r.name;
  }
  throw ConfigError("unknown recipe '" + std::string(name) + "' (expected one of " + known + ")");
}

Scale scale_from_string(std::string_view name) {
  if (name == "paper") {
    return Scale::Paper;
  }
  if (name == "desk") {
    return Scale::Desk;
  }
  throw ConfigError("unknown scale '" + std::string(name) + "' (expected paper or desk)");
}

const std::vector<Recipe>& all_recipes() {
  static const std::vector<Recipe> recipes = [] {
    std::vector<Recipe> v;
    for (const auto& r : kRecipes) {
      v.push_back(r.recipe);
    }
    return v;
  }();
  return recipes;
}

void TrainOverrides::apply(RunConfig& c) const {
  if (horizon) {
    c.train.horizon = *horizon;
  }
  if (trajectories) {
    c.train.trajectories = *trajectories;
  }
  if (max_updates) {
    c.train.max_updates = *max_updates;
  }
  if (threshold) {
    c.train.threshold = *threshold;
  }
  if (beta) {
    c.train.beta = *beta;
  }
  if (c1) {
    c.train.schedule.c1 = *c1;
  }
  if (c2) {
    c.train.schedule.c2 = *c2;
  }
  if (log_every) {
    c.train.log_every = *log_every;
  }
  if (workers) {
    c.train.workers = *workers;
  }
  if (ensemble) {
    c.analysis.ensemble = *ensemble;
  }
}

RunConfig recipe_config(const ExperimentRecipe& recipe) {
  RunConfig c;
  switch (recipe.name) {
  case Recipe::Escape:
    c = escape_config();
    break;
  case Recipe::AutoconvSim1:
  case Recipe::AutoconvSim2:
  case Recipe::AutoconvSim3:
    c = autoconv_config(recipe.name, recipe.scale);
    break;
  case Recipe::LinearExample1:
  case Recipe::LinearExample2:
    c = linear_config(recipe.name);
    break;
  }
  c.seed = recipe.seed;
  c.train.seed = recipe.seed;
  recipe.overrides.apply(c);
  if (!recipe.output_dir.empty()) {
    c.output_dir = recipe.output_dir.string();
  }
  c.train.validate(0);
  return c;
}

// ---------------------------------------------------------------------------
// Escape from a local minimum

double toy_local_minimizer() {
  double lo = -0.9;
  double hi = -0.8;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (toy_scalar_loss_derivative(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> gradient_descent_losses(double x0, double step, int steps, double* endpoint) {
  if (!(step > 0.0) || steps < 0) {
    throw ConfigError("gradient descent needs a positive step and a nonnegative step count");
  }
  std::vector<double> loss;
  loss.reserve(static_cast<std::size_t>(steps) + 1);
  double x = x0;
  loss.push_back(toy_scalar_loss(x));
  for (int k = 0; k < steps; ++k) {
    x -= step * toy_scalar_loss_derivative(x);
    loss.push_back(toy_scalar_loss(x));
  }
  if (endpoint != nullptr) {
    *endpoint = x;
  }
  return loss;
}

EscapeResult run_escape(const RunConfig& config) {
  if (config.problem.model != ModelKind::Toy) {
    throw ConfigError("escape runs on the toy loss model");
  }
  if (config.init.kind != InitKind::FixedPoint) {
    throw ConfigError("escape needs a fixed initial point");
  }
  const GradientDescentConfig gd = config.gradient_descent.value_or(GradientDescentConfig{});
  ProblemSetup setup = build_problem(config);
  const double x0 = setup.problem.init.atoms.front()[0];

  EscapeResult res;
  res.local_minimizer = toy_local_minimizer();
  res.gd_loss = gradient_descent_losses(x0, gd.step, gd.steps, &res.gd_endpoint);

  const auto observer = [&res](long long, const Policy&, const std::vector<Trajectory>& batch) {
    double acc = 0.0;
    for (const auto& h : batch) {
      acc += toy_scalar_loss(h.final_state()[0]);
    }
    res.rl_loss.push_back(acc / static_cast<double>(batch.size()));
  };
  TrainResult trained = train(*setup.problem.initial_policy, *setup.problem.env, setup.problem.init,
                              setup.options.train, observer);
  SolveOptions opts = setup.options;
  opts.keep_ensemble = true;
  res.report = summarise(*trained.policy, setup.problem, opts);
  res.report.log = std::move(trained.log);
  if (!res.report.log.entries.empty()) {
    res.report.final_performance = res.report.log.entries.back().performance;
  }
  double acc = 0.0;
  for (const auto& x : res.report.ensemble) {
    acc += toy_scalar_loss(x[0]);
  }
  res.rl_final_mean_loss = acc / static_cast<double>(res.report.ensemble.size());
  res.rl_loss.push_back(res.rl_final_mean_loss);
  if (!config.analysis.keep_ensemble) {
    res.report.ensemble.clear();
  }
  return res;
}

std::string_view surrogate_plugin_notes() {
  return R"(Plugging in a user-supplied forward model

1. Derive from rlip::ForwardModel and implement input_dim(), output_dim()
   and eval_into(x, y). A trained surrogate network works as long as
   eval_into is thread-safe (const, no shared scratch state).
2. Build the observations (rlip::ObservationSet) from measured signals, or
   with generate_observations() and NoiseKind::ShiftThenGaussian for shifted
   synthetic data (level 0.01, shift 1).
3. Use the per-entry residual: RewardSpec{form = Reciprocal, alpha = 0.1,
   regularizer = as appropriate, normalizer = MeanPerEntry}.
4. Policy: MlpPolicy with hidden layers (128, 64, 16).
5. TrainConfig: T = 10, beta = 0.01, schedule c1 = 0.001, c2 = 100000,
   threshold H0 = 0.45.
6. Call rlip::solve() with a Problem holding the reward environment, the
   initial-state distribution and the policy.
)";
}

} // namespace rlip
