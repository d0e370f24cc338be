#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rlip/errors.hpp"
#include "rlip/experiments.hpp"

using namespace rlip;

namespace {

RunConfig config_for(Recipe r, Scale s, std::uint64_t seed = 1) {
  ExperimentRecipe rec;
  rec.name = r;
  rec.scale = s;
  rec.seed = seed;
  return recipe_config(rec);
}

} // namespace

TEST(Registry, Names) {
  for (const Recipe r : all_recipes()) {
    EXPECT_EQ(recipe_from_string(to_string(r)), r);
  }
  EXPECT_THROW((void)recipe_from_string("sim4"), ConfigError);
  EXPECT_THROW((void)scale_from_string("huge"), ConfigError);
  EXPECT_EQ(scale_from_string("desk"), Scale::Desk);
}

TEST(Registry, PaperScaleSim1Echo) {
  const RunConfig c = config_for(Recipe::AutoconvSim1, Scale::Paper);
  EXPECT_EQ(c.train.horizon, 10);
  EXPECT_EQ(c.reward.alpha, 0.2);
  EXPECT_EQ(c.train.beta, 0.125);
  EXPECT_EQ(c.train.threshold, 4.0);
  EXPECT_EQ(c.problem.grid_points, 64);
  EXPECT_EQ(c.train.max_updates, 8000);
  EXPECT_EQ(c.train.schedule.c1, 0.001);
  EXPECT_EQ(c.train.schedule.c2, 50000.0);
  EXPECT_EQ(c.policy.hidden, (std::vector<int>{64, 64, 64}));
}

TEST(Registry, Sim3Threshold) {
  EXPECT_EQ(config_for(Recipe::AutoconvSim3, Scale::Paper).train.threshold, 20.0);
  const RunConfig d = config_for(Recipe::AutoconvSim3, Scale::Desk);
  EXPECT_EQ(d.analysis.kmeans_k, 2);
  EXPECT_EQ(d.init.kind, InitKind::FiniteMixture);
}

TEST(Registry, DeskScaleBudget) {
  for (Recipe r : {Recipe::AutoconvSim1, Recipe::AutoconvSim2, Recipe::AutoconvSim3}) {
    const RunConfig c = config_for(r, Scale::Desk);
    EXPECT_EQ(c.problem.grid_points, 16);
    EXPECT_LE(c.train.max_updates, 4000);
  }
}

TEST(Registry, OverridesApply) {
  ExperimentRecipe rec;
  rec.name = Recipe::LinearExample1;
  rec.seed = 9;
  rec.overrides.max_updates = 12;
  rec.overrides.ensemble = 33;
  const RunConfig c = recipe_config(rec);
  EXPECT_EQ(c.train.max_updates, 12);
  EXPECT_EQ(c.analysis.ensemble, 33);
  EXPECT_EQ(c.train.seed, 9u);
  rec.overrides.beta = -1.0;
  EXPECT_THROW((void)recipe_config(rec), ConfigError);
}

TEST(Escape, LocalMinimizer) {
  const double x = toy_local_minimizer();
  EXPECT_GT(x, -0.9);
  EXPECT_LT(x, -0.8);
  EXPECT_NEAR(4 * x * x * x - 3.4 * x - 0.6, 0.0, 1e-12);
  EXPECT_GT(toy_scalar_loss(x), 1.0);
}

TEST(Escape, GradientDescentStalls) {
  double end = 0.0;
  const auto loss = gradient_descent_losses(-1.5, 0.01, 200, &end);
  ASSERT_EQ(loss.size(), 201u);
  EXPECT_NEAR(end, toy_local_minimizer(), 0.05);
  EXPECT_GE(loss.back(), toy_scalar_loss(toy_local_minimizer()) - 1e-6);
  for (std::size_t k = 1; k < loss.size(); ++k) {
    EXPECT_LE(loss[k], loss[k - 1]);
  }
  EXPECT_THROW((void)gradient_descent_losses(0.0, 0.0, 5), ConfigError);
}

TEST(Escape, ReinforceLeavesLocalMinimum) {
  const RunConfig c = config_for(Recipe::Escape, Scale::Desk, 7);
  const EscapeResult res = run_escape(c);
  EXPECT_EQ(res.gd_loss.size(), 201u);
  EXPECT_EQ(res.rl_loss.size(), static_cast<std::size_t>(c.train.max_updates) + 1);
  EXPECT_LT(res.rl_final_mean_loss, 0.5);
  EXPECT_GT(res.gd_loss.back(), 1.0);
}

TEST(Escape, RejectsOtherModels) {
  EXPECT_THROW((void)run_escape(config_for(Recipe::LinearExample1, Scale::Desk)), ConfigError);
}

TEST(Recipes, LinearReportCarriesTikhonov) {
  ExperimentRecipe rec;
  rec.name = Recipe::LinearExample1;
  rec.seed = 1;
  rec.overrides.max_updates = 50;
  rec.overrides.ensemble = 200;
  const SolveReport r = run_config(recipe_config(rec));
  bool found = false;
  for (const auto& [name, v] : r.oracles) {
    if (name == "tikhonov") {
      found = true;
      EXPECT_EQ(v.size(), r.theta.size());
    }
  }
  EXPECT_TRUE(found);
}

TEST(Recipes, Sim3ReportsTwoBands) {
  ExperimentRecipe rec;
  rec.name = Recipe::AutoconvSim3;
  rec.seed = 1;
  rec.overrides.max_updates = 3;
  rec.overrides.ensemble = 400;
  RunConfig c = recipe_config(rec);
  c.analysis.resamples = 200;
  const SolveReport r = run_config(c);
  ASSERT_EQ(r.groups.size(), 2u);
  for (const auto& g : r.groups) {
    EXPECT_TRUE(g.ci.has_value());
    EXPECT_TRUE(g.r2_reference.has_value());
  }
}

TEST(Recipes, SurrogateNotes) {
  const std::string notes(surrogate_plugin_notes());
  EXPECT_NE(notes.find("(128, 64, 16)"), std::string::npos);
  EXPECT_NE(notes.find("ForwardModel"), std::string::npos);
}
