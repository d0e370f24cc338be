#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "rlip/config_io.hpp"

namespace rlip {

enum class Recipe { Escape, AutoconvSim1, AutoconvSim2, AutoconvSim3, LinearExample1, LinearExample2 };
enum class Scale { Paper, Desk };

[[nodiscard]] std::string_view to_string(Recipe recipe);
[[nodiscard]] std::string_view to_string(Scale scale);
/// Throw ConfigError listing the valid names.
[[nodiscard]] Recipe recipe_from_string(std::string_view name);
[[nodiscard]] Scale scale_from_string(std::string_view name);
[[nodiscard]] const std::vector<Recipe>& all_recipes();

/// Partial TrainConfig applied on top of a recipe's defaults.
struct TrainOverrides {
  std::optional<int> horizon;
  std::optional<int> trajectories;
  std::optional<int> max_updates;
  std::optional<double> threshold;
  std::optional<double> beta;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<int> log_every;
  std::optional<int> workers;
  std::optional<int> ensemble;  // evaluation trajectories

  void apply(RunConfig& config) const;
};

struct ExperimentRecipe {
  Recipe name = Recipe::AutoconvSim1;
  Scale scale = Scale::Desk;
  std::uint64_t seed = 0;
  TrainOverrides overrides;
  std::filesystem::path output_dir;
};

/// Fully resolved run configuration for a recipe (escape included: its
/// config carries the gradient-descent baseline settings).
[[nodiscard]] RunConfig recipe_config(const ExperimentRecipe& recipe);

struct EscapeResult {
  std::vector<double> gd_loss;  // f(x_k), k = 0..steps
  std::vector<double> rl_loss;  // mean f(x_{T-1}) over the batch drawn at update n
  double gd_endpoint = 0.0;
  double local_minimizer = 0.0;
  double rl_final_mean_loss = 0.0;  // over a fresh evaluation ensemble
  SolveReport report;
};

/// Gradient descent on the toy loss from the configured start point, then
/// REINFORCE on reward -f(x + a) from the same point.
[[nodiscard]] EscapeResult run_escape(const RunConfig& config);

/// Root of f' in (-0.9, -0.8) by bisection.
[[nodiscard]] double toy_local_minimizer();

/// x_{k+1} = x_k - step f'(x_k); returns f(x_0), ..., f(x_steps) and the endpoint.
[[nodiscard]] std::vector<double> gradient_descent_losses(double x0, double step, int steps, double* endpoint = nullptr);

/// Recipe configuration notes for plugging a user-supplied forward model
/// (e.g. a trained chromatography surrogate) into the same pipeline.
[[nodiscard]] std::string_view surrogate_plugin_notes();

} // namespace rlip
