#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlip/forward_models.hpp"
#include "rlip/mdp.hpp"
#include "rlip/policy.hpp"
#include "rlip/reinforce.hpp"

namespace rlip {

[[nodiscard]] std::string_view library_version();

enum class ModelKind { AutoConv, Linear, Toy };

/// A vector given literally, as a constant broadcast to the state dimension,
/// or as a multiple of the reference solution.
struct VectorSpec {
  enum class Kind { Values, Constant, Reference };
  Kind kind = Kind::Constant;
  Vector values;
  double scalar = 0.0;

  static VectorSpec constant(double c);
  static VectorSpec reference(double scale);
  static VectorSpec literal(Vector v);
  [[nodiscard]] Vector resolve(int dim, const std::optional<Vector>& reference) const;
};

struct ProblemConfig {
  ModelKind model = ModelKind::AutoConv;
  int grid_points = 16;  // autoconv
  // Linear: an explicit matrix, or a random square one with singular values
  // drawn uniformly from [singular_min, singular_max].
  Matrix matrix;
  int dim = 4;
  double singular_min = 2.5;
  double singular_max = 3.5;
  std::optional<Vector> x_true;  // linear default: standard normal draw
  bool nonnegative = false;
};

struct PolicyConfig {
  PolicyFamily family = PolicyFamily::Mlp;
  std::vector<int> hidden{64, 64, 64};
  int ma_window = 3;
  double min_std = 1e-6;
  MlpInit init;
  double covariance = 0.01;  // affine1: Sigma = covariance * I
  double omega = 0.0;        // affine2; 0 picks half the admissible bound
  double epsilon = 0.0;
  double sigma = 0.1;
  std::optional<Vector> theta0;  // affine families; default zeros
};

struct InitConfig {
  InitKind kind = InitKind::FixedPoint;
  std::vector<VectorSpec> atoms{VectorSpec::constant(0.0)};
  std::vector<double> probabilities{1.0};
  VectorSpec gaussian_std = VectorSpec::constant(0.0);
};

struct AnalysisConfig {
  int ensemble = 10000;
  bool bootstrap = true;
  int resamples = 10000;
  double level = 0.99;
  int kmeans_k = 0;
  int kmeans_restarts = 10;
  bool keep_ensemble = false;
};

/// Fixed-step gradient descent run next to REINFORCE on the toy loss.
struct GradientDescentConfig {
  double step = 0.01;
  int steps = 200;
};

struct RunConfig {
  ProblemConfig problem;
  std::optional<NoiseSpec> noise;  // none: a single clean observation
  RewardSpec reward;
  PolicyConfig policy;
  InitConfig init;
  TrainConfig train;
  AnalysisConfig analysis;
  std::optional<GradientDescentConfig> gradient_descent;
  std::string output_dir = "rlip-out";
  std::uint64_t seed = 0;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the
/// offending path, e.g. "train.Tmax".
[[nodiscard]] RunConfig parse_run_config(std::string_view json_text);
/// Throws IoError if the file cannot be read.
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON; parse_run_config(run_config_to_json(c)) reproduces c.
[[nodiscard]] std::string run_config_to_json(const RunConfig& config, int indent = 2);

/// Everything solve() needs, resolved from a config.
struct ProblemSetup {
  Problem problem;
  SolveOptions options;
  /// Closed-form comparison vectors (linear problems with affine policies).
  std::vector<std::pair<std::string, Vector>> oracles;
};
[[nodiscard]] ProblemSetup build_problem(const RunConfig& config);

struct Manifest {
  std::string version;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string config_json;  // canonical, compact
};

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes);
[[nodiscard]] Manifest make_manifest(const RunConfig& config);
/// {"version", "config_hash", "seed", "config"} in that order.
[[nodiscard]] std::string manifest_to_json(const Manifest& manifest);

/// Runs training and analysis for a config and attaches the oracles.
[[nodiscard]] SolveReport run_config(const RunConfig& config);

[[nodiscard]] std::string report_to_json(const SolveReport& report, const Manifest& manifest);
[[nodiscard]] SolveReport report_from_json(std::string_view json_text, Manifest* manifest = nullptr);

/// 17 significant digits, which reads back to the same double.
[[nodiscard]] std::string format_double(double v);

/// CSV writers; each file starts with "#" manifest lines.
void write_manifest_header(std::ostream& out, const Manifest& manifest);
void write_train_log_csv(std::ostream& out, const TrainLog& log, const Manifest& manifest);
/// Columns: i, mean, reference (if any), ci_lower, ci_upper (if any).
void write_estimate_csv(std::ostream& out, const SolveReport& report, const Manifest& manifest);
/// Columns: i, then mean/ci_lower/ci_upper per group.
void write_groups_csv(std::ostream& out, const SolveReport& report, const Manifest& manifest);

/// Writes text to a file, creating parent directories; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Writes report.json, train_log.csv, estimate.csv and (with groups)
/// groups.csv under `dir`; returns the report path.
std::filesystem::path write_solve_outputs(const std::filesystem::path& dir, const SolveReport& report,
                                          const Manifest& manifest);

} // namespace rlip
