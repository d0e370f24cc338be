#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rlip/config_io.hpp"
#include "rlip/errors.hpp"
#include "rlip/experiments.hpp"
#include "rlip/gradcheck.hpp"
#include "rlip/parallel.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kSchema = 2, kDivergence = 3, kIo = 4, kGradcheck = 5 };

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_summary(const rlip::SolveReport& r, const fs::path& where) {
  std::cout << "stop: " << rlip::to_string(r.log.stop_reason) << " after " << r.log.updates << " updates\n";
  std::cout << "final r: " << fmt(r.final_performance) << '\n';
  if (r.r2) {
    std::cout << "R2 vs reference: " << fmt(*r.r2) << '\n';
  }
  for (std::size_t g = 0; g < r.groups.size(); ++g) {
    const auto& grp = r.groups[g];
    std::cout << "group " << g << ": n=" << grp.size;
    if (grp.r2_reference) {
      std::cout << " R2(+ref)=" << fmt(*grp.r2_reference) << " R2(-ref)=" << fmt(grp.r2_negated_reference.value_or(0.0));
    }
    std::cout << '\n';
  }
  for (const auto& [name, v] : r.oracles) {
    const double rel = (r.theta.size() == v.size() && v.norm() > 0.0) ? (r.theta - v).norm() / v.norm() : -1.0;
    std::cout << "oracle " << name;
    if (rel >= 0.0) {
      std::cout << ": |theta - oracle| / |oracle| = " << fmt(rel);
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << where.string() << '\n';
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path fresh_dir(const fs::path& base, const std::string& stem) {
  fs::path dir = base / stem;
  for (int i = 1; fs::exists(dir); ++i) {
    dir = base / (stem + "-" + std::to_string(i));
  }
  return dir;
}

void write_escape_csv(const fs::path& path, const rlip::EscapeResult& res, const rlip::Manifest& manifest) {
  std::ostringstream out;
  rlip::write_manifest_header(out, manifest);
  out << "step,gd_loss,rl_loss\n";
  const std::size_t rows = std::max(res.gd_loss.size(), res.rl_loss.size());
  for (std::size_t k = 0; k < rows; ++k) {
    out << k << ',';
    if (k < res.gd_loss.size()) {
      out << rlip::format_double(res.gd_loss[k]);
    }
    out << ',';
    if (k < res.rl_loss.size()) {
      out << rlip::format_double(res.rl_loss[k]);
    }
    out << '\n';
  }
  rlip::write_text_file(path, out.str());
}

int cmd_solve(const std::string& config_path, const std::optional<std::string>& out_dir, std::optional<int> workers) {
  rlip::RunConfig config = rlip::load_run_config(config_path);
  if (out_dir) {
    config.output_dir = *out_dir;
  }
  if (workers) {
    config.train.workers = *workers;
  }
  const rlip::Manifest manifest = rlip::make_manifest(config);
  const rlip::SolveReport report = rlip::run_config(config);
  print_summary(report, rlip::write_solve_outputs(config.output_dir, report, manifest));
  return kOk;
}

int cmd_experiment(const std::string& name, const std::string& scale, std::uint64_t seed, const std::string& base,
                   const rlip::TrainOverrides& overrides) {
  rlip::ExperimentRecipe recipe;
  recipe.name = rlip::recipe_from_string(name);
  recipe.scale = rlip::scale_from_string(scale);
  recipe.seed = seed;
  recipe.overrides = overrides;
  const fs::path dir =
      fresh_dir(base, name + "-" + scale + "-seed" + std::to_string(seed) + "-" + timestamp());
  recipe.output_dir = dir;
  const rlip::RunConfig config = rlip::recipe_config(recipe);
  const rlip::Manifest manifest = rlip::make_manifest(config);
  rlip::write_text_file(dir / "manifest.json", rlip::manifest_to_json(manifest));

  if (recipe.name == rlip::Recipe::Escape) {
    const rlip::EscapeResult res = rlip::run_escape(config);
    write_escape_csv(dir / "loss.csv", res, manifest);
    rlip::write_solve_outputs(dir, res.report, manifest);
    std::cout << "local minimizer: " << fmt(res.local_minimizer, "%.10f") << '\n';
    std::cout << "gradient descent: x=" << fmt(res.gd_endpoint, "%.10f") << " loss=" << fmt(res.gd_loss.back()) << '\n';
    std::cout << "REINFORCE final mean loss: " << fmt(res.rl_final_mean_loss) << '\n';
    std::cout << "wrote " << (dir / "loss.csv").string() << '\n';
    return kOk;
  }
  const rlip::SolveReport report = rlip::run_config(config);
  print_summary(report, rlip::write_solve_outputs(dir, report, manifest));
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, bool inject_bug) {
  rlip::GradcheckOptions opt;
  opt.seed = seed;
  opt.inject_bug = inject_bug;
  const rlip::GradcheckReport rep = rlip::run_gradcheck(opt);
  for (const auto& f : rep.families) {
    std::cout << rlip::to_string(f.family) << ": max relative error " << fmt(f.max_rel_error, "%.3e") << " over "
              << f.instances << " instances " << (f.passed ? "ok" : "FAILED") << '\n';
  }
  const auto& u = rep.unbiasedness;
  std::cout << "unbiasedness: estimate " << fmt(u.estimate, "%.6f") << " exact " << fmt(u.exact, "%.6f") << " z "
            << fmt(u.z, "%.3f") << ' ' << (u.passed ? "ok" : "FAILED") << '\n';
  return rep.passed() ? kOk : kGradcheck;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solve inverse problems by REINFORCE policy-gradient training."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rlip::library_version()));
  app.footer(std::string("Environment:\n  ") + rlip::kWorkersEnv +
             "  worker threads for trajectory sampling and gradient reduction\n"
             "                (default: hardware concurrency; results do not depend on it)\n"
             "Exit codes: 0 ok, 2 config/schema error, 3 divergence, 4 I/O error, 5 gradcheck failure");

  std::string config_path;
  std::optional<std::string> solve_out;
  std::optional<int> workers;
  auto* solve = app.add_subcommand("solve", "Train and analyse the problem described by a JSON config");
  solve->add_option("config", config_path, "Run config (JSON)")->required();
  solve->add_option("-o,--output-dir", solve_out, "Override output.dir from the config");
  solve->add_option("-w,--workers", workers, "Worker threads (overrides train.workers and " +
                                                 std::string(rlip::kWorkersEnv) + ")")
      ->check(CLI::PositiveNumber);

  std::string recipe_name;
  std::string scale = "desk";
  std::uint64_t seed = 0;
  std::string base = "runs";
  bool list = false;
  rlip::TrainOverrides overrides;
  auto* exp = app.add_subcommand("experiment", "Run a named recipe into a fresh timestamped directory");
  exp->add_option("name", recipe_name, "Recipe name (see --list)");
  exp->add_option("--scale", scale, "Problem scale")->check(CLI::IsMember({"paper", "desk"}));
  exp->add_option("--seed", seed, "Seed for data, initialisation and sampling");
  exp->add_option("-o,--output-base", base, "Parent directory for run directories")->capture_default_str();
  exp->add_option("--max-updates", overrides.max_updates, "Override the update budget N");
  exp->add_option("--trajectories", overrides.trajectories, "Override the batch size L");
  exp->add_option("--ensemble", overrides.ensemble, "Override the evaluation ensemble size");
  exp->add_option("-w,--workers", overrides.workers, "Worker threads")->check(CLI::PositiveNumber);
  exp->add_flag("--list", list, "List recipes and the surrogate plug-in notes, then exit");

  std::uint64_t gc_seed = 0;
  bool inject_bug = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference score checks and estimator unbiasedness");
  gc->add_option("--seed", gc_seed, "Seed for the random instances");
  gc->add_flag("--inject-bug", inject_bug, "Corrupt one analytic gradient entry by 1e-2 (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kSchema;
  }

  try {
    if (solve->parsed()) {
      return cmd_solve(config_path, solve_out, workers);
    }
    if (exp->parsed()) {
      if (list) {
        for (const auto r : rlip::all_recipes()) {
          std::cout << rlip::to_string(r) << '\n';
        }
        std::cout << '\n' << rlip::surrogate_plugin_notes();
        return kOk;
      }
      if (recipe_name.empty()) {
        std::cerr << "error: a recipe name is required (see --list)\n";
        return kSchema;
      }
      return cmd_experiment(recipe_name, scale, seed, base, overrides);
    }
    return cmd_gradcheck(gc_seed, inject_bug);
  } catch (const rlip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kSchema;
  } catch (const rlip::ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kSchema;
  } catch (const rlip::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const rlip::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
