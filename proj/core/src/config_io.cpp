#include "rlip/config_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rlip/baselines.hpp"
#include "rlip/errors.hpp"
#include "rlip/random.hpp"

#ifndef RLIP_VERSION
#define RLIP_VERSION "0.0.0"
#endif

namespace rlip {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view library_version() { return RLIP_VERSION; }

// ---------------------------------------------------------------------------
// VectorSpec

VectorSpec VectorSpec::constant(double c) {
  VectorSpec s;
  s.kind = Kind::Constant;
  s.scalar = c;
  return s;
}

VectorSpec VectorSpec::reference(double scale) {
  VectorSpec s;
  s.kind = Kind::Reference;
  s.scalar = scale;
  return s;
}

VectorSpec VectorSpec::literal(Vector v) {
  VectorSpec s;
  s.kind = Kind::Values;
  s.values = std::move(v);
  return s;
}

Vector VectorSpec::resolve(int dim, const std::optional<Vector>& reference) const {
  switch (kind) {
  case Kind::Constant:
    return Vector::Constant(dim, scalar);
  case Kind::Reference:
    if (!reference) {
      throw ConfigError("vector given relative to the reference, but the problem has no reference solution");
    }
    if (reference->size() != dim) {
      throw ShapeError("reference solution has the wrong dimension");
    }
    return scalar * *reference;
  case Kind::Values:
    if (values.size() != dim) {
      throw ShapeError("vector has " + std::to_string(values.size()) + " entries, expected " + std::to_string(dim));
    }
    return values;
  }
  return {};
}

namespace {

// ---------------------------------------------------------------------------
// Strict JSON reading

class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(where() + "expected an object");
    }
  }

  [[nodiscard]] std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) {
        throw ConfigError(path(key) + ": expected a number");
      }
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) {
        throw ConfigError(path(key) + ": expected an integer");
      }
      const auto n = v->get<long long>();
      if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
        throw ConfigError(path(key) + ": integer out of range");
      }
      out = static_cast<int>(n);
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) {
        throw ConfigError(path(key) + ": expected true or false");
      }
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) {
        throw ConfigError(path(key) + ": expected a string");
      }
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError("unknown key '" + path(item.key()) + "'");
      }
    }
  }

private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vector to_vector(const json& v, const std::string& path) {
  if (!v.is_array()) {
    throw ConfigError(path + ": expected an array of numbers");
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
    }
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Matrix to_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError(path + ": expected a non-empty array of rows");
  }
  Matrix out;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Vector row = to_vector(v[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      out.resize(static_cast<Eigen::Index>(v.size()), row.size());
    } else if (row.size() != out.cols()) {
      throw ConfigError(path + ": rows differ in length");
    }
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

VectorSpec to_vector_spec(const json& v, const std::string& path) {
  if (v.is_number()) {
    return VectorSpec::constant(v.get<double>());
  }
  if (v.is_array()) {
    return VectorSpec::literal(to_vector(v, path));
  }
  if (v.is_object()) {
    Section s(v, path);
    double scale = 1.0;
    if (s.find("reference") == nullptr) {
      throw ConfigError(path + ": expected {\"reference\": scale}");
    }
    s.number("reference", scale);
    s.finish();
    return VectorSpec::reference(scale);
  }
  throw ConfigError(path + ": expected a number, an array or {\"reference\": scale}");
}

json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

json from_matrix(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(from_vector(m.row(r).transpose()));
  }
  return out;
}

json from_vector_spec(const VectorSpec& s) {
  switch (s.kind) {
  case VectorSpec::Kind::Constant:
    return s.scalar;
  case VectorSpec::Kind::Reference:
    return json{{"reference", s.scalar}};
  case VectorSpec::Kind::Values:
    return from_vector(s.values);
  }
  return nullptr;
}

template <typename E>
struct Names {
  E value;
  const char* name;
};

template <typename E, std::size_t N>
E enum_from(const Names<E> (&table)[N], const std::string& text, const std::string& path) {
  std::string options;
  for (const auto& n : table) {
    if (text == n.name) {
      return n.value;
    }
    options += options.empty() ? n.name : std::string(", ") + n.name;
  }
  throw ConfigError(path + ": unknown value '" + text + "' (expected one of " + options + ")");
}

template <typename E, std::size_t N>
const char* enum_name(const Names<E> (&table)[N], E value) {
  for (const auto& n : table) {
    if (n.value == value) {
      return n.name;
    }
  }
  return "?";
}

constexpr Names<ModelKind> kModels[] = {
    {ModelKind::AutoConv, "autoconv"}, {ModelKind::Linear, "linear"}, {ModelKind::Toy, "toy"}};
constexpr Names<NoiseKind> kNoise[] = {{NoiseKind::GaussianRelative, "relative"},
                                       {NoiseKind::GaussianAbsolute, "absolute"},
                                       {NoiseKind::ShiftThenGaussian, "shift"}};
constexpr Names<RewardForm> kForms[] = {{RewardForm::Reciprocal, "reciprocal"}, {RewardForm::Negative, "negative"}};
constexpr Names<Regularizer> kRegs[] = {
    {Regularizer::None, "none"}, {Regularizer::SquaredNorm, "squared-norm"}, {Regularizer::BoundaryAbs, "boundary-abs"}};
constexpr Names<ResidualNormalizer> kNorms[] = {{ResidualNormalizer::Sum, "sum"},
                                                {ResidualNormalizer::MeanPerEntry, "mean"}};
constexpr Names<PolicyFamily> kFamilies[] = {
    {PolicyFamily::AffineI, "affine1"}, {PolicyFamily::AffineII, "affine2"}, {PolicyFamily::Mlp, "mlp"}};
constexpr Names<InitKind> kInits[] = {
    {InitKind::FixedPoint, "fixed"}, {InitKind::Gaussian, "gaussian"}, {InitKind::FiniteMixture, "mixture"}};
constexpr Names<PerformanceMode> kPerf[] = {{PerformanceMode::MeanState, "mean-state"},
                                            {PerformanceMode::GroupMeans, "group-means"}};

template <typename E, std::size_t N>
void enumeration(Section& s, const std::string& key, const Names<E> (&table)[N], E& out) {
  std::string text;
  if (s.find(key) != nullptr) {
    s.string(key, text);
    out = enum_from(table, text, s.path(key));
  }
}

// ---------------------------------------------------------------------------
// Sections

void read_problem(const json& j, ProblemConfig& p) {
  Section s(j, "problem");
  enumeration(s, "model", kModels, p.model);
  s.integer("grid_points", p.grid_points);
  if (const json* m = s.find("matrix")) {
    p.matrix = to_matrix(*m, s.path("matrix"));
  }
  s.integer("dim", p.dim);
  s.number("singular_min", p.singular_min);
  s.number("singular_max", p.singular_max);
  if (const json* x = s.find("x_true")) {
    p.x_true = to_vector(*x, s.path("x_true"));
  }
  s.boolean("nonnegative", p.nonnegative);
  s.finish();

  if (p.model == ModelKind::AutoConv && p.grid_points < 2) {
    throw ConfigError("problem.grid_points must be >= 2");
  }
  if (p.model == ModelKind::Linear) {
    if (p.matrix.size() == 0) {
      if (p.dim < 1) {
        throw ConfigError("problem.dim must be >= 1");
      }
      if (!(p.singular_min > 0.0) || !(p.singular_max >= p.singular_min)) {
        throw ConfigError("problem.singular_min/singular_max must satisfy 0 < min <= max");
      }
    }
    const Eigen::Index n = p.matrix.size() == 0 ? p.dim : p.matrix.cols();
    if (p.x_true && p.x_true->size() != n) {
      throw ConfigError("problem.x_true must have one entry per matrix column");
    }
  }
}

json write_problem(const ProblemConfig& p) {
  json j{{"model", enum_name(kModels, p.model)}};
  switch (p.model) {
  case ModelKind::AutoConv:
    j["grid_points"] = p.grid_points;
    break;
  case ModelKind::Linear:
    if (p.matrix.size() != 0) {
      j["matrix"] = from_matrix(p.matrix);
    } else {
      j["dim"] = p.dim;
      j["singular_min"] = p.singular_min;
      j["singular_max"] = p.singular_max;
    }
    if (p.x_true) {
      j["x_true"] = from_vector(*p.x_true);
    }
    break;
  case ModelKind::Toy:
    break;
  }
  j["nonnegative"] = p.nonnegative;
  return j;
}

void read_noise(const json& j, std::optional<NoiseSpec>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  Section s(j, "noise");
  NoiseSpec n;
  enumeration(s, "kind", kNoise, n.kind);
  s.number("level", n.level);
  s.integer("shift", n.shift_magnitude);
  s.integer("samples", n.sample_count);
  s.finish();
  try {
    n.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  out = n;
}

json write_noise(const std::optional<NoiseSpec>& n) {
  if (!n) {
    return nullptr;
  }
  return {{"kind", enum_name(kNoise, n->kind)},
          {"level", n->level},
          {"shift", n->shift_magnitude},
          {"samples", n->sample_count}};
}

void read_reward(const json& j, RewardSpec& r) {
  Section s(j, "reward");
  enumeration(s, "form", kForms, r.form);
  s.number("alpha", r.alpha);
  enumeration(s, "regularizer", kRegs, r.regularizer);
  s.number("floor", r.floor);
  enumeration(s, "normalizer", kNorms, r.normalizer);
  s.finish();
  try {
    r.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("reward: ") + e.what());
  }
}

json write_reward(const RewardSpec& r) {
  return {{"form", enum_name(kForms, r.form)},
          {"alpha", r.alpha},
          {"regularizer", enum_name(kRegs, r.regularizer)},
          {"floor", r.floor},
          {"normalizer", enum_name(kNorms, r.normalizer)}};
}

void read_policy(const json& j, PolicyConfig& p) {
  Section s(j, "policy");
  enumeration(s, "family", kFamilies, p.family);
  if (const json* h = s.find("hidden")) {
    const Vector v = to_vector(*h, s.path("hidden"));
    p.hidden.clear();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] != std::floor(v[i]) || v[i] < 1.0) {
        throw ConfigError(s.path("hidden") + ": layer sizes must be positive integers");
      }
      p.hidden.push_back(static_cast<int>(v[i]));
    }
  }
  s.integer("ma_window", p.ma_window);
  s.number("min_std", p.min_std);
  s.number("init_gain", p.init.output_gain);
  s.number("std_bias", p.init.std_bias);
  s.number("covariance", p.covariance);
  s.number("omega", p.omega);
  s.number("epsilon", p.epsilon);
  s.number("sigma", p.sigma);
  if (const json* t = s.find("theta0")) {
    p.theta0 = to_vector(*t, s.path("theta0"));
  }
  s.finish();

  if (p.ma_window < 1 || p.ma_window % 2 == 0) {
    throw ConfigError("policy.ma_window must be a positive odd integer");
  }
  if (!(p.min_std > 0.0)) {
    throw ConfigError("policy.min_std must be positive");
  }
  if (!(p.init.output_gain > 0.0)) {
    throw ConfigError("policy.init_gain must be positive");
  }
  if (!(p.covariance > 0.0)) {
    throw ConfigError("policy.covariance must be positive");
  }
  if (!(p.omega >= 0.0) || !(p.epsilon >= 0.0) || !(p.sigma >= 0.0)) {
    throw ConfigError("policy.omega, policy.epsilon and policy.sigma must be nonnegative");
  }
}

json write_policy(const PolicyConfig& p) {
  json j{{"family", enum_name(kFamilies, p.family)}};
  switch (p.family) {
  case PolicyFamily::Mlp:
    j["hidden"] = p.hidden;
    j["ma_window"] = p.ma_window;
    j["min_std"] = p.min_std;
    j["init_gain"] = p.init.output_gain;
    j["std_bias"] = p.init.std_bias;
    break;
  case PolicyFamily::AffineI:
    j["covariance"] = p.covariance;
    break;
  case PolicyFamily::AffineII:
    j["omega"] = p.omega;
    j["epsilon"] = p.epsilon;
    j["sigma"] = p.sigma;
    break;
  }
  if (p.family != PolicyFamily::Mlp && p.theta0) {
    j["theta0"] = from_vector(*p.theta0);
  }
  return j;
}

void read_init(const json& j, InitConfig& c) {
  Section s(j, "init");
  enumeration(s, "kind", kInits, c.kind);
  if (const json* v = s.find("point")) {
    c.atoms = {to_vector_spec(*v, s.path("point"))};
    c.probabilities = {1.0};
  }
  if (const json* v = s.find("mean")) {
    c.atoms = {to_vector_spec(*v, s.path("mean"))};
    c.probabilities = {1.0};
  }
  if (const json* v = s.find("std")) {
    c.gaussian_std = to_vector_spec(*v, s.path("std"));
  }
  if (const json* v = s.find("atoms")) {
    if (!v->is_array() || v->empty()) {
      throw ConfigError(s.path("atoms") + ": expected a non-empty array");
    }
    c.atoms.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      c.atoms.push_back(to_vector_spec((*v)[i], s.path("atoms") + "[" + std::to_string(i) + "]"));
    }
  }
  if (const json* v = s.find("probabilities")) {
    const Vector p = to_vector(*v, s.path("probabilities"));
    c.probabilities.assign(p.data(), p.data() + p.size());
  }
  s.finish();
  if (c.kind == InitKind::FiniteMixture && c.probabilities.size() != c.atoms.size()) {
    throw ConfigError("init.probabilities needs one entry per atom");
  }
  if (c.kind != InitKind::FiniteMixture && c.atoms.size() != 1) {
    throw ConfigError("init: fixed and gaussian initial states take a single point");
  }
}

json write_init(const InitConfig& c) {
  json j{{"kind", enum_name(kInits, c.kind)}};
  switch (c.kind) {
  case InitKind::FixedPoint:
    j["point"] = from_vector_spec(c.atoms.front());
    break;
  case InitKind::Gaussian:
    j["mean"] = from_vector_spec(c.atoms.front());
    j["std"] = from_vector_spec(c.gaussian_std);
    break;
  case InitKind::FiniteMixture: {
    json atoms = json::array();
    for (const auto& a : c.atoms) {
      atoms.push_back(from_vector_spec(a));
    }
    j["atoms"] = atoms;
    j["probabilities"] = c.probabilities;
    break;
  }
  }
  return j;
}

void read_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.integer("T", t.horizon);
  s.integer("L", t.trajectories);
  s.integer("N", t.max_updates);
  if (const json* h = s.find("H0")) {
    if (h->is_null()) {
      t.threshold = std::numeric_limits<double>::infinity();
    } else {
      s.number("H0", t.threshold);
    }
  }
  s.number("beta", t.beta);
  if (const json* w = s.find("weights")) {
    t.weights = to_vector(*w, s.path("weights"));
  }
  s.number("c1", t.schedule.c1);
  s.number("c2", t.schedule.c2);
  s.integer("log_every", t.log_every);
  s.integer("patience", t.patience);
  s.number("divergence_ceiling", t.divergence_ceiling);
  s.boolean("fresh_performance", t.fresh_performance);
  s.integer("performance_trajectories", t.performance_trajectories);
  enumeration(s, "performance", kPerf, t.performance);
  s.integer("performance_groups", t.performance_groups);
  s.integer("workers", t.workers);
  s.finish();

  TrainConfig check = t;
  check.weights.resize(0);
  check.validate(0);
  if (t.weights.size() != 0 && (t.weights.array() <= 0.0).any()) {
    throw ConfigError("train.weights entries must be positive");
  }
  if (t.workers < 0) {
    throw ConfigError("train.workers must be >= 0");
  }
}

json write_train(const TrainConfig& t) {
  json j{{"T", t.horizon},
         {"L", t.trajectories},
         {"N", t.max_updates},
         {"beta", t.beta},
         {"c1", t.schedule.c1},
         {"c2", t.schedule.c2},
         {"log_every", t.log_every},
         {"patience", t.patience},
         {"divergence_ceiling", t.divergence_ceiling},
         {"fresh_performance", t.fresh_performance},
         {"performance_trajectories", t.performance_trajectories},
         {"performance", enum_name(kPerf, t.performance)},
         {"performance_groups", t.performance_groups},
         {"workers", t.workers}};
  j["H0"] = std::isfinite(t.threshold) ? json(t.threshold) : json(nullptr);
  if (t.weights.size() != 0) {
    j["weights"] = from_vector(t.weights);
  }
  return j;
}

void read_analysis(const json& j, AnalysisConfig& a) {
  Section s(j, "analysis");
  s.integer("ensemble", a.ensemble);
  s.boolean("bootstrap", a.bootstrap);
  s.integer("resamples", a.resamples);
  s.number("level", a.level);
  s.integer("kmeans_k", a.kmeans_k);
  s.integer("kmeans_restarts", a.kmeans_restarts);
  s.boolean("keep_ensemble", a.keep_ensemble);
  s.finish();
  if (a.ensemble < 1) {
    throw ConfigError("analysis.ensemble must be >= 1");
  }
  if (a.bootstrap && a.resamples < 100) {
    throw ConfigError("analysis.resamples must be >= 100");
  }
  if (!(a.level > 0.0 && a.level < 1.0)) {
    throw ConfigError("analysis.level must lie in (0, 1)");
  }
  if (a.kmeans_k < 0 || a.kmeans_k > a.ensemble) {
    throw ConfigError("analysis.kmeans_k must lie in [0, ensemble]");
  }
  if (a.kmeans_restarts < 1) {
    throw ConfigError("analysis.kmeans_restarts must be >= 1");
  }
}

json write_analysis(const AnalysisConfig& a) {
  return {{"ensemble", a.ensemble},
          {"bootstrap", a.bootstrap},
          {"resamples", a.resamples},
          {"level", a.level},
          {"kmeans_k", a.kmeans_k},
          {"kmeans_restarts", a.kmeans_restarts},
          {"keep_ensemble", a.keep_ensemble}};
}

void read_gradient_descent(const json& j, std::optional<GradientDescentConfig>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  Section s(j, "gradient_descent");
  GradientDescentConfig g;
  s.number("step", g.step);
  s.integer("steps", g.steps);
  s.finish();
  if (!(g.step > 0.0) || g.steps < 1) {
    throw ConfigError("gradient_descent needs step > 0 and steps >= 1");
  }
  out = g;
}

void read_output(const json& j, std::string& dir) {
  Section s(j, "output");
  s.string("dir", dir);
  s.finish();
  if (dir.empty()) {
    throw ConfigError("output.dir must not be empty");
  }
}

RunConfig parse_json(const json& root) {
  RunConfig c;
  Section s(root, "");
  if (const json* v = s.find("problem")) {
    read_problem(*v, c.problem);
  }
  if (const json* v = s.find("noise")) {
    read_noise(*v, c.noise);
  }
  if (const json* v = s.find("reward")) {
    read_reward(*v, c.reward);
  }
  if (const json* v = s.find("policy")) {
    read_policy(*v, c.policy);
  }
  if (const json* v = s.find("init")) {
    read_init(*v, c.init);
  }
  if (const json* v = s.find("train")) {
    read_train(*v, c.train);
  }
  if (const json* v = s.find("analysis")) {
    read_analysis(*v, c.analysis);
  }
  if (const json* v = s.find("gradient_descent")) {
    read_gradient_descent(*v, c.gradient_descent);
  }
  if (const json* v = s.find("output")) {
    read_output(*v, c.output_dir);
  }
  if (const json* v = s.find("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw ConfigError("seed: expected a nonnegative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }
  s.finish();
  c.train.seed = c.seed;
  return c;
}

json to_json(const RunConfig& c) {
  json j{{"problem", write_problem(c.problem)},
         {"noise", write_noise(c.noise)},
         {"reward", write_reward(c.reward)},
         {"policy", write_policy(c.policy)},
         {"init", write_init(c.init)},
         {"train", write_train(c.train)},
         {"analysis", write_analysis(c.analysis)},
         {"output", {{"dir", c.output_dir}}},
         {"seed", c.seed}};
  if (c.gradient_descent) {
    j["gradient_descent"] = {{"step", c.gradient_descent->step}, {"steps", c.gradient_descent->steps}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Problem construction

Matrix random_well_conditioned(int n, double s_min, double s_max, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g1(n, n);
  Matrix g2(n, n);
  for (Eigen::Index i = 0; i < g1.size(); ++i) {
    g1.data()[i] = normal(rng);
  }
  for (Eigen::Index i = 0; i < g2.size(); ++i) {
    g2.data()[i] = normal(rng);
  }
  std::uniform_real_distribution<double> uniform(s_min, s_max);
  Vector s(n);
  for (int i = 0; i < n; ++i) {
    s[i] = uniform(rng);
  }
  const Matrix u = Eigen::HouseholderQR<Matrix>(g1).householderQ();
  const Matrix v = Eigen::HouseholderQR<Matrix>(g2).householderQ();
  return u * s.asDiagonal() * v.transpose();
}

std::unique_ptr<Policy> make_policy(const RunConfig& c, int dim, const Matrix* a) {
  const PolicyConfig& p = c.policy;
  const Vector theta0 = p.theta0 ? *p.theta0 : Vector::Zero(dim);
  if (p.family != PolicyFamily::Mlp && theta0.size() != dim) {
    throw ConfigError("policy.theta0 must have one entry per state coordinate (" + std::to_string(dim) + ")");
  }
  switch (p.family) {
  case PolicyFamily::AffineI:
    return std::make_unique<AffinePolicyI>(theta0, p.covariance * Matrix::Identity(dim, dim));
  case PolicyFamily::AffineII: {
    if (a == nullptr) {
      throw ConfigError("policy.family affine2 needs a linear forward model");
    }
    const double omega = p.omega > 0.0 ? p.omega : 0.5 * omega_upper_bound(*a, p.epsilon);
    return std::make_unique<AffinePolicyII>(AffinePolicyII::from_operator(theta0, *a, omega, p.epsilon, p.sigma));
  }
  case PolicyFamily::Mlp: {
    auto mlp = std::make_unique<MlpPolicy>(MlpArchitecture::for_state(dim, p.hidden, p.ma_window, p.min_std));
    mlp->init_glorot(c.seed, p.init);
    return mlp;
  }
  }
  throw ConfigError("unknown policy family");
}

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double to_num(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

ordered_json ordered_vector(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(num(v[i]));
  }
  return out;
}

// Report vectors store non-finite entries as null.
Vector report_vector(const json& v, const std::string& path) {
  if (!v.is_array()) {
    throw ConfigError(path + ": expected an array");
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = to_num(v[i]);
  }
  return out;
}

ordered_json from_band(const std::optional<CiBand>& band) {
  if (!band) {
    return nullptr;
  }
  return {{"lower", ordered_vector(band->lower)}, {"upper", ordered_vector(band->upper)}, {"level", band->level}};
}

std::optional<CiBand> to_band(const json& j) {
  if (j.is_null()) {
    return std::nullopt;
  }
  CiBand b;
  b.lower = report_vector(j.at("lower"), "ci.lower");
  b.upper = report_vector(j.at("upper"), "ci.upper");
  b.level = j.at("level").get<double>();
  return b;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

} // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_json(root);
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path)); }

std::string run_config_to_json(const RunConfig& config, int indent) { return to_json(config).dump(indent); }

ProblemSetup build_problem(const RunConfig& c) {
  ProblemSetup setup;
  Problem& pb = setup.problem;
  const ProblemConfig& p = c.problem;

  std::shared_ptr<const ForwardModel> model;
  std::optional<Vector> reference;
  Matrix a;
  switch (p.model) {
  case ModelKind::AutoConv:
    model = std::make_shared<AutoConvModel>(p.grid_points);
    reference = exact_solution(p.grid_points);
    break;
  case ModelKind::Linear: {
    Rng rng = make_stream(c.seed, {stream::kProblem});
    a = p.matrix.size() != 0 ? p.matrix : random_well_conditioned(p.dim, p.singular_min, p.singular_max, rng);
    if (p.x_true) {
      reference = *p.x_true;
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector x(a.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = normal(rng);
      }
      reference = x;
    }
    model = std::make_shared<LinearModel>(a);
    break;
  }
  case ModelKind::Toy:
    model = std::make_shared<ToyLossModel>();
    break;
  }

  ObservationSet obs;
  if (p.model == ModelKind::Toy) {
    obs = single_observation(Vector::Zero(1));
  } else if (c.noise) {
    obs = generate_observations(*model, *reference, *c.noise, c.seed);
  } else {
    obs = single_observation(model->eval(*reference));
  }

  const int dim = model->input_dim();
  pb.env = std::make_shared<RewardEnv>(model, obs, c.reward);
  pb.reference = reference;
  pb.nonnegative = p.nonnegative;

  const InitConfig& ic = c.init;
  std::vector<Vector> atoms;
  for (const auto& spec : ic.atoms) {
    atoms.push_back(spec.resolve(dim, reference));
  }
  switch (ic.kind) {
  case InitKind::FixedPoint:
    pb.init = InitStateDist::fixed(atoms.front());
    break;
  case InitKind::Gaussian:
    pb.init = InitStateDist::gaussian(atoms.front(), ic.gaussian_std.resolve(dim, reference));
    break;
  case InitKind::FiniteMixture:
    pb.init = InitStateDist::mixture(atoms, ic.probabilities);
    break;
  }
  pb.init.validate(dim);
  pb.initial_policy = make_policy(c, dim, p.model == ModelKind::Linear ? &a : nullptr);

  SolveOptions& o = setup.options;
  o.train = c.train;
  o.train.seed = c.seed;
  o.eval_trajectories = c.analysis.ensemble;
  o.kmeans_k = c.analysis.kmeans_k;
  o.kmeans_restarts = c.analysis.kmeans_restarts;
  o.bootstrap = c.analysis.bootstrap;
  o.ci.resamples = c.analysis.resamples;
  o.ci.level = c.analysis.level;
  o.ci.clamp_nonnegative = p.nonnegative;
  o.ci.seed = c.seed;
  o.keep_ensemble = c.analysis.keep_ensemble;

  if (p.model == ModelKind::Linear) {
    const Vector& ybar = pb.env->observations().samples.size() == 1
                             ? pb.env->observations().samples.front()
                             : Vector(ensemble_mean(pb.env->observations().samples));
    const double alpha = c.reward.alpha;
    if (alpha > 0.0 && c.reward.regularizer == Regularizer::SquaredNorm) {
      setup.oracles.emplace_back("tikhonov", tikhonov_solution(a, ybar, alpha));
    }
    if (c.policy.family == PolicyFamily::AffineI && c.reward.form == RewardForm::Negative &&
        c.train.weights.size() == 0) {
      // Stationary point of J_T - beta ||theta||^2 for a fixed initial state.
      const double t = static_cast<double>(c.train.horizon);
      const double reg = c.reward.regularizer == Regularizer::SquaredNorm ? alpha * (t - 1.0) / t : 0.0;
      const double scale = c.reward.normalizer == ResidualNormalizer::MeanPerEntry ? static_cast<double>(a.rows()) : 1.0;
      const double eff = scale * (reg + c.train.beta);
      if (c.init.kind == InitKind::FixedPoint && (eff > 0.0 || a.rows() >= a.cols())) {
        setup.oracles.emplace_back("objective_maximiser", tikhonov_solution(a, ybar, eff));
      }
    }
    if (c.policy.family == PolicyFamily::AffineII && alpha > 0.0) {
      const auto& b = static_cast<const AffinePolicyII&>(*pb.initial_policy).b_matrix();
      setup.oracles.emplace_back("example2_theta_star", example2_theta_star(a, ybar, alpha, b));
    }
  }
  return setup;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Manifest make_manifest(const RunConfig& config) {
  Manifest m;
  m.version = std::string(library_version());
  m.config_json = run_config_to_json(config, -1);
  m.config_hash = fnv1a(m.config_json);
  m.seed = config.seed;
  return m;
}

SolveReport run_config(const RunConfig& config) {
  ProblemSetup setup = build_problem(config);
  SolveReport report = solve(setup.problem, setup.options);
  report.oracles = std::move(setup.oracles);
  return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

ordered_json manifest_json(const Manifest& m) {
  return {{"version", m.version},
          {"config_hash", hex64(m.config_hash)},
          {"seed", m.seed},
          {"config", m.config_json.empty() ? ordered_json(nullptr) : ordered_json::parse(m.config_json)}};
}

} // namespace

std::string manifest_to_json(const Manifest& manifest) { return manifest_json(manifest).dump(2); }

std::string report_to_json(const SolveReport& r, const Manifest& m) {
  ordered_json j;
  j["manifest"] = manifest_json(m);
  j["theta"] = ordered_vector(r.theta);
  j["mean"] = ordered_vector(r.mean);
  j["ci"] = from_band(r.ci);
  ordered_json groups = ordered_json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"mean", ordered_vector(g.mean)},
                      {"size", g.size},
                      {"ci", from_band(g.ci)},
                      {"r2_reference", g.r2_reference ? num(*g.r2_reference) : ordered_json(nullptr)},
                      {"r2_negated_reference", g.r2_negated_reference ? num(*g.r2_negated_reference) : ordered_json(nullptr)}});
  }
  j["groups"] = groups;
  j["reference"] = r.reference ? ordered_vector(*r.reference) : ordered_json(nullptr);
  j["diagnostics"] = {{"r2", r.r2 ? num(*r.r2) : ordered_json(nullptr)},
                      {"final_performance", num(r.final_performance)},
                      {"stop_reason", std::string(to_string(r.log.stop_reason))},
                      {"updates", r.log.updates}};
  ordered_json oracles = ordered_json::array();
  for (const auto& [name, v] : r.oracles) {
    oracles.push_back({{"name", name}, {"value", ordered_vector(v)}});
  }
  j["oracles"] = oracles;
  ordered_json log = ordered_json::array();
  for (const auto& e : r.log.entries) {
    log.push_back({e.update, num(e.performance), num(e.grad_norm), num(e.theta_norm)});
  }
  j["train_log"] = log;
  if (!r.ensemble.empty()) {
    ordered_json ens = ordered_json::array();
    for (const auto& x : r.ensemble) {
      ens.push_back(ordered_vector(x));
    }
    j["ensemble"] = ens;
  }
  return j.dump(2);
}

SolveReport report_from_json(std::string_view text, Manifest* manifest) {
  SolveReport r;
  try {
    const json j = json::parse(text);
    if (manifest != nullptr) {
      const json& m = j.at("manifest");
      manifest->version = m.at("version").get<std::string>();
      manifest->config_hash = std::stoull(m.at("config_hash").get<std::string>(), nullptr, 16);
      manifest->seed = m.at("seed").get<std::uint64_t>();
      manifest->config_json = m.at("config").is_null() ? std::string() : m.at("config").dump(-1);
    }
    r.theta = report_vector(j.at("theta"), "theta");
    r.mean = report_vector(j.at("mean"), "mean");
    r.ci = to_band(j.at("ci"));
    for (const auto& g : j.at("groups")) {
      GroupSummary s;
      s.mean = report_vector(g.at("mean"), "groups.mean");
      s.size = g.at("size").get<int>();
      s.ci = to_band(g.at("ci"));
      if (!g.at("r2_reference").is_null()) {
        s.r2_reference = g.at("r2_reference").get<double>();
      }
      if (!g.at("r2_negated_reference").is_null()) {
        s.r2_negated_reference = g.at("r2_negated_reference").get<double>();
      }
      r.groups.push_back(std::move(s));
    }
    if (!j.at("reference").is_null()) {
      r.reference = report_vector(j.at("reference"), "reference");
    }
    const json& d = j.at("diagnostics");
    if (!d.at("r2").is_null()) {
      r.r2 = d.at("r2").get<double>();
    }
    r.final_performance = to_num(d.at("final_performance"));
    r.log.stop_reason = stop_reason_from_string(d.at("stop_reason").get<std::string>());
    r.log.updates = d.at("updates").get<long long>();
    for (const auto& o : j.at("oracles")) {
      r.oracles.emplace_back(o.at("name").get<std::string>(), report_vector(o.at("value"), "oracles.value"));
    }
    for (const auto& e : j.at("train_log")) {
      r.log.entries.push_back({e.at(0).get<long long>(), to_num(e.at(1)), to_num(e.at(2)), to_num(e.at(3))});
    }
    if (j.contains("ensemble")) {
      for (const auto& x : j.at("ensemble")) {
        r.ensemble.push_back(report_vector(x, "ensemble"));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV and files

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_manifest_header(std::ostream& out, const Manifest& m) {
  out << "# rlip " << m.version << "\n# config_hash " << hex64(m.config_hash) << "\n# seed " << m.seed << "\n";
}

void write_train_log_csv(std::ostream& out, const TrainLog& log, const Manifest& m) {
  write_manifest_header(out, m);
  out << "n,r,grad_norm,theta_norm\n";
  for (const auto& e : log.entries) {
    out << e.update << ',' << format_double(e.performance) << ',' << format_double(e.grad_norm) << ','
        << format_double(e.theta_norm) << '\n';
  }
}

void write_estimate_csv(std::ostream& out, const SolveReport& r, const Manifest& m) {
  write_manifest_header(out, m);
  const bool ref = r.reference.has_value() && r.reference->size() == r.mean.size();
  out << "i,mean";
  if (ref) {
    out << ",reference";
  }
  if (r.ci) {
    out << ",ci_lower,ci_upper";
  }
  out << '\n';
  for (Eigen::Index i = 0; i < r.mean.size(); ++i) {
    out << i << ',' << format_double(r.mean[i]);
    if (ref) {
      out << ',' << format_double((*r.reference)[i]);
    }
    if (r.ci) {
      out << ',' << format_double(r.ci->lower[i]) << ',' << format_double(r.ci->upper[i]);
    }
    out << '\n';
  }
}

void write_groups_csv(std::ostream& out, const SolveReport& r, const Manifest& m) {
  write_manifest_header(out, m);
  out << 'i';
  for (std::size_t g = 0; g < r.groups.size(); ++g) {
    out << ",g" << g << "_mean";
    if (r.groups[g].ci) {
      out << ",g" << g << "_ci_lower,g" << g << "_ci_upper";
    }
  }
  out << '\n';
  const Eigen::Index d = r.groups.empty() ? 0 : r.groups.front().mean.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    out << i;
    for (const auto& g : r.groups) {
      out << ',' << format_double(g.mean[i]);
      if (g.ci) {
        out << ',' << format_double(g.ci->lower[i]) << ',' << format_double(g.ci->upper[i]);
      }
    }
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) {
    throw IoError("failed writing " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open " + path.string() + " for reading");
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path write_solve_outputs(const std::filesystem::path& dir, const SolveReport& report,
                                          const Manifest& manifest) {
  const auto report_path = dir / "report.json";
  write_text_file(report_path, report_to_json(report, manifest));
  std::ostringstream log;
  write_train_log_csv(log, report.log, manifest);
  write_text_file(dir / "train_log.csv", log.str());
  std::ostringstream est;
  write_estimate_csv(est, report, manifest);
  write_text_file(dir / "estimate.csv", est.str());
  if (!report.groups.empty()) {
    std::ostringstream grp;
    write_groups_csv(grp, report, manifest);
    write_text_file(dir / "groups.csv", grp.str());
  }
  return report_path;
}

} // namespace rlip
