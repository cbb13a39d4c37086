#include "oapf/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "oapf/errors.hpp"

namespace oapf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double number(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what + ": expected a number");
  return j.get<double>();
}

Vector vector_from(const json& j, Index dim, const std::string& what) {
  if (j.is_number()) return Vector::Constant(dim, j.get<double>());
  if (!j.is_array() || static_cast<Index>(j.size()) != dim)
    fail(what + ": expected a number or an array of length " + std::to_string(dim));
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = number(j[static_cast<std::size_t>(i)], what);
  return v;
}

Matrix matrix_from(const json& j, Index rows, Index cols, const std::string& what) {
  if (j.is_number()) {
    if (rows != cols) fail(what + ": scalar shorthand needs a square matrix");
    return j.get<double>() * Matrix::Identity(rows, cols);
  }
  if (!j.is_array() || j.empty()) fail(what + ": expected a number, a diagonal or a nested array");
  if (!j[0].is_array()) {
    if (rows != cols) fail(what + ": diagonal shorthand needs a square matrix");
    return vector_from(j, rows, what).asDiagonal();
  }
  if (static_cast<Index>(j.size()) != rows) fail(what + ": wrong number of rows");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) fail(what + ": wrong number of columns");
    for (Index c = 0; c < cols; ++c) m(r, c) = number(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

Index positive_index(const json& j, const char* key, Index fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<long long>() < 1) fail(std::string("model.") + key + " must be a positive integer");
  return static_cast<Index>(j[key].get<long long>());
}

LgssmParams parse_lgssm(const json& j) {
  const Index d = positive_index(j, "dim", 1);
  LgssmParams p = presets::linear_gaussian(d, j.value("transition_var", 5.0), j.value("obs_var", 2.5));
  if (j.contains("transition")) p.transition = matrix_from(j["transition"], d, d, "model.transition");
  if (j.contains("transition_offset")) p.transition_offset = vector_from(j["transition_offset"], d, "model.transition_offset");
  if (j.contains("transition_cov")) p.transition_cov = matrix_from(j["transition_cov"], d, d, "model.transition_cov");
  Index dy = d;
  if (j.contains("observation")) {
    const json& o = j["observation"];
    dy = o.is_array() && !o.empty() && o[0].is_array() ? static_cast<Index>(o.size()) : d;
    p.observation = matrix_from(o, dy, d, "model.observation");
    if (dy != d) {
      p.observation_offset = Vector::Zero(dy);
      p.observation_cov = Matrix::Identity(dy, dy) * j.value("obs_var", 2.5);
    }
  }
  if (j.contains("observation_offset")) p.observation_offset = vector_from(j["observation_offset"], dy, "model.observation_offset");
  if (j.contains("observation_cov")) p.observation_cov = matrix_from(j["observation_cov"], dy, dy, "model.observation_cov");
  if (j.contains("prior_mean")) p.prior_mean = vector_from(j["prior_mean"], d, "model.prior_mean");
  if (j.contains("prior_cov")) p.prior_cov = matrix_from(j["prior_cov"], d, d, "model.prior_cov");
  return p;
}

Lorenz63Params parse_lorenz(const json& j) {
  Lorenz63Params p;
  if (j.contains("sigma")) p.sigma = number(j["sigma"], "model.sigma");
  if (j.contains("rho")) p.rho = number(j["rho"], "model.rho");
  if (j.contains("beta")) p.beta = number(j["beta"], "model.beta");
  if (j.contains("dt")) p.dt = number(j["dt"], "model.dt");
  if (j.contains("obs_var")) p.obs_var = number(j["obs_var"], "model.obs_var");
  if (j.contains("noise_cov")) p.noise_cov = matrix_from(j["noise_cov"], 3, 3, "model.noise_cov");
  if (j.contains("initial_state")) p.initial_state = vector_from(j["initial_state"], 3, "model.initial_state");
  if (j.contains("prior_cov")) p.prior_cov = matrix_from(j["prior_cov"], 3, 3, "model.prior_cov");
  if (j.contains("noise_scaling")) {
    const std::string s = j["noise_scaling"].get<std::string>();
    if (s == "unit") p.noise_scaling = NoiseScaling::Unit;
    else if (s == "dt") p.noise_scaling = NoiseScaling::Dt;
    else fail("model.noise_scaling must be \"unit\" or \"dt\"");
  }
  return p;
}

StochVolParams parse_stochvol(const json& j) {
  const Index d = positive_index(j, "dim", 1);
  StochVolParams p = presets::stochastic_volatility(d);
  if (j.contains("phi")) p.persistence = vector_from(j["phi"], d, "model.phi");
  if (j.contains("mean")) p.mean = vector_from(j["mean"], d, "model.mean");
  if (j.contains("noise_cov")) p.noise_cov = matrix_from(j["noise_cov"], d, d, "model.noise_cov");
  if (j.contains("prior_cov")) p.prior_cov = matrix_from(j["prior_cov"], d, d, "model.prior_cov");
  return p;
}

FilterConfig parse_filter(const json& j, std::size_t index) {
  const std::string where = "filters[" + std::to_string(index) + "]";
  if (j.is_string()) return parse_filter(json{{"name", j}}, index);
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) fail(where + ": needs a \"name\"");
  const std::string name = j["name"].get<std::string>();
  const auto kind = parse_filter_kind(name);
  if (!kind) fail(where + ": unknown filter \"" + name + "\" (expected bpf, apf, iapf, fa_apf or oapf)");

  FilterConfig fc;
  fc.label = j.value("label", name);
  fc.settings.kind = *kind;
  if (j.contains("M")) {
    if (!j["M"].is_number_integer() || j["M"].get<long long>() < 1) fail(where + ".M must be a positive integer");
    fc.settings.particles = static_cast<Index>(j["M"].get<long long>());
  }
  if (j.contains("K")) {
    if (!j["K"].is_number_integer() || j["K"].get<long long>() < 0) fail(where + ".K must be a non-negative integer");
    fc.settings.kernels = static_cast<Index>(j["K"].get<long long>());
    if (fc.settings.kernels > fc.settings.particles) fail(where + ": K exceeds M");
    if (*kind != FilterKind::Oapf && fc.settings.kernels != 0 && fc.settings.kernels != fc.settings.particles)
      fail(where + ": only oapf accepts K < M");
  }
  if (j.contains("options")) {
    const json& o = j["options"];
    if (!o.is_object()) fail(where + ".options must be an object");
    const std::string scheme = o.value("resampling", std::string("multinomial"));
    if (scheme == "multinomial") fc.settings.step.scheme = ResamplingScheme::Multinomial;
    else if (scheme == "systematic") fc.settings.step.scheme = ResamplingScheme::Systematic;
    else fail(where + ".options.resampling must be multinomial or systematic");
    if (o.contains("ess_threshold") && !o["ess_threshold"].is_null()) {
      if (*kind != FilterKind::Bpf) fail(where + ": ess_threshold applies to bpf only");
      const double th = number(o["ess_threshold"], where + ".options.ess_threshold");
      if (!(th > 0.0 && th <= 1.0)) fail(where + ".options.ess_threshold must lie in (0, 1]");
      fc.settings.step.ess_threshold = th;
    }
  }
  return fc;
}

}  // namespace

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{"ess", "sparsity", "log_z", "nmse_mean", "nmse_log_z"};
  return names;
}

ModelSpec parse_model(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) fail("model: needs a \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "lgssm") return ModelSpec(parse_lgssm(j));
    if (kind == "lorenz63") return ModelSpec(parse_lorenz(j));
    if (kind == "stochvol") return ModelSpec(parse_stochvol(j));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("model: ") + e.what());
  }
  fail("model.kind must be lgssm, lorenz63 or stochvol, got \"" + kind + "\"");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail("config: top level must be an object");
  ExperimentConfig cfg;
  try {
    cfg.name = j.value("name", cfg.name);
    if (!j.contains("model")) fail("config: missing \"model\"");
    cfg.model = std::make_shared<const ModelSpec>(parse_model(j["model"]));
    cfg.steps = j.value("T", cfg.steps);
    cfg.n_runs = j.value("n_runs", cfg.n_runs);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (cfg.steps < 1) fail("config: T must be at least 1");
    if (cfg.n_runs < 1) fail("config: n_runs must be at least 1");

    if (!j.contains("filters") || !j["filters"].is_array() || j["filters"].empty())
      fail("config: \"filters\" must be a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < j["filters"].size(); ++i) {
      FilterConfig fc = parse_filter(j["filters"][i], i);
      if (fc.settings.kind == FilterKind::FaApf && !cfg.model->lgssm())
        fail("config: fa_apf requires the lgssm model");
      if (!labels.insert(fc.label).second) fail("config: duplicate filter label \"" + fc.label + "\"");
      cfg.filters.push_back(std::move(fc));
    }

    if (j.contains("outputs")) {
      cfg.outputs = j["outputs"].get<std::vector<std::string>>();
      for (const auto& m : cfg.outputs)
        if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end())
          fail("config: unknown output metric \"" + m + "\"");
    }

    const std::string mode = j.value("trajectory_mode", std::string("simulate_per_run"));
    if (mode == "simulate_per_run") {
      cfg.trajectory_mode = TrajectoryMode::SimulatePerRun;
    } else if (mode == "fixed_trajectory_file") {
      cfg.trajectory_mode = TrajectoryMode::FixedFile;
      if (!j.contains("trajectory_file")) fail("config: fixed_trajectory_file needs \"trajectory_file\"");
      cfg.trajectory_file = j["trajectory_file"].get<std::string>();
    } else {
      fail("config: trajectory_mode must be simulate_per_run or fixed_trajectory_file");
    }
  } catch (const json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
  return cfg;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("override \"" + assignment + "\" is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail("override \"" + assignment + "\" has an empty key segment");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        fail("override \"" + assignment + "\": \"" + part + "\" is not an array index");
      }
      if (idx >= node->size()) fail("override \"" + assignment + "\": index out of range");
      next = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null()) fail("override \"" + assignment + "\": \"" + part + "\" is not an object");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(value);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail("config file " + path.string() + " is not valid JSON");
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json j = read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  ExperimentConfig cfg = parse_config(j);
  if (cfg.trajectory_mode == TrajectoryMode::FixedFile && cfg.trajectory_file.is_relative())
    cfg.trajectory_file = path.parent_path() / cfg.trajectory_file;
  return cfg;
}

}  // namespace oapf
