#include "lpf/bench/config.hpp"

#include "lpf/models.hpp"
#include "lpf/swe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace lpf::bench {

using nlohmann::json;

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ModelType> kModelNames[] = {
    {ModelType::linear, "linear"}, {ModelType::lorenz96, "lorenz96"}, {ModelType::swe, "swe"}};
constexpr EnumName<FilterKind> kFilterNames[] = {{FilterKind::lpf, "lpf"},
                                                 {FilterKind::kf, "kf"},
                                                 {FilterKind::enkf, "enkf"},
                                                 {FilterKind::etkf, "etkf"},
                                                 {FilterKind::etkf_sqrt, "etkf_sqrt"}};
constexpr EnumName<Reference> kReferenceNames[] = {{Reference::kf, "kf"}, {Reference::truth, "truth"}};
constexpr EnumName<lagged::MuSource> kMuNames[] = {{lagged::MuSource::kalman_predictor, "kalman_predictor"},
                                                   {lagged::MuSource::etkf_sqrt_predictor, "etkf_sqrt_predictor"},
                                                   {lagged::MuSource::transition, "transition"}};
constexpr EnumName<smc::ResamplingScheme> kResamplingNames[] = {
    {smc::ResamplingScheme::systematic, "systematic"}, {smc::ResamplingScheme::multinomial, "multinomial"}};

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + ": expected a string");
  const auto s = j.get<std::string>();
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  throw ConfigError(what + ": unknown value '" + s + "'");
}

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "unknown";
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

ModelConfig model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("model: 'type' is required");
  ModelConfig m = ModelConfig::defaults(parse_enum(kModelNames, j.at("type"), "model.type"));
  switch (m.type) {
    case ModelType::linear:
      check_keys(j, {"type", "dim", "x0", "r1_sqrt", "r2_sqrt", "obs_frequency"}, "model");
      break;
    case ModelType::lorenz96:
      check_keys(j, {"type", "dim", "x0", "r1_sqrt", "r2_sqrt", "obs_frequency", "dt", "forcing",
                     "x0_perturb_index", "x0_perturb_value"},
                 "model");
      break;
    case ModelType::swe:
      check_keys(j, {"type", "grid_points", "domain", "r1_sqrt", "r2_sqrt", "obs_frequency", "h_high", "h_low"},
                 "model");
      break;
  }
  read(j, "dim", m.dim, "model");
  read(j, "x0", m.x0, "model");
  read(j, "r1_sqrt", m.r1_sqrt, "model");
  read(j, "r2_sqrt", m.r2_sqrt, "model");
  read(j, "obs_frequency", m.obs_frequency, "model");
  read(j, "dt", m.dt, "model");
  read(j, "forcing", m.forcing, "model");
  read(j, "x0_perturb_index", m.x0_perturb_index, "model");
  read(j, "x0_perturb_value", m.x0_perturb_value, "model");
  read(j, "grid_points", m.grid_points, "model");
  read(j, "domain", m.domain, "model");
  read(j, "h_high", m.h_high, "model");
  read(j, "h_low", m.h_low, "model");
  return m;
}

json model_to_json(const ModelConfig& m) {
  json j;
  j["type"] = to_string(m.type);
  j["r1_sqrt"] = m.r1_sqrt;
  j["r2_sqrt"] = m.r2_sqrt;
  j["obs_frequency"] = m.obs_frequency;
  if (m.type == ModelType::swe) {
    j["grid_points"] = m.grid_points;
    j["domain"] = m.domain;
    j["h_high"] = m.h_high;
    j["h_low"] = m.h_low;
  } else {
    j["dim"] = m.dim;
    j["x0"] = m.x0;
  }
  if (m.type == ModelType::lorenz96) {
    j["dt"] = m.dt;
    j["forcing"] = m.forcing;
    j["x0_perturb_index"] = m.x0_perturb_index;
    j["x0_perturb_value"] = m.x0_perturb_value;
  }
  return j;
}

}  // namespace

const char* to_string(ModelType t) { return enum_name(kModelNames, t); }
const char* to_string(FilterKind f) { return enum_name(kFilterNames, f); }
const char* to_string(Reference r) { return enum_name(kReferenceNames, r); }

ModelConfig ModelConfig::defaults(ModelType type) {
  ModelConfig m;
  m.type = type;
  if (type == ModelType::lorenz96) {
    const models::Lorenz96Params p;
    m.dim = p.dim;
    m.x0 = p.x0;
    m.r1_sqrt = p.r1_sqrt;
    m.r2_sqrt = p.r2_sqrt;
    m.obs_frequency = p.obs_frequency;
    m.dt = p.dt;
    m.forcing = p.forcing;
    m.x0_perturb_index = p.x0_perturb_index;
    m.x0_perturb_value = p.x0_perturb_value;
  } else if (type == ModelType::swe) {
    const models::SweModelParams p;
    m.grid_points = p.grid.grid_points;
    m.domain = p.grid.domain;
    m.r1_sqrt = p.r1_sqrt;
    m.r2_sqrt = p.r2_sqrt;
    m.obs_frequency = 1;
    m.h_high = p.h_high;
    m.h_low = p.h_low;
  } else {
    const models::LinearGaussianParams p;
    m.dim = p.dim;
    m.x0 = p.x0;
    m.r1_sqrt = p.r1_sqrt;
    m.r2_sqrt = p.r2_sqrt;
    m.obs_frequency = p.obs_frequency;
  }
  return m;
}

Eigen::Index ModelConfig::state_dim() const {
  if (type == ModelType::swe) return 3 * static_cast<Eigen::Index>(grid_points) * grid_points;
  return dim;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& s) { throw ConfigError(s); };
  if (horizon < 1) fail("horizon must be >= 1");
  if (seeds.empty()) fail("seeds must be non-empty");
  if (filters.empty()) fail("filters must be non-empty");
  if (model.obs_frequency < 1) fail("model.obs_frequency must be >= 1");
  if (!(model.r1_sqrt > 0.0) || !(model.r2_sqrt > 0.0)) fail("model noise scales must be positive");
  if (model.type == ModelType::swe) {
    if (model.grid_points < 3) fail("model.grid_points must be >= 3");
    if (model.obs_frequency != 1) fail("model.obs_frequency must be 1 for swe");
  } else if (model.dim < 1) {
    fail("model.dim must be >= 1");
  }
  if (model.type == ModelType::lorenz96 && model.dim < 4) fail("model.dim must be >= 4 for lorenz96");
  const auto has = [&](FilterKind f) { return std::find(filters.begin(), filters.end(), f) != filters.end(); };
  if (has(FilterKind::kf) && model.type != ModelType::linear) fail("filter kf requires the linear model");
  if (reference == Reference::kf && model.type != ModelType::linear) fail("reference kf requires the linear model");
  if (has(FilterKind::lpf)) {
    if (lpf.particles < 2) fail("lpf.particles must be >= 2");
    const double n_star = lpf.n_star_fraction * static_cast<double>(lpf.particles);
    if (!(n_star >= 1.0 && n_star <= static_cast<double>(lpf.particles))) fail("N* must lie in [1, N]");
    if (lpf.lag < 1) fail("lpf.lag must be >= 1");
    if (lpf.sweeps < 1) fail("lpf.sweeps must be >= 1");
    if (!(lpf.phi_init >= 0.0 && lpf.phi_init < 1.0)) fail("lpf.phi_init must lie in [0, 1)");
    if (lpf.grid_steps < 0) fail("lpf.grid_steps must be >= 0");
    if (lpf.mu_source == lagged::MuSource::kalman_predictor && model.type != ModelType::linear) {
      fail("lpf.mu_source kalman_predictor requires the linear model");
    }
    if (!(lpf.mu_variance_scale > 0.0)) fail("lpf.mu_variance_scale must be positive");
    if (lpf.mu_source == lagged::MuSource::etkf_sqrt_predictor && lpf.mu_members < 2) {
      fail("lpf.mu_members must be >= 2");
    }
  }
  if ((has(FilterKind::enkf) || has(FilterKind::etkf) || has(FilterKind::etkf_sqrt)) && ensemble_members < 2) {
    fail("ensemble.members must be >= 2");
  }
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"name", "model", "filters", "horizon", "seeds", "lpf", "ensemble", "reference", "out_dir"}, "config");
  ExperimentConfig c;
  read(j, "name", c.name, "config");
  if (!j.contains("model")) throw ConfigError("config: 'model' is required");
  c.model = model_from_json(j.at("model"));
  c.reference = c.model.type == ModelType::linear ? Reference::kf : Reference::truth;
  if (j.contains("filters")) {
    if (!j.at("filters").is_array()) throw ConfigError("config.filters: expected an array");
    c.filters.clear();
    for (const auto& f : j.at("filters")) c.filters.push_back(parse_enum(kFilterNames, f, "config.filters"));
  }
  read(j, "horizon", c.horizon, "config");
  read(j, "seeds", c.seeds, "config");
  read(j, "out_dir", c.out_dir, "config");
  if (j.contains("reference")) c.reference = parse_enum(kReferenceNames, j.at("reference"), "config.reference");
  if (c.model.type != ModelType::linear) c.lpf.mu_source = lagged::MuSource::etkf_sqrt_predictor;
  if (j.contains("lpf")) {
    const json& l = j.at("lpf");
    check_keys(l, {"particles", "n_star_fraction", "lag", "sweeps", "phi_init", "mu_source", "mu_variance_scale",
                   "mu_members", "resampling", "grid_steps"},
               "lpf");
    read(l, "particles", c.lpf.particles, "lpf");
    read(l, "n_star_fraction", c.lpf.n_star_fraction, "lpf");
    read(l, "lag", c.lpf.lag, "lpf");
    read(l, "sweeps", c.lpf.sweeps, "lpf");
    read(l, "phi_init", c.lpf.phi_init, "lpf");
    if (l.contains("mu_source")) c.lpf.mu_source = parse_enum(kMuNames, l.at("mu_source"), "lpf.mu_source");
    read(l, "mu_variance_scale", c.lpf.mu_variance_scale, "lpf");
    read(l, "mu_members", c.lpf.mu_members, "lpf");
    if (l.contains("resampling")) c.lpf.resampling = parse_enum(kResamplingNames, l.at("resampling"), "lpf.resampling");
    read(l, "grid_steps", c.lpf.grid_steps, "lpf");
  }
  if (j.contains("ensemble")) {
    check_keys(j.at("ensemble"), {"members"}, "ensemble");
    read(j.at("ensemble"), "members", c.ensemble_members, "ensemble");
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["model"] = model_to_json(c.model);
  j["filters"] = json::array();
  for (auto f : c.filters) j["filters"].push_back(to_string(f));
  j["horizon"] = c.horizon;
  j["seeds"] = c.seeds;
  j["lpf"] = {{"particles", c.lpf.particles},
              {"n_star_fraction", c.lpf.n_star_fraction},
              {"lag", c.lpf.lag},
              {"sweeps", c.lpf.sweeps},
              {"phi_init", c.lpf.phi_init},
              {"mu_source", lagged::to_string(c.lpf.mu_source)},
              {"mu_variance_scale", c.lpf.mu_variance_scale},
              {"mu_members", c.lpf.mu_members},
              {"resampling", enum_name(kResamplingNames, c.lpf.resampling)},
              {"grid_steps", c.lpf.grid_steps}};
  j["ensemble"] = {{"members", c.ensemble_members}};
  j["reference"] = to_string(c.reference);
  j["out_dir"] = c.out_dir;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SsmDefinition build_model(const ModelConfig& m) {
  switch (m.type) {
    case ModelType::linear: {
      models::LinearGaussianParams p;
      p.dim = m.dim;
      p.r1_sqrt = m.r1_sqrt;
      p.r2_sqrt = m.r2_sqrt;
      p.x0 = m.x0;
      p.obs_frequency = m.obs_frequency;
      return models::make_linear_gaussian(p);
    }
    case ModelType::lorenz96: {
      models::Lorenz96Params p;
      p.dim = m.dim;
      p.dt = m.dt;
      p.forcing = m.forcing;
      p.r1_sqrt = m.r1_sqrt;
      p.r2_sqrt = m.r2_sqrt;
      p.obs_frequency = m.obs_frequency;
      p.x0 = m.x0;
      p.x0_perturb_index = m.x0_perturb_index;
      p.x0_perturb_value = m.x0_perturb_value;
      return models::make_lorenz96(p);
    }
    case ModelType::swe: {
      models::SweModelParams p;
      p.grid.grid_points = m.grid_points;
      p.grid.domain = m.domain;
      p.r1_sqrt = m.r1_sqrt;
      p.r2_sqrt = m.r2_sqrt;
      p.h_high = m.h_high;
      p.h_low = m.h_low;
      return models::make_swe(p);
    }
  }
  throw ConfigError("unknown model type");
}

double estimate_runtime_seconds(const ExperimentConfig& c) {
  const double d = static_cast<double>(c.model.state_dim());
  double drift = d;  // flops per transition evaluation
  if (c.model.type == ModelType::lorenz96) drift = 40.0 * d;
  if (c.model.type == ModelType::swe) drift = 150.0 * d;
  const double per_density = drift + 4.0 * d;
  const double k = c.model.obs_frequency;
  const double m = c.observations();
  const double seeds = static_cast<double>(c.seeds.size());
  constexpr double kSecondsPerFlop = 1e-9;
  constexpr double kTemperatures = 25.0;
  double flops = 0.0;
  for (auto f : c.filters) {
    switch (f) {
      case FilterKind::lpf:
        flops += m * kTemperatures * c.lpf.sweeps * static_cast<double>(c.lpf.particles) * (c.lpf.lag + 1) * k *
                 per_density;
        break;
      case FilterKind::kf:
        flops += c.horizon * 4.0 * d * d * d;
        break;
      default: {
        const double ne = static_cast<double>(c.ensemble_members);
        flops += c.horizon * ne * drift + m * (ne * ne * d + ne * ne * ne);
        break;
      }
    }
  }
  return flops * seeds * kSecondsPerFlop;
}

std::vector<std::pair<std::string, ExperimentConfig>> presets() {
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  auto seed_range = [](int n) {
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= n; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return s;
  };

  ExperimentConfig lin;
  lin.name = "linear-full";
  lin.model = ModelConfig::defaults(ModelType::linear);
  lin.filters = {FilterKind::lpf, FilterKind::kf, FilterKind::enkf, FilterKind::etkf, FilterKind::etkf_sqrt};
  lin.horizon = 1000;
  lin.seeds = seed_range(104);
  lin.lpf.particles = 100;
  lin.lpf.lag = 1;
  lin.ensemble_members = 100;
  lin.out_dir = "runs/linear-full";
  out.emplace_back(lin.name, lin);

  ExperimentConfig lin_small = lin;
  lin_small.name = "linear-reduced";
  lin_small.model.dim = 20;
  lin_small.horizon = 50;
  lin_small.seeds = seed_range(3);
  lin_small.lpf.particles = 500;
  lin_small.lpf.lag = 2;
  lin_small.out_dir = "runs/linear-reduced";
  out.emplace_back(lin_small.name, lin_small);

  ExperimentConfig l96;
  l96.name = "lorenz96-full";
  l96.model = ModelConfig::defaults(ModelType::lorenz96);
  l96.filters = {FilterKind::lpf, FilterKind::enkf, FilterKind::etkf, FilterKind::etkf_sqrt};
  l96.horizon = 1000;
  l96.seeds = seed_range(50);
  l96.lpf.particles = 100;
  l96.lpf.lag = 1;
  l96.lpf.mu_source = lagged::MuSource::etkf_sqrt_predictor;
  l96.lpf.mu_members = 100;
  l96.ensemble_members = 100;
  l96.reference = Reference::truth;
  l96.out_dir = "runs/lorenz96-full";
  out.emplace_back(l96.name, l96);

  ExperimentConfig l96_small = l96;
  l96_small.name = "lorenz96-reduced";
  l96_small.horizon = 150;
  l96_small.seeds = seed_range(3);
  l96_small.out_dir = "runs/lorenz96-reduced";
  out.emplace_back(l96_small.name, l96_small);

  ExperimentConfig swe;
  swe.name = "swe-full";
  swe.model = ModelConfig::defaults(ModelType::swe);
  swe.filters = {FilterKind::lpf, FilterKind::enkf, FilterKind::etkf, FilterKind::etkf_sqrt};
  swe.horizon = 500;
  swe.seeds = seed_range(50);
  swe.lpf.particles = 100;
  swe.lpf.n_star_fraction = 0.5;
  swe.lpf.lag = 1;
  swe.lpf.mu_source = lagged::MuSource::etkf_sqrt_predictor;
  swe.lpf.mu_members = 1000;
  swe.ensemble_members = 1000;
  swe.reference = Reference::truth;
  swe.out_dir = "runs/swe-full";
  out.emplace_back(swe.name, swe);

  ExperimentConfig swe_small = swe;
  swe_small.name = "swe-reduced";
  swe_small.model.grid_points = 8;
  swe_small.horizon = 100;
  swe_small.seeds = seed_range(5);
  swe_small.lpf.n_star_fraction = 0.8;
  swe_small.lpf.sweeps = 25;
  swe_small.lpf.mu_members = 100;
  swe_small.ensemble_members = 100;
  swe_small.out_dir = "runs/swe-reduced";
  out.emplace_back(swe_small.name, swe_small);

  return out;
}

}  // namespace lpf::bench
