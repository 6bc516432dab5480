#pragma once

#include "lpf/lagged_filter.hpp"
#include "lpf/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lpf::bench {

/// Raised for any malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelType { linear, lorenz96, swe };
enum class FilterKind { lpf, kf, enkf, etkf, etkf_sqrt };
enum class Reference { kf, truth };

const char* to_string(ModelType t);
const char* to_string(FilterKind f);
const char* to_string(Reference r);

/// Union of the model parameters; only the fields of `type` are read or written.
struct ModelConfig {
  ModelType type = ModelType::linear;
  // linear, lorenz96
  Eigen::Index dim = 500;
  double x0 = 1.5;
  // all
  double r1_sqrt = 0.70710678118654752440;
  double r2_sqrt = 0.1;
  int obs_frequency = 1;
  // lorenz96
  double dt = 0.05;
  double forcing = 8.0;
  Eigen::Index x0_perturb_index = 20;
  double x0_perturb_value = 8.01;
  // swe
  int grid_points = 35;
  double domain = 2.0;
  double h_high = 2.5;
  double h_low = 1.0;

  /// Full-scale experiment parameters for `type`.
  static ModelConfig defaults(ModelType type);
  Eigen::Index state_dim() const;
};

struct LpfSettings {
  std::size_t particles = 100;
  double n_star_fraction = 0.8;
  int lag = 1;
  int sweeps = 20;
  double phi_init = 0.0;
  lagged::MuSource mu_source = lagged::MuSource::kalman_predictor;
  double mu_variance_scale = 1.0;
  Eigen::Index mu_members = 100;
  smc::ResamplingScheme resampling = smc::ResamplingScheme::systematic;
  /// 0 selects the adaptive schedule, otherwise the fixed grid size.
  int grid_steps = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelConfig model;
  std::vector<FilterKind> filters{FilterKind::lpf};
  int horizon = 1000;
  std::vector<std::uint64_t> seeds{1};
  LpfSettings lpf;
  Eigen::Index ensemble_members = 100;
  Reference reference = Reference::kf;
  std::string out_dir = "runs";

  /// Throws ConfigError on a violated invariant.
  void validate() const;
  int observations() const { return horizon / model.obs_frequency; }
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a of the canonical JSON serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

SsmDefinition build_model(const ModelConfig& m);

/// Rough single-thread wall-clock estimate in seconds for the whole experiment.
double estimate_runtime_seconds(const ExperimentConfig& c);

/// Name and configuration of each built-in preset.
std::vector<std::pair<std::string, ExperimentConfig>> presets();

}  // namespace lpf::bench
