#pragma once

#include "lpf/bench/config.hpp"
#include "lpf/bench/metrics.hpp"
#include "lpf/lagged_filter.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lpf::bench {

struct TwinData {
  Matrix truth;  ///< (T+1) x d, row 0 is x0
  std::vector<Vector> observations;  ///< y_m at model time m k, m = 1..floor(T/k)
};

TwinData generate_twin_data(const SsmDefinition& model, int horizon, Rng& rng);

struct MetricSummary {
  double rel_l2_reference = 0.0;
  double rel_l2_truth = 0.0;
  double median_rel_abs_error = 0.0;
  double frac_below_0p01 = 0.0;
  Eigen::Index floored = 0;
  Histogram histogram;
};

/// Metrics of one estimate array against its reference and the truth.
MetricSummary summarize(const Matrix& estimates, const Matrix& reference, const Matrix& truth);
nlohmann::json summary_to_json(const MetricSummary& s);

struct RunRecord {
  FilterKind filter = FilterKind::lpf;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool ok = true;
  std::string error;
  Matrix estimates;  ///< (T+1) x d
  Matrix errors;     ///< relative absolute errors against the reference
  std::vector<lagged::StepDiagnostics> diagnostics;
  MetricSummary metrics;
};

struct RunOptions {
  int threads = 1;
  std::uint64_t seed_offset = 0;
  /// Empty: keep records in memory only.
  std::filesystem::path out_dir;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  ///< ordered by (seed, filter)
  int failures = 0;
  nlohmann::json summary;
};

/// One record per (seed, filter). Filter failures are recorded, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Runs one filter on twin data.
RunRecord run_filter(const ExperimentConfig& cfg, const SsmDefinition& model, FilterKind filter,
                     std::uint64_t seed, const TwinData& data, const Matrix& reference);

/// Recomputes every metric summary from a stored record directory.
nlohmann::json recompute_metrics(const std::filesystem::path& dir);

/// Process exit code for a finished experiment: 0, 2 (some runs failed) or 3 (all failed).
int exit_code(const ExperimentResult& r);

}  // namespace lpf::bench
