#include "lpf/bench/experiment.hpp"

#include "lpf/baselines.hpp"
#include "lpf/bench/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

namespace lpf::bench {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTwinStream = 0x7477696e;
constexpr std::uint64_t kFilterStream = 0x66696c74;
constexpr std::uint64_t kLpfStream = 0x6c7066;
constexpr std::uint64_t kMuStream = 0x6d75;

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t purpose) {
  Rng rng = make_rng(seed, purpose);
  return rng();
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

int filter_index(const ExperimentConfig& cfg, FilterKind f) {
  return static_cast<int>(std::find(cfg.filters.begin(), cfg.filters.end(), f) - cfg.filters.begin());
}

std::unique_ptr<lagged::MuProvider> make_mu(const ExperimentConfig& cfg, const SsmDefinition& model,
                                            std::uint64_t seed) {
  switch (cfg.lpf.mu_source) {
    case lagged::MuSource::kalman_predictor:
      return lagged::kalman_predictor_mu(model, cfg.lpf.mu_variance_scale);
    case lagged::MuSource::etkf_sqrt_predictor:
      return lagged::etkf_sqrt_predictor_mu(model, cfg.lpf.mu_members, derived_seed(seed, kMuStream));
    case lagged::MuSource::transition:
      return lagged::transition_mu();
  }
  return lagged::transition_mu();
}

struct RecordEntry {
  std::uint64_t seed;
  FilterKind filter;
  bool ok;
  std::string error;
  MetricSummary metrics;
};

json build_summary(const ExperimentConfig& cfg, const std::vector<RecordEntry>& entries) {
  json s;
  s["name"] = cfg.name;
  s["config_hash"] = config_hash(cfg);
  s["histogram_edges"] = default_edges();
  s["records"] = json::array();
  std::map<int, std::vector<const RecordEntry*>> by_filter;
  for (const auto& e : entries) {
    json r;
    r["seed"] = e.seed;
    r["filter"] = to_string(e.filter);
    r["status"] = e.ok ? "ok" : "failed";
    if (e.ok) {
      r["metrics"] = summary_to_json(e.metrics);
    } else {
      r["error"] = e.error;
    }
    s["records"].push_back(std::move(r));
    by_filter[filter_index(cfg, e.filter)].push_back(&e);
  }
  json agg = json::object();
  for (const auto& [idx, list] : by_filter) {
    std::vector<double> l2_truth;
    std::vector<double> l2_ref;
    std::vector<double> below;
    int failed = 0;
    for (const auto* e : list) {
      if (!e->ok) {
        ++failed;
        continue;
      }
      l2_truth.push_back(e->metrics.rel_l2_truth);
      l2_ref.push_back(e->metrics.rel_l2_reference);
      below.push_back(e->metrics.frac_below_0p01);
    }
    json a;
    a["runs"] = list.size();
    a["failed"] = failed;
    a["median_rel_l2_truth"] = median(l2_truth);
    a["median_rel_l2_reference"] = median(l2_ref);
    a["median_frac_below_0p01"] = median(below);
    agg[to_string(cfg.filters[static_cast<std::size_t>(idx)])] = std::move(a);
  }
  s["aggregate"] = std::move(agg);
  return s;
}

}  // namespace

TwinData generate_twin_data(const SsmDefinition& model, int horizon, Rng& rng) {
  require(horizon >= 1, "generate_twin_data: horizon must be >= 1");
  TwinData out;
  out.truth.resize(horizon + 1, model.dim_x());
  Vector x = model.x0();
  out.truth.row(0) = x.transpose();
  for (int t = 1; t <= horizon; ++t) {
    x = sample_transition(model, rng, x, t);
    out.truth.row(t) = x.transpose();
    if (model.observed_at(t)) out.observations.push_back(sample_observation(model, rng, x));
  }
  return out;
}

MetricSummary summarize(const Matrix& estimates, const Matrix& reference, const Matrix& truth) {
  MetricSummary s;
  const RelativeErrors rel = relative_abs_error(estimates, reference);
  s.floored = rel.floored;
  s.rel_l2_reference = relative_l2_error(estimates, reference);
  s.rel_l2_truth = relative_l2_error(estimates, truth);
  s.median_rel_abs_error = median(std::vector<double>(rel.values.data(), rel.values.data() + rel.values.size()));
  s.frac_below_0p01 = fraction_below(rel.values, 0.01);
  s.histogram = error_histogram(rel.values);
  return s;
}

json summary_to_json(const MetricSummary& s) {
  json j;
  j["rel_l2_reference"] = s.rel_l2_reference;
  j["rel_l2_truth"] = s.rel_l2_truth;
  j["median_rel_abs_error"] = s.median_rel_abs_error;
  j["frac_rel_abs_below_0.01"] = s.frac_below_0p01;
  j["floored_entries"] = s.floored;
  j["histogram"] = {{"frequencies", s.histogram.frequencies},
                    {"underflow", s.histogram.underflow},
                    {"overflow", s.histogram.overflow},
                    {"total", s.histogram.total}};
  return j;
}

RunRecord run_filter(const ExperimentConfig& cfg, const SsmDefinition& model, FilterKind filter,
                     std::uint64_t seed, const TwinData& data, const Matrix& reference) {
  RunRecord rec;
  rec.filter = filter;
  rec.seed = seed;
  rec.config_hash = config_hash(cfg);
  Rng rng = make_rng(seed, kFilterStream, static_cast<std::uint64_t>(filter_index(cfg, filter)));
  try {
    switch (filter) {
      case FilterKind::lpf: {
        lagged::LpfConfig lc;
        lc.particles = cfg.lpf.particles;
        lc.n_star_fraction = cfg.lpf.n_star_fraction;
        lc.lag = cfg.lpf.lag;
        lc.rwm.sweeps = cfg.lpf.sweeps;
        lc.phi_init = cfg.lpf.phi_init;
        lc.resampling = cfg.lpf.resampling;
        if (cfg.lpf.grid_steps > 0) lc.schedule = smc::TemperSchedule::fixed_grid(cfg.lpf.grid_steps);
        lc.seed = derived_seed(seed, kLpfStream);
        auto run = lagged::run_lagged_filter(model, data.observations, cfg.horizon, lc, make_mu(cfg, model, seed));
        rec.estimates = std::move(run.estimates);
        rec.diagnostics = std::move(run.steps);
        rec.ok = run.completed;
        rec.error = run.error;
        break;
      }
      case FilterKind::kf:
        rec.estimates = baselines::run_kalman_filter(model, data.observations, cfg.horizon);
        break;
      case FilterKind::enkf:
        rec.estimates = baselines::run_ensemble_filter(baselines::EnsembleKind::enkf, model, data.observations,
                                                       cfg.horizon, cfg.ensemble_members, rng);
        break;
      case FilterKind::etkf:
        rec.estimates = baselines::run_ensemble_filter(baselines::EnsembleKind::etkf, model, data.observations,
                                                       cfg.horizon, cfg.ensemble_members, rng);
        break;
      case FilterKind::etkf_sqrt:
        rec.estimates = baselines::run_ensemble_filter(baselines::EnsembleKind::etkf_sqrt, model, data.observations,
                                                       cfg.horizon, cfg.ensemble_members, rng);
        break;
    }
  } catch (const std::runtime_error& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  if (rec.ok && !rec.estimates.allFinite()) {
    rec.ok = false;
    rec.error = "non-finite filter estimate";
  }
  if (rec.estimates.size() == 0) {
    rec.estimates = Matrix::Constant(cfg.horizon + 1, model.dim_x(), std::nan(""));
  }
  if (rec.ok) {
    rec.errors = relative_abs_error(rec.estimates, reference).values;
    rec.metrics = summarize(rec.estimates, reference, data.truth);
  }
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  require(opts.threads >= 1, "run_experiment: threads must be >= 1");
  const SsmDefinition model = build_model(cfg.model);
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_filters = cfg.filters.size();

  std::vector<std::uint64_t> seeds(n_seeds);
  std::vector<TwinData> data(n_seeds);
  std::vector<Matrix> refs(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    seeds[s] = cfg.seeds[s] + opts.seed_offset;
    Rng rng = make_rng(seeds[s], kTwinStream);
    data[s] = generate_twin_data(model, cfg.horizon, rng);
    refs[s] = cfg.reference == Reference::kf
                  ? baselines::run_kalman_filter(model, data[s].observations, cfg.horizon)
                  : data[s].truth;
  }

  ExperimentResult result;
  result.records.resize(n_seeds * n_filters);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t task = next++; task < result.records.size(); task = next++) {
      const std::size_t s = task / n_filters;
      const std::size_t f = task % n_filters;
      result.records[task] = run_filter(cfg, model, cfg.filters[f], seeds[s], data[s], refs[s]);
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::min<std::size_t>(opts.threads, result.records.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RecordEntry> entries;
  for (const auto& r : result.records) {
    if (!r.ok) ++result.failures;
    entries.push_back(RecordEntry{r.seed, r.filter, r.ok, r.error, r.metrics});
  }
  result.summary = build_summary(cfg, entries);

  if (!opts.out_dir.empty()) {
    const auto& out = opts.out_dir;
    write_json(out / "config.json", config_to_json(cfg));
    write_json(out / "manifest.json", json{{"config_hash", config_hash(cfg)},
                                           {"seed_offset", opts.seed_offset},
                                           {"seeds", seeds}});
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto dir = out / seed_dir(seeds[s]);
      write_matrix_csv(dir / "truth.csv", data[s].truth);
      Matrix obs(static_cast<Eigen::Index>(data[s].observations.size()), model.dim_y());
      for (std::size_t m = 0; m < data[s].observations.size(); ++m)
        obs.row(static_cast<Eigen::Index>(m)) = data[s].observations[m].transpose();
      write_matrix_csv(dir / "observations.csv", obs);
      if (cfg.reference == Reference::kf) write_matrix_csv(dir / "reference.csv", refs[s]);
    }
    for (const auto& r : result.records) {
      const auto dir = out / seed_dir(r.seed) / to_string(r.filter);
      json meta;
      meta["seed"] = r.seed;
      meta["filter"] = to_string(r.filter);
      meta["config_hash"] = r.config_hash;
      meta["status"] = r.ok ? "ok" : "failed";
      meta["error"] = r.error;
      meta["truth"] = "../truth.csv";
      meta["reference"] = cfg.reference == Reference::kf ? "../reference.csv" : "../truth.csv";
      meta["shape"] = {r.estimates.rows(), r.estimates.cols()};
      write_json(dir / "record.json", meta);
      write_matrix_csv(dir / "estimates.csv", r.estimates);
      if (r.ok) write_matrix_csv(dir / "errors.csv", r.errors);
      if (r.filter == FilterKind::lpf) write_diagnostics_jsonl(dir / "diagnostics.jsonl", r.diagnostics);
    }
    write_json(out / "summary.json", result.summary);
  }
  return result;
}

json recompute_metrics(const std::filesystem::path& dir) {
  const ExperimentConfig cfg = config_from_json(read_json(dir / "config.json"));
  const json manifest = read_json(dir / "manifest.json");
  std::vector<RecordEntry> entries;
  for (const auto& js : manifest.at("seeds")) {
    const auto seed = js.get<std::uint64_t>();
    const auto sdir = dir / seed_dir(seed);
    const Matrix truth = read_matrix_csv(sdir / "truth.csv");
    const Matrix ref = cfg.reference == Reference::kf ? read_matrix_csv(sdir / "reference.csv") : truth;
    for (auto f : cfg.filters) {
      const auto fdir = sdir / to_string(f);
      const json meta = read_json(fdir / "record.json");
      RecordEntry e{seed, f, meta.at("status") == "ok", meta.at("error").get<std::string>(), {}};
      if (e.ok) e.metrics = summarize(read_matrix_csv(fdir / "estimates.csv"), ref, truth);
      entries.push_back(std::move(e));
    }
  }
  return build_summary(cfg, entries);
}

int exit_code(const ExperimentResult& r) {
  if (r.failures == 0) return 0;
  return r.failures == static_cast<int>(r.records.size()) ? 3 : 2;
}

}  // namespace lpf::bench
