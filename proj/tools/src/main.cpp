#include "lpf/bench/config.hpp"
#include "lpf/bench/experiment.hpp"
#include "lpf/bench/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

using namespace lpf::bench;
namespace fs = std::filesystem;

constexpr double kWarnSeconds = 3600.0;

void warn_runtime(const ExperimentConfig& cfg) {
  const double est = estimate_runtime_seconds(cfg);
  if (est > kWarnSeconds) {
    std::fprintf(stderr, "warning: '%s' is estimated to take %.1f hours single-threaded\n", cfg.name.c_str(),
                 est / 3600.0);
  }
}

int cmd_generate(const ExperimentConfig& cfg, const fs::path& out, std::uint64_t offset) {
  const lpf::SsmDefinition model = build_model(cfg.model);
  std::vector<std::uint64_t> seeds;
  for (auto s : cfg.seeds) {
    const std::uint64_t seed = s + offset;
    seeds.push_back(seed);
    lpf::Rng rng = lpf::make_rng(seed, 0x7477696e);
    const TwinData data = generate_twin_data(model, cfg.horizon, rng);
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    write_matrix_csv(dir / "truth.csv", data.truth);
    lpf::Matrix obs(static_cast<Eigen::Index>(data.observations.size()), model.dim_y());
    for (std::size_t m = 0; m < data.observations.size(); ++m)
      obs.row(static_cast<Eigen::Index>(m)) = data.observations[m].transpose();
    write_matrix_csv(dir / "observations.csv", obs);
    std::printf("seed %llu: %d observations -> %s\n", static_cast<unsigned long long>(seed),
                static_cast<int>(data.observations.size()), dir.string().c_str());
  }
  write_json(out / "config.json", config_to_json(cfg));
  write_json(out / "manifest.json",
             nlohmann::json{{"config_hash", config_hash(cfg)}, {"seed_offset", offset}, {"seeds", seeds}});
  return 0;
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out, std::uint64_t offset, int threads) {
  warn_runtime(cfg);
  RunOptions opts;
  opts.threads = threads;
  opts.seed_offset = offset;
  opts.out_dir = out;
  const ExperimentResult r = run_experiment(cfg, opts);
  for (const auto& rec : r.records) {
    if (!rec.ok) {
      std::fprintf(stderr, "seed %llu %s failed: %s\n", static_cast<unsigned long long>(rec.seed),
                   to_string(rec.filter), rec.error.c_str());
    }
  }
  std::cout << r.summary.at("aggregate").dump(2) << '\n';
  std::printf("%zu records written to %s\n", r.records.size(), out.string().c_str());
  return exit_code(r);
}

int cmd_metrics(const fs::path& dir) {
  const nlohmann::json m = recompute_metrics(dir);
  write_json(dir / "metrics.json", m);
  std::cout << m.at("aggregate").dump(2) << '\n';
  return 0;
}

int cmd_list(const fs::path& out) {
  for (const auto& [name, cfg] : presets()) {
    std::printf("%-18s model=%-8s d=%-5lld T=%-5d seeds=%-4zu est=%.0fs\n", name.c_str(), to_string(cfg.model.type),
                static_cast<long long>(cfg.model.state_dim()), cfg.horizon, cfg.seeds.size(),
                estimate_runtime_seconds(cfg));
    if (!out.empty()) write_json(out / (name + ".json"), config_to_json(cfg));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagged particle filter experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed_offset = 0;
  int threads = 1;

  auto* gen = app.add_subcommand("generate", "Generate twin data (truth and observations)");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();
  gen->add_option("--out", out_dir, "Output directory (default: config out_dir)");
  gen->add_option("--seed-offset", seed_offset, "Added to every configured seed");

  auto* run = app.add_subcommand("run", "Run every filter on every seed");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (default: config out_dir)");
  run->add_option("--seed-offset", seed_offset, "Added to every configured seed");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* met = app.add_subcommand("metrics", "Recompute metric summaries from a record directory");
  met->add_option("--out", out_dir, "Record directory written by 'run'")->required();

  auto* lst = app.add_subcommand("list-configs", "List built-in presets");
  lst->add_option("--out", out_dir, "Also write each preset as <name>.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lst->parsed()) return cmd_list(out_dir);
    if (met->parsed()) return cmd_metrics(out_dir);
    ExperimentConfig cfg;
    try {
      cfg = load_config(config_path);
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "invalid config: %s\n", e.what());
      return 1;
    }
    const fs::path out = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
    if (gen->parsed()) return cmd_generate(cfg, out, seed_offset);
    return cmd_run(cfg, out, seed_offset, threads);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 1;
  } catch (const lpf::ContractViolation& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
