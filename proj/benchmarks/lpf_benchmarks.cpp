#include "lpf/baselines.hpp"
#include "lpf/lagged_filter.hpp"
#include "lpf/models.hpp"
#include "lpf/smc.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace lpf;

namespace {

void BM_Ess(benchmark::State& state) {
  Rng rng = make_rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> lw(static_cast<std::size_t>(state.range(0)));
  for (auto& v : lw) v = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(smc::ess(lw));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ess)->Arg(100)->Arg(1000)->Arg(10000);

void BM_RwmSweep(benchmark::State& state) {
  const auto d = state.range(0);
  Matrix x = Matrix::Zero(d, 2);
  Rng rng = make_rng(2);
  const auto target = [](const Matrix& m) { return -0.5 * m.squaredNorm(); };
  const double sd = std::sqrt(lagged::RwmConfig::proposal_variance(1.0, x.size(), 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(lagged::rwm_sweep(x, target, sd, 20, rng));
}
BENCHMARK(BM_RwmSweep)->Arg(20)->Arg(500);

void BM_LaggedFilterStep(benchmark::State& state) {
  models::LinearGaussianParams p;
  p.dim = state.range(0);
  const auto model = models::make_linear_gaussian(p);
  Rng rng = make_rng(3);
  std::vector<Vector> obs;
  Vector x = model.x0();
  for (int n = 1; n <= 64; ++n) {
    x = sample_transition(model, rng, x, n);
    obs.push_back(sample_observation(model, rng, x));
  }
  lagged::LpfConfig cfg;
  cfg.particles = 100;
  cfg.lag = 1;
  std::size_t n = 0;
  auto filter = std::make_unique<lagged::LaggedParticleFilter>(model, cfg, lagged::kalman_predictor_mu(model));
  for (auto _ : state) {
    if (n == obs.size()) {
      state.PauseTiming();
      filter = std::make_unique<lagged::LaggedParticleFilter>(model, cfg, lagged::kalman_predictor_mu(model));
      n = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(filter->step(obs[n++]));
  }
}
BENCHMARK(BM_LaggedFilterStep)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EtkfSqrtAnalysis(benchmark::State& state) {
  models::LinearGaussianParams p;
  p.dim = state.range(0);
  const auto model = models::make_linear_gaussian(p);
  Rng rng = make_rng(4);
  baselines::EnsembleState es{Matrix::NullaryExpr(p.dim, 100, [&] { return std::normal_distribution<double>()(rng); })};
  const Vector y = Vector::Zero(p.dim);
  for (auto _ : state) benchmark::DoNotOptimize(baselines::etkf_sqrt_analysis(es, y, model));
}
BENCHMARK(BM_EtkfSqrtAnalysis)->Arg(40)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
