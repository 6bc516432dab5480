#include "lpf/smc.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace lpf;
using namespace lpf::smc;

namespace {

std::vector<double> logs(std::initializer_list<double> w) {
  std::vector<double> out;
  for (double v : w) out.push_back(std::log(v));
  return out;
}

double ess_at(const std::vector<double>& lw, const std::vector<double>& inc, double delta) {
  std::vector<double> v(lw.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = lw[i] + delta * inc[i];
  return ess(v);
}

double normal_logpdf(double x, double m) { return -0.5 * (x - m) * (x - m) - 0.5 * std::log(2.0 * M_PI); }

}  // namespace

TEST_SUITE("smc") {

TEST_CASE("ess examples") {
  CHECK(ess(std::vector<double>(7, -3.0)) == doctest::Approx(7.0).epsilon(1e-14));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(ess(std::vector<double>{ninf, 0.5, ninf, ninf}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ess(logs({2.0, 1.0, 1.0})) == doctest::Approx(16.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("ess is shift invariant and bounded") {
  Rng rng = make_rng(1);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> w(50);
  for (auto& v : w) v = nd(rng);
  const double e = ess(w);
  auto shifted = w;
  for (auto& v : shifted) v += 812.5;
  CHECK(ess(shifted) == doctest::Approx(e).epsilon(1e-12));
  for (auto& v : shifted) v -= 2000.0;
  CHECK(ess(shifted) == doctest::Approx(e).epsilon(1e-12));
  CHECK(e >= 1.0);
  CHECK(e <= 50.0);
}

TEST_CASE("normalization") {
  std::vector<double> w{1000.0, 1001.0, 999.5};
  normalize_log_weights(w);
  CHECK(std::abs(log_sum_exp(w)) <= 1e-12);
  const auto lin = normalized_weights(w);
  CHECK(std::accumulate(lin.begin(), lin.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> dead{ninf, ninf};
  CHECK_THROWS_AS(normalize_log_weights(dead), DegenerateEnsemble);
  std::vector<double> nan{0.0, std::nan("")};
  CHECK_THROWS_AS(normalize_log_weights(nan), DegenerateEnsemble);
}

TEST_CASE("systematic resampling examples") {
  Rng rng = make_rng(2);
  const std::vector<double> uniform(10, 0.1);
  const auto a = systematic_resample(rng, uniform);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a[i] == i);

  std::vector<double> one(8, 0.0);
  one[0] = 1.0;
  for (auto i : systematic_resample(rng, one)) CHECK(i == 0);

  CHECK_THROWS_AS(systematic_resample(rng, std::vector<double>{0.5, 0.6}), ContractViolation);
}

TEST_CASE("resampling is unbiased") {
  const std::size_t n = 1000;
  const int reps = 10000;
  std::vector<double> w(n, 0.0);
  // three groups carrying 0.5, 0.3, 0.2 of the mass
  for (std::size_t i = 0; i < n; ++i) w[i] = i < 100 ? 0.005 : (i < 400 ? 0.001 : 0.2 / 600.0);
  for (auto scheme : {ResamplingScheme::systematic, ResamplingScheme::multinomial}) {
    Rng rng = make_rng(3, static_cast<std::uint64_t>(scheme));
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    for (int r = 0; r < reps; ++r) {
      double c[3] = {0, 0, 0};
      for (auto i : resample(scheme, rng, w)) ++c[i < 100 ? 0 : (i < 400 ? 1 : 2)];
      for (int k = 0; k < 3; ++k) {
        sum[k] += c[k];
        sq[k] += c[k] * c[k];
      }
    }
    const double expect[3] = {500.0, 300.0, 200.0};
    for (int k = 0; k < 3; ++k) {
      const double mean = sum[k] / reps;
      const double var = sq[k] / reps - mean * mean;
      const double se = std::sqrt(std::max(var, 1e-12) / reps);
      CHECK(std::abs(mean - expect[k]) <= 3.0 * se + 1e-9);
    }
  }
}

TEST_CASE("resampled ensembles have equal weights and full ESS") {
  Rng rng = make_rng(4);
  std::vector<double> lw{0.1, -2.0, 1.3, 0.0, -0.7};
  normalize_log_weights(lw);
  const auto anc = systematic_resample(rng, normalized_weights(lw));
  CHECK(anc.size() == 5);
  std::vector<double> reset(5, -std::log(5.0));
  CHECK(ess(reset) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("temper increment with equal increments is final") {
  const std::vector<double> inc(20, -4.0);
  const std::vector<double> lw(20, 0.0);
  const auto r = solve_temper_increment(inc, 0.3, lw, 16.0);
  CHECK(r.is_final);
  CHECK(r.delta == doctest::Approx(0.7));
}

TEST_CASE("temper increment on two particles matches grid search") {
  const double c = 10.0;
  const std::vector<double> inc{0.0, -c};
  const std::vector<double> lw{0.0, 0.0};
  const auto r = solve_temper_increment(inc, 0.0, lw, 1.5);
  CHECK_FALSE(r.is_final);
  const auto f = [c](double d) {
    const double e = std::exp(-c * d);
    return (1 + e) * (1 + e) / (1 + e * e);
  };
  double best = 0.0, gap = 1e300;
  for (int i = 0; i <= 1000000; ++i) {
    const double d = i * 1e-6;
    if (std::abs(f(d) - 1.5) < gap) {
      gap = std::abs(f(d) - 1.5);
      best = d;
    }
  }
  CHECK(std::abs(r.delta - best) <= 1e-6);
  CHECK(std::abs(f(r.delta) - 1.5) <= 1e-6 * 2);
}

TEST_CASE("temper increment hits the ESS target") {
  Rng rng = make_rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 200;
    std::normal_distribution<double> nd(0.0, 1.0 + t);
    std::vector<double> inc(n), lw(n);
    for (auto& v : inc) v = nd(rng);
    for (auto& v : lw) v = 0.1 * nd(rng) / (1.0 + t);
    normalize_log_weights(lw);
    const double n_star = 0.5 * ess(lw);
    const double phi = 0.01 * t;
    const auto r = solve_temper_increment(inc, phi, lw, n_star);
    CHECK(r.delta > 0.0);
    CHECK(r.delta <= 1.0 - phi + 1e-15);
    if (!r.is_final) CHECK(std::abs(ess_at(lw, inc, r.delta) - n_star) <= 1e-6 * n);
    // monotone in delta
    double prev = ess_at(lw, inc, 0.0);
    for (int k = 1; k <= 20; ++k) {
      const double e = ess_at(lw, inc, (1.0 - phi) * k / 20.0);
      CHECK(e <= prev + 1e-9);
      prev = e;
    }
  }
}

TEST_CASE("temper increment contract") {
  const std::vector<double> inc{0.0, -1.0, -2.0};
  CHECK_THROWS_AS(solve_temper_increment(inc, 0.0, logs({0.98, 0.01, 0.01}), 2.5), ContractViolation);
  CHECK_THROWS_AS(solve_temper_increment(inc, 1.0, std::vector<double>(3, 0.0), 2.0), ContractViolation);
}

using Particle = double;

TEST_CASE("sampler with identical densities is a no-op") {
  WeightedEnsemble<Particle> ens;
  Rng rng = make_rng(6);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 100; ++i) ens.particles.push_back(nd(rng));
  ens.log_weights.assign(100, 0.0);
  const auto before = ens.particles;
  const std::function<double(const Particle&)> dens = [](const Particle& x) { return normal_logpdf(x, 0.0); };
  const KernelFactory<Particle> none = [](double) { return Kernel<Particle>{}; };
  const auto r = smc_sampler<Particle>(dens, dens, none, TemperSchedule::adaptive(), ens, 50.0, rng);
  CHECK(r.ensemble.particles == before);
  CHECK(r.diagnostics.weight_updates == 1);
  CHECK(r.diagnostics.resampled == std::vector<bool>{false});
  CHECK(r.diagnostics.phi.back() == 1.0);
}

TEST_CASE("sampler moves N(0,1) to N(3,1)") {
  const std::size_t n = 5000;
  WeightedEnsemble<Particle> ens;
  Rng rng = make_rng(7);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < n; ++i) ens.particles.push_back(nd(rng));
  ens.log_weights.assign(n, 0.0);
  const std::function<double(const Particle&)> nu = [](const Particle& x) { return normal_logpdf(x, 0.0); };
  const std::function<double(const Particle&)> kappa = [](const Particle& x) { return normal_logpdf(x, 3.0); };
  const KernelFactory<Particle> rwm = [&](double phi) -> Kernel<Particle> {
    return [phi, nu, kappa](Particle& x, Rng& r) {
      std::normal_distribution<double> step(0.0, 1.0);
      std::uniform_real_distribution<double> u;
      for (int s = 0; s < 5; ++s) {
        const double y = x + step(r);
        const double a = phi * (kappa(y) - kappa(x)) + (1 - phi) * (nu(y) - nu(x));
        if (std::log(u(r)) < a) x = y;
      }
    };
  };
  const auto r = smc_sampler<Particle>(kappa, nu, rwm, TemperSchedule::adaptive(), ens, 0.5 * n, rng);
  const auto w = normalized_weights(r.ensemble.log_weights);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += w[i] * r.ensemble.particles[i];
  const double ess_final = ess(r.ensemble.log_weights);
  CHECK(std::abs(mean - 3.0) <= 3.0 / std::sqrt(ess_final));
  CHECK(r.diagnostics.weight_updates > 1);
  for (std::size_t k = 1; k < r.diagnostics.phi.size(); ++k) CHECK(r.diagnostics.phi[k] > r.diagnostics.phi[k - 1]);
  CHECK(r.diagnostics.phi.back() == 1.0);
}

TEST_CASE("fixed grid consumes exactly its step count") {
  WeightedEnsemble<Particle> ens;
  for (int i = 0; i < 10; ++i) ens.particles.push_back(0.1 * i);
  ens.log_weights.assign(10, 0.0);
  Rng rng = make_rng(8);
  const std::function<double(const Particle&)> nu = [](const Particle& x) { return normal_logpdf(x, 0.0); };
  const std::function<double(const Particle&)> kappa = [](const Particle& x) { return normal_logpdf(x, 0.2); };
  const KernelFactory<Particle> none = [](double) { return Kernel<Particle>{}; };
  for (int d : {1, 4, 13}) {
    const auto r = smc_sampler<Particle>(kappa, nu, none, TemperSchedule::fixed_grid(d), ens, 1.0, rng);
    CHECK(r.diagnostics.weight_updates == d);
    CHECK(r.diagnostics.phi.size() == static_cast<std::size_t>(d + 1));
    for (int k = 0; k <= d; ++k) CHECK(r.diagnostics.phi[static_cast<std::size_t>(k)] == doctest::Approx(double(k) / d));
  }
}

}  // TEST_SUITE
