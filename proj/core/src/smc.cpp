#include "lpf/smc.hpp"

#include <cassert>
#include <limits>
#include <numeric>

namespace lpf::smc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double max_finite(std::span<const double> log_w) {
  double m = kNegInf;
  for (double v : log_w) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw DegenerateEnsemble("log-weights contain NaN or +inf");
    }
    m = std::max(m, v);
  }
  if (m == kNegInf) throw DegenerateEnsemble("all log-weights are -inf");
  return m;
}

void check_weights(std::span<const double> w) {
  require(!w.empty(), "resample: empty weight vector");
  double total = 0.0;
  for (double v : w) {
    require(v >= 0.0, "resample: negative weight");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-9, "resample: weights must sum to 1");
}

double ess_at(std::span<const double> base, std::span<const double> incr, double delta,
              std::vector<double>& scratch) {
  for (std::size_t i = 0; i < base.size(); ++i) scratch[i] = base[i] + delta * incr[i];
  return ess(scratch);
}

}  // namespace

double log_sum_exp(std::span<const double> log_w) {
  const double m = max_finite(log_w);
  double s = 0.0;
  for (double v : log_w) s += std::exp(v - m);
  return m + std::log(s);
}

void normalize_log_weights(std::span<double> log_w) {
  const double lse = log_sum_exp(log_w);
  for (double& v : log_w) v -= lse;
}

std::vector<double> normalized_weights(std::span<const double> log_w) {
  const double lse = log_sum_exp(log_w);
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - lse);
  return w;
}

double ess(std::span<const double> log_w) {
  const double m = max_finite(log_w);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

std::vector<std::size_t> systematic_resample(Rng& rng, std::span<const double> weights) {
  check_weights(weights);
  const std::size_t n = weights.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double offset = unif(rng);
  std::vector<std::size_t> out(n);
  double cumulative = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (offset + static_cast<double>(i)) / static_cast<double>(n);
    while (u > cumulative && j + 1 < n) cumulative += weights[++j];
    out[i] = j;
  }
  return out;
}

std::vector<std::size_t> multinomial_resample(Rng& rng, std::span<const double> weights) {
  check_weights(weights);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> out(weights.size());
  for (auto& a : out) a = pick(rng);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> resample(ResamplingScheme scheme, Rng& rng, std::span<const double> weights) {
  return scheme == ResamplingScheme::systematic ? systematic_resample(rng, weights)
                                                : multinomial_resample(rng, weights);
}

TemperIncrement solve_temper_increment(std::span<const double> log_incr, double phi_k,
                                       std::span<const double> current_log_weights, double n_star) {
  const std::size_t n = log_incr.size();
  require(n == current_log_weights.size(), "solve_temper_increment: size mismatch");
  require(n >= 1, "solve_temper_increment: empty ensemble");
  require(phi_k >= 0.0 && phi_k < 1.0, "solve_temper_increment: phi_k must lie in [0, 1)");
  require(n_star >= 1.0 && n_star <= static_cast<double>(n), "solve_temper_increment: n_star must lie in [1, N]");
  for (double v : log_incr) {
    if (!std::isfinite(v)) throw DegenerateEnsemble("solve_temper_increment: non-finite log increment");
  }

  std::vector<double> scratch(n);
  const double ess0 = ess(current_log_weights);
  require(ess0 >= n_star - 1e-9 * static_cast<double>(n),
          "solve_temper_increment: ESS(0) < n_star; resample first");

  const double max_delta = 1.0 - phi_k;
  double hi = max_delta;
  if (ess_at(current_log_weights, log_incr, hi, scratch) >= n_star) return {max_delta, true};

  double lo = 0.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double e = ess_at(current_log_weights, log_incr, mid, scratch);
    if (e >= n_star) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
#ifndef NDEBUG
  assert(ess_at(current_log_weights, log_incr, lo, scratch) >=
         ess_at(current_log_weights, log_incr, hi, scratch) - 1e-9);
#endif
  return {hi, false};
}

TemperSchedule TemperSchedule::fixed_grid(int steps) {
  require(steps >= 1, "TemperSchedule::fixed_grid: need at least one step");
  TemperSchedule s;
  s.mode_ = Mode::fixed_grid;
  s.steps_ = steps;
  return s;
}

TemperSchedule TemperSchedule::adaptive() { return TemperSchedule{}; }

}  // namespace lpf::smc
