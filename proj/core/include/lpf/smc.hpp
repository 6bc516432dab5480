#pragma once

// Tempered SMC machinery: log-weight bookkeeping, effective sample size,
// resampling, fixed and ESS-adaptive temperature schedules, and a generic
// SMC sampler moving an ensemble from an initial density nu to a target kappa
// through the geometric bridge kappa^phi nu^(1-phi).

#include "lpf/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace lpf::smc {

double log_sum_exp(std::span<const double> log_w);

/// Shifts log-weights so that log_sum_exp(log_w) == 0. Throws DegenerateEnsemble
/// when every entry is -inf (or any entry is NaN / +inf).
void normalize_log_weights(std::span<double> log_w);

/// Normalized linear weights exp(log_w - logsumexp).
std::vector<double> normalized_weights(std::span<const double> log_w);

/// (sum w)^2 / sum w^2, evaluated with shifted exponentials. Result lies in [1, N].
double ess(std::span<const double> log_w);

enum class ResamplingScheme { systematic, multinomial };

/// Ancestor indices, sorted ascending. Weights must be non-negative and sum to 1 within 1e-9.
std::vector<std::size_t> systematic_resample(Rng& rng, std::span<const double> weights);
std::vector<std::size_t> multinomial_resample(Rng& rng, std::span<const double> weights);
std::vector<std::size_t> resample(ResamplingScheme scheme, Rng& rng, std::span<const double> weights);

struct TemperIncrement {
  double delta = 0.0;
  bool is_final = false;
};

/// Finds delta in (0, 1 - phi_k] with ESS(current + delta * log_incr) = n_star by
/// bisection to absolute tolerance 1e-10; returns (1 - phi_k, true) if the ESS at
/// the boundary already exceeds n_star. Throws ContractViolation if ESS(0) < n_star.
TemperIncrement solve_temper_increment(std::span<const double> log_incr, double phi_k,
                                       std::span<const double> current_log_weights, double n_star);

/// Smallest temperature increment taken by the adaptive schedule. Bounds the
/// number of tempering steps when n_star is at (or numerically at) N.
inline constexpr double kMinTemperIncrement = 1e-5;

class TemperSchedule {
 public:
  enum class Mode { fixed_grid, adaptive };

  /// phi_k = (k - 1) / steps for k = 1..steps+1.
  static TemperSchedule fixed_grid(int steps);
  static TemperSchedule adaptive();

  Mode mode() const { return mode_; }
  int grid_steps() const { return steps_; }

 private:
  Mode mode_ = Mode::adaptive;
  int steps_ = 0;
};

template <class Particle>
struct WeightedEnsemble {
  std::vector<Particle> particles;
  std::vector<double> log_weights;

  std::size_t size() const { return particles.size(); }
};

struct SamplerDiagnostics {
  std::vector<double> phi;  ///< realized temperatures, phi[0] = 0, back() = 1
  std::vector<double> ess;  ///< ESS after each weight update
  std::vector<bool> resampled;
  int weight_updates = 0;
};

template <class Particle>
struct SamplerResult {
  WeightedEnsemble<Particle> ensemble;
  SamplerDiagnostics diagnostics;
};

/// Markov kernel invariant for kappa^phi nu^(1-phi), applied in place.
template <class Particle>
using Kernel = std::function<void(Particle&, Rng&)>;

template <class Particle>
using KernelFactory = std::function<Kernel<Particle>(double phi)>;

/// Runs the tempered sampler. Weights are kept normalized after every update;
/// the ensemble is resampled whenever ESS <= n_star.
template <class Particle>
SamplerResult<Particle> smc_sampler(const std::function<double(const Particle&)>& target_logpdf,
                                    const std::function<double(const Particle&)>& init_logpdf,
                                    const KernelFactory<Particle>& kernel_factory,
                                    const TemperSchedule& schedule,
                                    WeightedEnsemble<Particle> ensemble, double n_star, Rng& rng,
                                    ResamplingScheme scheme = ResamplingScheme::systematic) {
  const std::size_t n = ensemble.size();
  require(n >= 2, "smc_sampler: need at least 2 particles");
  require(ensemble.log_weights.size() == n, "smc_sampler: one log-weight per particle");
  require(n_star >= 1.0 && n_star <= static_cast<double>(n), "smc_sampler: n_star must lie in [1, N]");
  normalize_log_weights(ensemble.log_weights);

  SamplerResult<Particle> out;
  out.diagnostics.phi.push_back(0.0);
  std::vector<double> log_ratio(n);
  double phi = 0.0;
  int k = 0;
  while (phi < 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      log_ratio[i] = target_logpdf(ensemble.particles[i]) - init_logpdf(ensemble.particles[i]);
    }
    double next = 1.0;
    if (schedule.mode() == TemperSchedule::Mode::fixed_grid) {
      ++k;
      next = k >= schedule.grid_steps() ? 1.0 : static_cast<double>(k) / schedule.grid_steps();
    } else {
      const auto inc = solve_temper_increment(log_ratio, phi, ensemble.log_weights, n_star);
      next = inc.is_final ? 1.0 : std::min(1.0, phi + std::max(inc.delta, kMinTemperIncrement));
    }
    const double delta = next - phi;
    for (std::size_t i = 0; i < n; ++i) ensemble.log_weights[i] += delta * log_ratio[i];
    normalize_log_weights(ensemble.log_weights);
    phi = next;
    ++out.diagnostics.weight_updates;
    out.diagnostics.phi.push_back(phi);
    const double e = ess(ensemble.log_weights);
    out.diagnostics.ess.push_back(e);
    const bool do_resample = e <= n_star;
    out.diagnostics.resampled.push_back(do_resample);
    if (do_resample) {
      const auto w = normalized_weights(ensemble.log_weights);
      const auto ancestors = resample(scheme, rng, w);
      std::vector<Particle> next_particles;
      next_particles.reserve(n);
      for (auto a : ancestors) next_particles.push_back(ensemble.particles[a]);
      ensemble.particles = std::move(next_particles);
      std::fill(ensemble.log_weights.begin(), ensemble.log_weights.end(), -std::log(static_cast<double>(n)));
    }
    const Kernel<Particle> kernel = kernel_factory(phi);
    if (kernel) {
      for (auto& p : ensemble.particles) kernel(p, rng);
    }
  }
  out.ensemble = std::move(ensemble);
  return out;
}

}  // namespace lpf::smc
