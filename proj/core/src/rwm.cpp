#include "lpf/lagged_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lpf::lagged {

double RwmConfig::proposal_variance(double multiplier, Eigen::Index dim, double phi) {
  require(dim > 0, "RwmConfig::proposal_variance: dimension must be positive");
  return multiplier * multiplier * (2.38 * 2.38 / static_cast<double>(dim)) * alpha(phi);
}

double adapt_proposal_scale(double multiplier, double acceptance, const RwmConfig& cfg) {
  require(acceptance >= 0.0 && acceptance <= 1.0, "adapt_proposal_scale: acceptance must lie in [0, 1]");
  double m = multiplier;
  if (acceptance < cfg.accept_low) {
    m *= cfg.shrink;
  } else if (acceptance > cfg.accept_high) {
    m *= cfg.grow;
  }
  return std::clamp(m, cfg.min_multiplier, cfg.max_multiplier);
}

double rwm_sweep(Matrix& x, const std::function<double(const Matrix&)>& log_target, double step_sd,
                 int sweeps, Rng& rng) {
  require(sweeps >= 1, "rwm_sweep: sweeps must be >= 1");
  require(step_sd > 0.0, "rwm_sweep: step size must be positive");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  double current = log_target(x);
  int accepted = 0;
  Matrix prop(x.rows(), x.cols());
  for (int s = 0; s < sweeps; ++s) {
    for (Eigen::Index k = 0; k < x.size(); ++k) prop.data()[k] = x.data()[k] + step_sd * normal(rng);
    const double cand = log_target(prop);
    if (cand > -std::numeric_limits<double>::infinity() && std::log(unif(rng)) < cand - current) {
      x.swap(prop);
      current = cand;
      ++accepted;
    }
  }
  return static_cast<double>(accepted) / sweeps;
}

}  // namespace lpf::lagged
