#pragma once

// Lagged particle filter. At observation m the sampler targets the joint
// smoothing density of the last L+1 observation blocks, bridged from the
// previous window by an adaptive tempered SMC sampler whose MCMC moves are
// random-walk Metropolis updates of the whole window.
//
// A block holds the k model states between two observations; with k = 1 a
// block is a single state. The density of the oldest block is replaced by a
// user-supplied Gaussian approximation mu of the one-step predictive, which
// keeps the cost of each step independent of time.

#include "lpf/model.hpp"
#include "lpf/smc.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <vector>

namespace lpf::lagged {

enum class MuSource { kalman_predictor, etkf_sqrt_predictor, transition };

const char* to_string(MuSource s);

/// Gaussian approximation of the one-step predictive density. With
/// MuSource::transition it is the model transition itself and carries no
/// parameters; the filter then cancels it analytically.
class ProposalMu {
 public:
  /// `floored` records how many entries of `var` were raised to a floor by the caller.
  static ProposalMu diagonal(Vector mean, Vector var, MuSource source, Eigen::Index floored = 0);
  static ProposalMu dense(Vector mean, const Matrix& cov, MuSource source);
  static ProposalMu transition();

  MuSource source() const { return source_; }
  bool is_transition() const { return source_ == MuSource::transition; }
  bool is_dense() const { return dense_; }
  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  /// Per-coordinate variance.
  const Vector& variance() const { return var_; }
  /// Coordinates whose variance was raised to the floor at construction.
  Eigen::Index floored_coordinates() const { return floored_; }

  double logpdf(const Vector& x) const;

 private:
  MuSource source_ = MuSource::transition;
  bool dense_ = false;
  Vector mean_;
  Vector var_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
  Eigen::Index floored_ = 0;
};

/// Diagonal Gaussian from a Kalman predictor, variance scaled by `variance_scale`.
ProposalMu mu_from_kalman_predictor(const Vector& mean, const Matrix& cov, double variance_scale = 1.0,
                                    bool diagonal = true);
/// Diagonal Gaussian from a forecast ensemble (d x N_e): sample mean and
/// variance with divisor N_e - 1, floored at `var_floor`.
ProposalMu mu_from_etkf_sqrt_predictor(const Matrix& forecast_members, double var_floor = 1e-8);

/// Produces mu_m after observation m has been assimilated by its own filter.
class MuProvider {
 public:
  virtual ~MuProvider() = default;
  virtual MuSource source() const = 0;
  /// Called once per observation, in order.
  virtual ProposalMu advance(const Vector& y) = 0;
};

std::unique_ptr<MuProvider> transition_mu();
std::unique_ptr<MuProvider> kalman_predictor_mu(const SsmDefinition& model, double variance_scale = 1.0);
std::unique_ptr<MuProvider> etkf_sqrt_predictor_mu(const SsmDefinition& model, Eigen::Index members,
                                                   std::uint64_t seed, double var_floor = 1e-8);

struct RwmConfig {
  int sweeps = 20;
  /// Initial step-size multiplier sigma_mult (a standard-deviation factor);
  /// adapted after each temperature.
  double multiplier = 1.0;
  double accept_low = 0.15;
  double accept_high = 0.25;
  double shrink = 0.7;
  double grow = 1.3;
  double min_multiplier = 1e-4;
  double max_multiplier = 1e4;
  bool adapt = true;

  static double alpha(double phi) { return (phi + 2.0) / (phi + 1.0); }
  /// multiplier^2 * 2.38^2 / d * alpha(phi), per coordinate.
  static double proposal_variance(double multiplier, Eigen::Index dim, double phi);
};

/// Multiplier after one temperature with observed acceptance rate `acceptance`.
double adapt_proposal_scale(double multiplier, double acceptance, const RwmConfig& cfg = {});

/// `sweeps` random-walk Metropolis updates of the whole matrix `x` with
/// isotropic Gaussian steps of standard deviation `step_sd`. `log_target`
/// may return -inf. Returns the acceptance rate.
double rwm_sweep(Matrix& x, const std::function<double(const Matrix&)>& log_target, double step_sd,
                 int sweeps, Rng& rng);

/// Particles of the lag window. Each path has k * num_blocks() columns, oldest
/// first; `anchors` hold the state immediately preceding the window.
struct LagWindow {
  int n = 0;            ///< observations assimilated so far
  int lag = 1;          ///< L
  int substeps = 1;     ///< k, model steps per observation
  int first_block = 1;  ///< observation index of the oldest block
  std::vector<Matrix> paths;
  std::vector<Vector> anchors;
  std::vector<double> log_weights;

  std::size_t size() const { return paths.size(); }
  int num_blocks() const { return n == 0 ? 0 : n - first_block + 1; }
  /// Model time of column 0.
  int first_time() const { return (first_block - 1) * substeps + 1; }
  /// True once the window has slid, i.e. n > L.
  bool lagged() const { return n > lag; }
};

/// log of the incremental weight of particle `i` for observation n = window.n:
/// log g(x_n, y_n) while n <= L, and
/// log mu_{n-L}(x) + log g(x_n, y_n) - log f(x_prev, x) afterwards, where x is
/// the first state of block n-L+1. Throws DegenerateEnsemble if not finite.
double incremental_log_weight(const LagWindow& w, const ProposalMu& mu, const SsmDefinition& model,
                              const Vector& y_n, std::size_t i);

/// Weighted mean of phi(newest state).
Vector filter_estimate(const LagWindow& w, const std::function<Vector(const Vector&)>& phi);

struct LpfConfig {
  std::size_t particles = 100;
  double n_star_fraction = 0.8;
  int lag = 1;
  RwmConfig rwm;
  double phi_init = 0.0;
  smc::TemperSchedule schedule = smc::TemperSchedule::adaptive();
  smc::ResamplingScheme resampling = smc::ResamplingScheme::systematic;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct StepDiagnostics {
  int obs_index = 0;
  int time = 0;
  int temperatures = 0;  ///< K_n
  std::vector<double> phi;
  std::vector<double> ess;
  std::vector<double> acceptance;
  std::vector<bool> resampled;
  /// Var_i(delta * log incremental weight_i) at each weight update.
  std::vector<double> log_incr_var;
  std::vector<double> multiplier;
  double wall_seconds = 0.0;
};

class LaggedParticleFilter {
 public:
  LaggedParticleFilter(const SsmDefinition& model, LpfConfig cfg, std::unique_ptr<MuProvider> mu);

  const LagWindow& window() const { return w_; }
  const LpfConfig& config() const { return cfg_; }
  double n_star() const { return n_star_; }
  double multiplier() const { return multiplier_; }

  /// Assimilates the next observation. `predictive` receives the weighted
  /// predictive means at the k-1 unobserved model times inside the block.
  StepDiagnostics step(const Vector& y, std::vector<Vector>* predictive = nullptr);

  /// Weighted mean of the newest state.
  Vector estimate() const;

  /// Predictive means for `steps` model times after the newest state, without
  /// modifying the window.
  std::vector<Vector> forecast_means(int steps);

 private:
  struct Parts {
    double base = 0.0;
    double ratio = 0.0;
  };

  Parts evaluate(const Matrix& path, const Vector& anchor) const;
  void resample_all();
  void slide();
  void propagate(std::vector<Vector>* predictive);

  const SsmDefinition* model_;
  LpfConfig cfg_;
  std::unique_ptr<MuProvider> provider_;
  double n_star_;
  double multiplier_;
  LagWindow w_;
  std::vector<Parts> parts_;
  std::vector<Rng> streams_;
  Rng master_;
  std::deque<ProposalMu> mus_;  ///< mu_j for j = mu_base_ .. n
  int mu_base_ = 1;
  std::deque<Vector> obs_;      ///< y_j for j = first_block .. n
  const ProposalMu& mu(int j) const;
};

struct FilterRun {
  Matrix estimates;  ///< (T+1) x d, row t is the estimate at model time t
  std::vector<StepDiagnostics> steps;
  /// False when a step aborted; `error` then holds the reason and the
  /// estimates from the failed step onwards are NaN.
  bool completed = true;
  std::string error;
};

/// Runs the filter over model times 0..T. observations[m-1] is observed at time m k.
/// Runtime failures (degenerate weights, solver errors) end the run early and
/// are reported in the result; contract violations propagate.
FilterRun run_lagged_filter(const SsmDefinition& model, const std::vector<Vector>& observations,
                            int horizon, const LpfConfig& cfg, std::unique_ptr<MuProvider> mu);

}  // namespace lpf::lagged
