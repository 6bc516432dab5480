#include "lpf/lagged_filter.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>

namespace lpf::lagged {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class F>
void for_each_particle(std::size_t n, int threads, F&& f) {
  std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic, 4) if (threads > 1)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(lpf_particle_error)
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

Vector weighted_column_mean(const std::vector<Matrix>& paths, const std::vector<double>& w, Eigen::Index col) {
  Vector mean = Vector::Zero(paths.front().rows());
  for (std::size_t i = 0; i < paths.size(); ++i) mean += w[i] * paths[i].col(col);
  return mean;
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

[[noreturn]] void degenerate_particle(std::size_t i, const char* what) {
  std::ostringstream os;
  os << "lagged filter: particle " << i << " has a non-finite " << what;
  throw DegenerateEnsemble(os.str());
}

}  // namespace

double incremental_log_weight(const LagWindow& w, const ProposalMu& mu, const SsmDefinition& model,
                              const Vector& y_n, std::size_t i) {
  require(i < w.size(), "incremental_log_weight: particle index out of range");
  require(w.n >= 1 && w.num_blocks() >= 1, "incremental_log_weight: window is empty");
  const Matrix& p = w.paths[i];
  double out = likelihood_logpdf(model, p.col(p.cols() - 1), y_n);
  if (w.lagged() && !mu.is_transition()) {
    const Eigen::Index c = w.substeps;
    const Vector x = p.col(c);
    out += mu.logpdf(x) - transition_logpdf(model, p.col(c - 1), x, w.first_time() + static_cast<int>(c));
  }
  if (!std::isfinite(out)) degenerate_particle(i, "incremental weight");
  return out;
}

Vector filter_estimate(const LagWindow& w, const std::function<Vector(const Vector&)>& phi) {
  require(w.size() > 0 && w.num_blocks() >= 1, "filter_estimate: window is empty");
  const auto weights = smc::normalized_weights(w.log_weights);
  Vector out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vector v = phi(w.paths[i].col(w.paths[i].cols() - 1));
    if (i == 0) out = Vector::Zero(v.size());
    out += weights[i] * v;
  }
  return out;
}

LaggedParticleFilter::LaggedParticleFilter(const SsmDefinition& model, LpfConfig cfg, std::unique_ptr<MuProvider> mu)
    : model_(&model), cfg_(std::move(cfg)), provider_(std::move(mu)), master_(make_rng(cfg_.seed, 0)) {
  require(provider_ != nullptr, "LaggedParticleFilter: a mu provider is required");
  require(cfg_.particles >= 2, "LaggedParticleFilter: need at least 2 particles");
  require(cfg_.n_star_fraction > 0.0 && cfg_.n_star_fraction <= 1.0,
          "LaggedParticleFilter: n_star_fraction must lie in (0, 1]");
  require(cfg_.lag >= 1, "LaggedParticleFilter: lag must be >= 1");
  require(cfg_.rwm.sweeps >= 1, "LaggedParticleFilter: sweeps must be >= 1");
  require(cfg_.rwm.multiplier > 0.0, "LaggedParticleFilter: proposal multiplier must be positive");
  require(cfg_.phi_init >= 0.0 && cfg_.phi_init < 1.0, "LaggedParticleFilter: phi_init must lie in [0, 1)");
  require(cfg_.threads >= 1, "LaggedParticleFilter: threads must be >= 1");
  if (cfg_.schedule.mode() == smc::TemperSchedule::Mode::fixed_grid) {
    require(cfg_.schedule.grid_steps() >= 1, "LaggedParticleFilter: fixed grid needs at least one step");
  }
  const std::size_t n = cfg_.particles;
  n_star_ = cfg_.n_star_fraction * static_cast<double>(n);
  multiplier_ = cfg_.rwm.multiplier;
  w_.lag = cfg_.lag;
  w_.substeps = model.obs_frequency();
  w_.paths.assign(n, Matrix(model.dim_x(), 0));
  w_.anchors.assign(n, model.x0());
  w_.log_weights.assign(n, -std::log(static_cast<double>(n)));
  parts_.assign(n, Parts{});
  streams_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams_.push_back(make_rng(cfg_.seed, 1, i));
}

const ProposalMu& LaggedParticleFilter::mu(int j) const {
  require(j >= mu_base_ && j - mu_base_ < static_cast<int>(mus_.size()), "LaggedParticleFilter: mu not available");
  return mus_[static_cast<std::size_t>(j - mu_base_)];
}

LaggedParticleFilter::Parts LaggedParticleFilter::evaluate(const Matrix& path, const Vector& anchor) const {
  const SsmDefinition& model = *model_;
  const int k = w_.substeps;
  const int s = w_.first_block;
  const int t0 = w_.first_time();
  Parts out;
  try {
    if (s == 1 || mu(s - 1).is_transition()) {
      out.base = transition_logpdf(model, anchor, path.col(0), t0);
    } else {
      out.base = mu(s - 1).logpdf(path.col(0));
    }
    const bool lagged = w_.lagged() && !mu(s).is_transition();
    for (Eigen::Index c = 1; c < path.cols(); ++c) {
      const double lf = transition_logpdf(model, path.col(c - 1), path.col(c), t0 + static_cast<int>(c));
      out.base += lf;
      if (lagged && c == k) out.ratio += mu(s).logpdf(path.col(c)) - lf;
    }
    for (int j = s; j < w_.n; ++j) {
      const Eigen::Index last = static_cast<Eigen::Index>(j - s + 1) * k - 1;
      out.base += likelihood_logpdf(model, path.col(last), obs_[static_cast<std::size_t>(j - s)]);
    }
    out.ratio += likelihood_logpdf(model, path.col(path.cols() - 1), obs_.back());
  } catch (const SolverError&) {
    return Parts{kNegInf, 0.0};
  }
  if (!std::isfinite(out.base) || !std::isfinite(out.ratio)) return Parts{kNegInf, 0.0};
  return out;
}

void LaggedParticleFilter::slide() {
  const int first = std::max(1, w_.n - w_.lag);
  const auto k = static_cast<Eigen::Index>(w_.substeps);
  while (w_.first_block < first) {
    for (std::size_t i = 0; i < w_.size(); ++i) {
      Matrix& p = w_.paths[i];
      w_.anchors[i] = p.col(k - 1);
      p = Matrix(p.rightCols(p.cols() - k));
    }
    ++w_.first_block;
    obs_.pop_front();
  }
  while (mu_base_ < w_.first_block - 1 && !mus_.empty()) {
    mus_.pop_front();
    ++mu_base_;
  }
}

void LaggedParticleFilter::propagate(std::vector<Vector>* predictive) {
  const SsmDefinition& model = *model_;
  const int k = w_.substeps;
  const int t_prev = (w_.n - 1) * k;
  for_each_particle(w_.size(), cfg_.threads, [&](std::size_t i) {
    Matrix& p = w_.paths[i];
    const Eigen::Index old = p.cols();
    Vector prev = old > 0 ? Vector(p.col(old - 1)) : w_.anchors[i];
    p.conservativeResize(Eigen::NoChange, old + k);
    for (int s = 1; s <= k; ++s) {
      prev = sample_transition(model, streams_[i], prev, t_prev + s);
      p.col(old + s - 1) = prev;
    }
  });
  if (predictive != nullptr && k > 1) {
    const auto weights = smc::normalized_weights(w_.log_weights);
    const Eigen::Index cols = w_.paths.front().cols();
    for (int s = 1; s < k; ++s) predictive->push_back(weighted_column_mean(w_.paths, weights, cols - k + s - 1));
  }
}

void LaggedParticleFilter::resample_all() {
  const auto weights = smc::normalized_weights(w_.log_weights);
  const auto ancestors = smc::resample(cfg_.resampling, master_, weights);
  std::vector<Matrix> paths;
  std::vector<Vector> anchors;
  std::vector<Parts> parts;
  paths.reserve(ancestors.size());
  anchors.reserve(ancestors.size());
  parts.reserve(ancestors.size());
  for (auto a : ancestors) {
    paths.push_back(w_.paths[a]);
    anchors.push_back(w_.anchors[a]);
    parts.push_back(parts_[a]);
  }
  w_.paths = std::move(paths);
  w_.anchors = std::move(anchors);
  parts_ = std::move(parts);
  std::fill(w_.log_weights.begin(), w_.log_weights.end(), -std::log(static_cast<double>(w_.size())));
}

StepDiagnostics LaggedParticleFilter::step(const Vector& y, std::vector<Vector>* predictive) {
  require(y.size() == model_->dim_y(), "LaggedParticleFilter::step: observation length must equal d_y");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = w_.size();
  ++w_.n;
  slide();
  obs_.push_back(y);
  propagate(predictive);

  StepDiagnostics diag;
  diag.obs_index = w_.n;
  diag.time = w_.n * w_.substeps;

  for_each_particle(n, cfg_.threads, [&](std::size_t i) { parts_[i] = evaluate(w_.paths[i], w_.anchors[i]); });
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(parts_[i].base)) degenerate_particle(i, "window density");
    if (!std::isfinite(parts_[i].ratio)) degenerate_particle(i, "incremental weight");
  }

  std::vector<double> ratio(n);
  std::vector<double> scaled(n);
  auto reweight = [&](double delta) {
    for (std::size_t i = 0; i < n; ++i) {
      ratio[i] = parts_[i].ratio;
      scaled[i] = delta * ratio[i];
      w_.log_weights[i] += scaled[i];
    }
    smc::normalize_log_weights(w_.log_weights);
    diag.log_incr_var.push_back(sample_variance(scaled));
    const double e = smc::ess(w_.log_weights);
    diag.ess.push_back(e);
    const bool res = e <= n_star_;
    diag.resampled.push_back(res);
    if (res) resample_all();
  };

  double phi = cfg_.phi_init;
  diag.phi.push_back(phi);
  if (phi > 0.0) reweight(phi);

  const Eigen::Index dim = model_->dim_x();
  int grid_k = 0;
  if (cfg_.schedule.mode() == smc::TemperSchedule::Mode::fixed_grid) {
    grid_k = static_cast<int>(std::floor(phi * cfg_.schedule.grid_steps() + 1e-12));
  }
  while (phi < 1.0) {
    double next = 1.0;
    if (cfg_.schedule.mode() == smc::TemperSchedule::Mode::fixed_grid) {
      ++grid_k;
      next = grid_k >= cfg_.schedule.grid_steps() ? 1.0
                                                  : static_cast<double>(grid_k) / cfg_.schedule.grid_steps();
    } else {
      for (std::size_t i = 0; i < n; ++i) ratio[i] = parts_[i].ratio;
      const auto inc = smc::solve_temper_increment(ratio, phi, w_.log_weights, n_star_);
      next = inc.is_final ? 1.0 : std::min(1.0, phi + std::max(inc.delta, smc::kMinTemperIncrement));
    }
    reweight(next - phi);
    phi = next;
    diag.phi.push_back(phi);

    const double sd = std::sqrt(RwmConfig::proposal_variance(multiplier_, dim, phi));
    std::vector<int> accepted(n, 0);
    for_each_particle(n, cfg_.threads, [&](std::size_t i) {
      Rng& rng = streams_[i];
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> unif;
      Matrix& cur = w_.paths[i];
      Matrix prop(cur.rows(), cur.cols());
      double cur_lt = parts_[i].base + phi * parts_[i].ratio;
      for (int s = 0; s < cfg_.rwm.sweeps; ++s) {
        for (Eigen::Index e = 0; e < cur.size(); ++e) prop.data()[e] = cur.data()[e] + sd * normal(rng);
        const Parts cand = evaluate(prop, w_.anchors[i]);
        const double cand_lt = cand.base + phi * cand.ratio;
        if (cand.base > kNegInf && std::log(unif(rng)) < cand_lt - cur_lt) {
          cur.swap(prop);
          parts_[i] = cand;
          cur_lt = cand_lt;
          ++accepted[i];
        }
      }
    });
    double acc = 0.0;
    for (int a : accepted) acc += a;
    acc /= static_cast<double>(n) * cfg_.rwm.sweeps;
    diag.acceptance.push_back(acc);
    diag.multiplier.push_back(multiplier_);
    if (cfg_.rwm.adapt) multiplier_ = adapt_proposal_scale(multiplier_, acc, cfg_.rwm);
  }
  if (smc::ess(w_.log_weights) <= n_star_) resample_all();

  diag.temperatures = static_cast<int>(diag.phi.size());
  mus_.push_back(provider_->advance(y));
  diag.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return diag;
}

Vector LaggedParticleFilter::estimate() const {
  return filter_estimate(w_, [](const Vector& x) { return x; });
}

std::vector<Vector> LaggedParticleFilter::forecast_means(int steps) {
  require(steps >= 0, "forecast_means: steps must be non-negative");
  std::vector<Vector> out;
  if (steps == 0) return out;
  const std::size_t n = w_.size();
  const auto weights = smc::normalized_weights(w_.log_weights);
  std::vector<Vector> cur(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix& p = w_.paths[i];
    cur[i] = p.cols() > 0 ? Vector(p.col(p.cols() - 1)) : w_.anchors[i];
  }
  const int t0 = w_.n * w_.substeps;
  for (int s = 1; s <= steps; ++s) {
    for_each_particle(n, cfg_.threads, [&](std::size_t i) { cur[i] = sample_transition(*model_, streams_[i], cur[i], t0 + s); });
    Vector mean = Vector::Zero(model_->dim_x());
    for (std::size_t i = 0; i < n; ++i) mean += weights[i] * cur[i];
    out.push_back(std::move(mean));
  }
  return out;
}

FilterRun run_lagged_filter(const SsmDefinition& model, const std::vector<Vector>& observations, int horizon,
                            const LpfConfig& cfg, std::unique_ptr<MuProvider> mu) {
  require(horizon >= 0, "run_lagged_filter: horizon must be non-negative");
  LaggedParticleFilter filter(model, cfg, std::move(mu));
  const int k = model.obs_frequency();
  FilterRun run;
  run.estimates.resize(horizon + 1, model.dim_x());
  run.estimates.row(0) = model.x0().transpose();
  int t = 0;
  try {
    for (std::size_t m = 1; m <= observations.size() && static_cast<int>(m) * k <= horizon; ++m) {
      std::vector<Vector> pred;
      run.steps.push_back(filter.step(observations[m - 1], &pred));
      for (const auto& v : pred) run.estimates.row(++t) = v.transpose();
      run.estimates.row(++t) = filter.estimate().transpose();
    }
    for (const auto& v : filter.forecast_means(horizon - t)) run.estimates.row(++t) = v.transpose();
  } catch (const std::runtime_error& e) {
    run.completed = false;
    run.error = e.what();
    run.estimates.bottomRows(horizon - t).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return run;
}

}  // namespace lpf::lagged
