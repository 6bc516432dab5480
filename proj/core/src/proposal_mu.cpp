#include "lpf/lagged_filter.hpp"
#include "lpf/baselines.hpp"

#include <cmath>

namespace lpf::lagged {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

class TransitionProvider final : public MuProvider {
 public:
  MuSource source() const override { return MuSource::transition; }
  ProposalMu advance(const Vector&) override { return ProposalMu::transition(); }
};

// Runs its own filter alongside the particle filter. After assimilating y_m at
// model time m k, one further prediction gives mu_m; the next call finishes
// the remaining k - 1 predictions before its analysis.
class KalmanProvider final : public MuProvider {
 public:
  KalmanProvider(const SsmDefinition& model, double scale)
      : model_(&model), scale_(scale), ks_{model.x0(), Matrix::Zero(model.dim_x(), model.dim_x())} {
    require(model.is_linear(), "kalman_predictor_mu: model must be linear");
    require(scale > 0.0, "kalman_predictor_mu: variance scale must be positive");
  }

  MuSource source() const override { return MuSource::kalman_predictor; }

  ProposalMu advance(const Vector& y) override {
    const int k = model_->obs_frequency();
    for (int s = first_ ? 0 : 1; s < k; ++s) ks_ = baselines::kalman_predict(ks_, *model_);
    first_ = false;
    ks_ = baselines::kalman_update(ks_, y, *model_);
    ks_ = baselines::kalman_predict(ks_, *model_);
    return mu_from_kalman_predictor(ks_.mean, ks_.cov, scale_);
  }

 private:
  const SsmDefinition* model_;
  double scale_;
  baselines::KalmanState ks_;
  bool first_ = true;
};

class EtkfSqrtProvider final : public MuProvider {
 public:
  EtkfSqrtProvider(const SsmDefinition& model, Eigen::Index members, std::uint64_t seed, double floor)
      : model_(&model), es_(baselines::ensemble_at(model.x0(), members)), rng_(make_rng(seed, 0x6d75)),
        floor_(floor) {
    require(members >= 2, "etkf_sqrt_predictor_mu: need at least 2 members");
  }

  MuSource source() const override { return MuSource::etkf_sqrt_predictor; }

  ProposalMu advance(const Vector& y) override {
    const int k = model_->obs_frequency();
    for (int s = first_ ? 0 : 1; s < k; ++s) es_ = baselines::forecast(es_, *model_, rng_);
    first_ = false;
    es_ = baselines::etkf_sqrt_analysis(es_, y, *model_);
    es_ = baselines::forecast(es_, *model_, rng_);
    return mu_from_etkf_sqrt_predictor(es_.members, floor_);
  }

 private:
  const SsmDefinition* model_;
  baselines::EnsembleState es_;
  Rng rng_;
  double floor_;
  bool first_ = true;
};

}  // namespace

const char* to_string(MuSource s) {
  switch (s) {
    case MuSource::kalman_predictor:
      return "kalman_predictor";
    case MuSource::etkf_sqrt_predictor:
      return "etkf_sqrt_predictor";
    case MuSource::transition:
      return "transition";
  }
  return "unknown";
}

ProposalMu ProposalMu::diagonal(Vector mean, Vector var, MuSource source, Eigen::Index floored) {
  require(source != MuSource::transition, "ProposalMu::diagonal: transition mu has no parameters");
  require(mean.size() > 0 && mean.size() == var.size(), "ProposalMu::diagonal: mean and variance lengths differ");
  require((var.array() > 0.0).all() && var.allFinite(), "ProposalMu::diagonal: variances must be positive");
  require(mean.allFinite(), "ProposalMu::diagonal: mean must be finite");
  ProposalMu out;
  out.source_ = source;
  out.log_det_ = var.array().log().sum();
  out.mean_ = std::move(mean);
  out.var_ = std::move(var);
  out.floored_ = floored;
  return out;
}

ProposalMu ProposalMu::dense(Vector mean, const Matrix& cov, MuSource source) {
  require(source != MuSource::transition, "ProposalMu::dense: transition mu has no parameters");
  require(cov.rows() == mean.size() && cov.cols() == mean.size(), "ProposalMu::dense: covariance must be d x d");
  ProposalMu out;
  out.source_ = source;
  out.dense_ = true;
  out.llt_.compute(cov);
  if (out.llt_.info() != Eigen::Success) throw NumericalError("ProposalMu::dense: covariance is not positive definite");
  const Matrix l = out.llt_.matrixL();
  out.log_det_ = 2.0 * l.diagonal().array().log().sum();
  out.var_ = cov.diagonal();
  out.mean_ = std::move(mean);
  return out;
}

ProposalMu ProposalMu::transition() { return ProposalMu{}; }

double ProposalMu::logpdf(const Vector& x) const {
  require(!is_transition(), "ProposalMu::logpdf: transition mu is evaluated by the filter");
  require(x.size() == mean_.size(), "ProposalMu::logpdf: dimension mismatch");
  const Vector r = x - mean_;
  const double quad = dense_ ? Vector(llt_.matrixL().solve(r)).squaredNorm()
                             : (r.array().square() / var_.array()).sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det_ + quad);
}

ProposalMu mu_from_kalman_predictor(const Vector& mean, const Matrix& cov, double variance_scale, bool diagonal) {
  require(variance_scale > 0.0, "mu_from_kalman_predictor: variance scale must be positive");
  if (diagonal) return ProposalMu::diagonal(mean, cov.diagonal() * variance_scale, MuSource::kalman_predictor);
  return ProposalMu::dense(mean, cov * variance_scale, MuSource::kalman_predictor);
}

ProposalMu mu_from_etkf_sqrt_predictor(const Matrix& forecast_members, double var_floor) {
  require(forecast_members.cols() >= 2, "mu_from_etkf_sqrt_predictor: need at least 2 members");
  require(var_floor > 0.0, "mu_from_etkf_sqrt_predictor: floor must be positive");
  const baselines::EnsembleState es{forecast_members};
  Vector var = es.variance();
  Eigen::Index floored = 0;
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    if (!(var[i] >= var_floor)) {
      var[i] = var_floor;
      ++floored;
    }
  }
  return ProposalMu::diagonal(es.mean(), std::move(var), MuSource::etkf_sqrt_predictor, floored);
}

std::unique_ptr<MuProvider> transition_mu() { return std::make_unique<TransitionProvider>(); }

std::unique_ptr<MuProvider> kalman_predictor_mu(const SsmDefinition& model, double variance_scale) {
  return std::make_unique<KalmanProvider>(model, variance_scale);
}

std::unique_ptr<MuProvider> etkf_sqrt_predictor_mu(const SsmDefinition& model, Eigen::Index members,
                                                   std::uint64_t seed, double var_floor) {
  return std::make_unique<EtkfSqrtProvider>(model, members, seed, var_floor);
}

}  // namespace lpf::lagged
