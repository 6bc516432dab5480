#pragma once

// Reference filters sharing the SsmDefinition contract: the exact Kalman
// filter (linear models only) and three ensemble Kalman variants. None of the
// ensemble filters uses inflation or localization.

#include "lpf/model.hpp"

#include <vector>

namespace lpf::baselines {

/// Largest state dimension the dense Kalman filter accepts.
inline constexpr Eigen::Index kMaxKalmanDim = 2000;

struct KalmanState {
  Vector mean;
  Matrix cov;
};

/// mean' = A mean, cov' = A cov A^T + R1. Throws ContractViolation for a nonlinear model.
KalmanState kalman_predict(const KalmanState& ks, const SsmDefinition& model);

/// Gain form with Joseph-stabilized covariance. Throws NumericalError if the
/// innovation covariance is not positive definite.
KalmanState kalman_update(const KalmanState& ks, const Vector& y, const SsmDefinition& model);

/// Posterior means for model times 0..T; observations[m-1] is observed at time m k.
/// Row t of the result is the filter mean at time t (the predictive mean at unobserved times).
Matrix run_kalman_filter(const SsmDefinition& model, const std::vector<Vector>& observations, int horizon);

/// N_e members stored as the columns of a d x N_e matrix.
struct EnsembleState {
  Matrix members;

  Eigen::Index size() const { return members.cols(); }
  Vector mean() const { return members.rowwise().mean(); }
  /// Unbiased per-coordinate variance (divisor N_e - 1).
  Vector variance() const;
};

EnsembleState ensemble_at(const Vector& x, Eigen::Index members);

/// Pushes every member through sample_transition.
EnsembleState forecast(const EnsembleState& es, const SsmDefinition& model, Rng& rng, int n = 1);

/// Stochastic analysis with perturbed observations.
EnsembleState enkf_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model, Rng& rng);
/// Deterministic transform analysis with a mean-preserving triangular square root.
EnsembleState etkf_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model);
/// Deterministic transform analysis with the symmetric square root.
EnsembleState etkf_sqrt_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model);

enum class EnsembleKind { enkf, etkf, etkf_sqrt };

/// One forecast step followed by an analysis when `y` is non-null.
EnsembleState ensemble_step(EnsembleKind kind, const EnsembleState& es, const Vector* y,
                            const SsmDefinition& model, Rng& rng, int n = 1);

inline EnsembleState enkf_step(const EnsembleState& es, const Vector* y, const SsmDefinition& model, Rng& rng) {
  return ensemble_step(EnsembleKind::enkf, es, y, model, rng);
}
inline EnsembleState etkf_step(const EnsembleState& es, const Vector* y, const SsmDefinition& model, Rng& rng) {
  return ensemble_step(EnsembleKind::etkf, es, y, model, rng);
}
inline EnsembleState etkf_sqrt_step(const EnsembleState& es, const Vector* y, const SsmDefinition& model, Rng& rng) {
  return ensemble_step(EnsembleKind::etkf_sqrt, es, y, model, rng);
}

/// Ensemble means for model times 0..T, starting from N_e copies of x0.
Matrix run_ensemble_filter(EnsembleKind kind, const SsmDefinition& model,
                           const std::vector<Vector>& observations, int horizon,
                           Eigen::Index members, Rng& rng);

}  // namespace lpf::baselines
