#include "lpf/baselines.hpp"

#include <cmath>

namespace lpf::baselines {

namespace {

// Ensemble-space quantities shared by the three analyses.
struct EnsembleSpace {
  Vector mean;
  Matrix anomalies;        // A = X - xbar, d x N
  Matrix s;                // R^{-1/2} C A / sqrt(N - 1), d_y x N
  Eigen::SelfAdjointEigenSolver<Matrix> eig;  // of I + S^T S
};

EnsembleSpace ensemble_space(const EnsembleState& es, const SsmDefinition& model) {
  require(es.size() >= 2, "ensemble analysis: need at least 2 members");
  require(es.members.rows() == model.dim_x(), "ensemble analysis: member length must equal d");
  EnsembleSpace out;
  out.mean = es.mean();
  out.anomalies = es.members.colwise() - out.mean;
  const double scale = 1.0 / std::sqrt(static_cast<double>(es.size() - 1));
  out.s = model.r2_sqrt().whiten(model.obs().apply_columns(out.anomalies)) * scale;
  const Matrix m = Matrix::Identity(es.size(), es.size()) + out.s.transpose() * out.s;
  out.eig.compute(m);
  if (out.eig.info() != Eigen::Success) throw NumericalError("ensemble analysis: eigen-decomposition failed");
  return out;
}

// (I + S^T S)^{-1} v
Vector solve_m(const EnsembleSpace& sp, const Vector& v) {
  const Matrix& c = sp.eig.eigenvectors();
  return c * (c.transpose() * v).cwiseQuotient(sp.eig.eigenvalues());
}

Vector analysis_mean(const EnsembleSpace& sp, const Vector& y, const SsmDefinition& model, Eigen::Index n) {
  require(y.size() == model.dim_y(), "ensemble analysis: observation length must equal d_y");
  const Vector innov = model.r2_sqrt().whiten(y - model.obs().apply(sp.mean));
  const Vector w = solve_m(sp, sp.s.transpose() * innov);
  return sp.mean + sp.anomalies * w / std::sqrt(static_cast<double>(n - 1));
}

}  // namespace

Vector EnsembleState::variance() const {
  require(size() >= 2, "EnsembleState::variance: need at least 2 members");
  const Matrix a = members.colwise() - mean();
  return a.rowwise().squaredNorm() / static_cast<double>(size() - 1);
}

EnsembleState ensemble_at(const Vector& x, Eigen::Index members) {
  require(members >= 1, "ensemble_at: need at least one member");
  return EnsembleState{x.replicate(1, members)};
}

EnsembleState forecast(const EnsembleState& es, const SsmDefinition& model, Rng& rng, int n) {
  EnsembleState out{Matrix(es.members.rows(), es.members.cols())};
  for (Eigen::Index i = 0; i < es.size(); ++i) {
    out.members.col(i) = sample_transition(model, rng, es.members.col(i), n);
  }
  return out;
}

EnsembleState enkf_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model, Rng& rng) {
  const EnsembleSpace sp = ensemble_space(es, model);
  require(y.size() == model.dim_y(), "enkf_analysis: observation length must equal d_y");
  const double scale = 1.0 / std::sqrt(static_cast<double>(es.size() - 1));
  EnsembleState out = es;
  for (Eigen::Index i = 0; i < es.size(); ++i) {
    const Vector yi = y + model.r2_sqrt().apply(standard_normal(rng, model.dim_y()));
    const Vector innov = model.r2_sqrt().whiten(yi - model.obs().apply(es.members.col(i)));
    out.members.col(i) += sp.anomalies * solve_m(sp, sp.s.transpose() * innov) * scale;
  }
  return out;
}

EnsembleState etkf_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model) {
  const EnsembleSpace sp = ensemble_space(es, model);
  const Eigen::Index n = es.size();
  const Vector xa = analysis_mean(sp, y, model, n);

  // Orthonormal basis Q = [1/sqrt(N), Qc]; the transform acts as a Cholesky
  // factor of (I + S^T S)^{-1} restricted to the complement of the ones vector,
  // so T 1 = 1 and the analysis ensemble keeps the analysis mean.
  Eigen::HouseholderQR<Matrix> qr(Matrix::Ones(n, 1));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix qc = q.rightCols(n - 1);
  const Matrix& c = sp.eig.eigenvectors();
  const Matrix minv = c * sp.eig.eigenvalues().cwiseInverse().asDiagonal() * c.transpose();
  const Matrix reduced = qc.transpose() * minv * qc;
  Eigen::LLT<Matrix> llt(reduced);
  if (llt.info() != Eigen::Success) throw NumericalError("etkf_analysis: transform factorization failed");
  const Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Matrix t = v * v.transpose() + qc * Matrix(llt.matrixL()) * qc.transpose();

  return EnsembleState{(sp.anomalies * t).colwise() + xa};
}

EnsembleState etkf_sqrt_analysis(const EnsembleState& es, const Vector& y, const SsmDefinition& model) {
  const EnsembleSpace sp = ensemble_space(es, model);
  const Vector xa = analysis_mean(sp, y, model, es.size());
  const Matrix& c = sp.eig.eigenvectors();
  const Matrix t = c * sp.eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * c.transpose();
  return EnsembleState{(sp.anomalies * t).colwise() + xa};
}

EnsembleState ensemble_step(EnsembleKind kind, const EnsembleState& es, const Vector* y,
                            const SsmDefinition& model, Rng& rng, int n) {
  EnsembleState f = forecast(es, model, rng, n);
  if (y == nullptr) return f;
  switch (kind) {
    case EnsembleKind::enkf:
      return enkf_analysis(f, *y, model, rng);
    case EnsembleKind::etkf:
      return etkf_analysis(f, *y, model);
    case EnsembleKind::etkf_sqrt:
      return etkf_sqrt_analysis(f, *y, model);
  }
  return f;
}

Matrix run_ensemble_filter(EnsembleKind kind, const SsmDefinition& model,
                           const std::vector<Vector>& observations, int horizon,
                           Eigen::Index members, Rng& rng) {
  require(members >= 2, "run_ensemble_filter: need at least 2 members");
  require(horizon >= 0, "run_ensemble_filter: horizon must be non-negative");
  Matrix means(horizon + 1, model.dim_x());
  EnsembleState es = ensemble_at(model.x0(), members);
  means.row(0) = es.mean().transpose();
  for (int t = 1; t <= horizon; ++t) {
    const auto m = static_cast<std::size_t>(t / model.obs_frequency());
    const bool observe = model.observed_at(t) && m <= observations.size();
    es = ensemble_step(kind, es, observe ? &observations[m - 1] : nullptr, model, rng, t);
    means.row(t) = es.mean().transpose();
  }
  return means;
}

}  // namespace lpf::baselines
