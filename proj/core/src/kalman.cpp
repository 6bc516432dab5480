#include "lpf/baselines.hpp"

namespace lpf::baselines {

namespace {

void check_kalman_model(const SsmDefinition& model) {
  require(model.is_linear(), "kalman filter: model has no linear_map (nonlinear drift)");
  require(model.dim_x() <= kMaxKalmanDim, "kalman filter: state dimension exceeds the dense limit");
}

}  // namespace

KalmanState kalman_predict(const KalmanState& ks, const SsmDefinition& model) {
  check_kalman_model(model);
  const Matrix& a = *model.linear_map();
  KalmanState out;
  out.mean = a * ks.mean;
  out.cov = a * ks.cov * a.transpose() + model.r1_sqrt().covariance();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

KalmanState kalman_update(const KalmanState& ks, const Vector& y, const SsmDefinition& model) {
  check_kalman_model(model);
  require(y.size() == model.dim_y(), "kalman_update: observation length must equal d_y");
  const Matrix c = model.obs().to_dense();
  const Matrix r = model.r2_sqrt().covariance();
  const Matrix pct = ks.cov * c.transpose();
  const Matrix s = c * pct + r;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("kalman_update: innovation covariance is not positive definite");
  const Matrix gain = llt.solve(pct.transpose()).transpose();
  KalmanState out;
  out.mean = ks.mean + gain * (y - c * ks.mean);
  const Matrix ikc = Matrix::Identity(ks.cov.rows(), ks.cov.cols()) - gain * c;
  out.cov = ikc * ks.cov * ikc.transpose() + gain * r * gain.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

Matrix run_kalman_filter(const SsmDefinition& model, const std::vector<Vector>& observations, int horizon) {
  check_kalman_model(model);
  require(horizon >= 0, "run_kalman_filter: horizon must be non-negative");
  const Eigen::Index d = model.dim_x();
  Matrix means(horizon + 1, d);
  KalmanState ks{model.x0(), Matrix::Zero(d, d)};
  means.row(0) = ks.mean.transpose();
  for (int t = 1; t <= horizon; ++t) {
    ks = kalman_predict(ks, model);
    const auto m = static_cast<std::size_t>(t / model.obs_frequency());
    if (model.observed_at(t) && m <= observations.size()) ks = kalman_update(ks, observations[m - 1], model);
    means.row(t) = ks.mean.transpose();
  }
  return means;
}

}  // namespace lpf::baselines
