#include "lpf/model.hpp"

#include <cmath>
#include <sstream>

namespace lpf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": expected length " << want << ", got " << got;
    throw ContractViolation(os.str());
  }
}

}  // namespace

NoiseSqrt NoiseSqrt::scalar(Eigen::Index dim, double s) {
  require(dim > 0, "NoiseSqrt::scalar: dimension must be positive");
  require(s > 0.0 && std::isfinite(s), "NoiseSqrt::scalar: scale must be positive");
  NoiseSqrt out = diagonal(Vector::Constant(dim, s));
  out.kind_ = Kind::scalar;
  return out;
}

NoiseSqrt NoiseSqrt::diagonal(Vector sqrt_diag) {
  require(sqrt_diag.size() > 0, "NoiseSqrt::diagonal: empty");
  require((sqrt_diag.array() > 0.0).all() && sqrt_diag.allFinite(),
          "NoiseSqrt::diagonal: entries must be strictly positive");
  NoiseSqrt out;
  out.kind_ = Kind::diagonal;
  out.dim_ = sqrt_diag.size();
  out.inv_var_ = sqrt_diag.array().square().inverse();
  out.log_det_cov_ = 2.0 * sqrt_diag.array().log().sum();
  out.sqrt_diag_ = std::move(sqrt_diag);
  return out;
}

NoiseSqrt NoiseSqrt::dense(Matrix sqrt_cov) {
  require(sqrt_cov.rows() == sqrt_cov.cols() && sqrt_cov.rows() > 0,
          "NoiseSqrt::dense: matrix must be square");
  require((sqrt_cov - sqrt_cov.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * (1.0 + sqrt_cov.cwiseAbs().maxCoeff()),
          "NoiseSqrt::dense: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sqrt_cov, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() > 0.0, "NoiseSqrt::dense: matrix must be positive definite");
  NoiseSqrt out;
  out.kind_ = Kind::dense;
  out.dim_ = sqrt_cov.rows();
  const Matrix cov = sqrt_cov * sqrt_cov;
  out.cov_llt_.compute(cov);
  if (out.cov_llt_.info() != Eigen::Success) throw NumericalError("NoiseSqrt::dense: Cholesky failed");
  const Matrix l = out.cov_llt_.matrixL();
  out.log_det_cov_ = 2.0 * l.diagonal().array().log().sum();
  out.sqrt_cov_ = std::move(sqrt_cov);
  return out;
}

Vector NoiseSqrt::apply(const Vector& z) const {
  check_dim(z.size(), dim_, "NoiseSqrt::apply");
  if (kind_ == Kind::dense) return sqrt_cov_ * z;
  return sqrt_diag_.cwiseProduct(z);
}

double NoiseSqrt::mahalanobis(const Vector& r) const {
  check_dim(r.size(), dim_, "NoiseSqrt::mahalanobis");
  if (kind_ == Kind::dense) {
    const Vector w = cov_llt_.matrixL().solve(r);
    return w.squaredNorm();
  }
  return (r.array().square() * inv_var_.array()).sum();
}

Vector NoiseSqrt::cov_diagonal() const {
  if (kind_ == Kind::dense) return (sqrt_cov_ * sqrt_cov_).diagonal();
  return sqrt_diag_.array().square();
}

Matrix NoiseSqrt::covariance() const {
  if (kind_ == Kind::dense) return sqrt_cov_ * sqrt_cov_;
  return cov_diagonal().asDiagonal();
}

Vector NoiseSqrt::inv_sqrt_diagonal() const {
  require(kind_ != Kind::dense, "NoiseSqrt::inv_sqrt_diagonal: dense noise has no diagonal root");
  return sqrt_diag_.cwiseInverse();
}

Matrix NoiseSqrt::whiten(const Matrix& m) const {
  require(m.rows() == dim_, "NoiseSqrt::whiten: row count must equal the noise dimension");
  if (kind_ == Kind::dense) return cov_llt_.matrixL().solve(m);
  return sqrt_diag_.cwiseInverse().asDiagonal() * m;
}

ObservationOperator ObservationOperator::identity(Eigen::Index dim) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) idx[static_cast<std::size_t>(i)] = i;
  return selector(dim, std::move(idx));
}

ObservationOperator ObservationOperator::dense(Matrix c) {
  require(c.rows() > 0 && c.cols() > 0, "ObservationOperator::dense: empty matrix");
  ObservationOperator out;
  out.rows_ = c.rows();
  out.cols_ = c.cols();
  out.dense_ = std::move(c);
  return out;
}

ObservationOperator ObservationOperator::selector(Eigen::Index dim_x,
                                                  std::vector<Eigen::Index> indices) {
  require(dim_x > 0 && !indices.empty(), "ObservationOperator::selector: empty operator");
  for (auto i : indices) require(i >= 0 && i < dim_x, "ObservationOperator::selector: index out of range");
  ObservationOperator out;
  out.rows_ = static_cast<Eigen::Index>(indices.size());
  out.cols_ = dim_x;
  out.indices_ = std::move(indices);
  return out;
}

Vector ObservationOperator::apply(const Vector& x) const {
  check_dim(x.size(), cols_, "ObservationOperator::apply");
  if (dense_) return *dense_ * x;
  Vector y(rows_);
  for (Eigen::Index r = 0; r < rows_; ++r) y[r] = x[indices_[static_cast<std::size_t>(r)]];
  return y;
}

Matrix ObservationOperator::apply_columns(const Matrix& xs) const {
  check_dim(xs.rows(), cols_, "ObservationOperator::apply_columns");
  if (dense_) return *dense_ * xs;
  Matrix ys(rows_, xs.cols());
  for (Eigen::Index r = 0; r < rows_; ++r) ys.row(r) = xs.row(indices_[static_cast<std::size_t>(r)]);
  return ys;
}

Matrix ObservationOperator::to_dense() const {
  if (dense_) return *dense_;
  Matrix c = Matrix::Zero(rows_, cols_);
  for (Eigen::Index r = 0; r < rows_; ++r) c(r, indices_[static_cast<std::size_t>(r)]) = 1.0;
  return c;
}

SsmDefinition::SsmDefinition(SsmParams params) : p_(std::move(params)) {
  require(p_.dim_x > 0, "SsmDefinition: dim_x must be positive");
  require(static_cast<bool>(p_.drift), "SsmDefinition: drift is required");
  require(p_.r1_sqrt.dim() == p_.dim_x, "SsmDefinition: r1_sqrt must be d x d");
  require(p_.obs.cols() == p_.dim_x, "SsmDefinition: obs_matrix must have d columns");
  require(p_.r2_sqrt.dim() == p_.obs.rows(), "SsmDefinition: r2_sqrt must be d_y x d_y");
  require(p_.obs_frequency >= 1, "SsmDefinition: obs_frequency must be >= 1");
  require(p_.x0.size() == p_.dim_x, "SsmDefinition: x0 must have length d");
  if (p_.linear_map) {
    require(p_.linear_map->rows() == p_.dim_x && p_.linear_map->cols() == p_.dim_x,
            "SsmDefinition: linear_map must be d x d");
  }
}

double transition_logpdf_from_mean(const SsmDefinition& model, const Vector& mean, const Vector& x) {
  check_dim(x.size(), model.dim_x(), "transition_logpdf");
  const double d = static_cast<double>(model.dim_x());
  return -0.5 * (d * kLog2Pi + model.r1_sqrt().log_det_cov() +
                 model.r1_sqrt().mahalanobis(x - mean));
}

double transition_logpdf(const SsmDefinition& model, const Vector& x_prev, const Vector& x, int n) {
  check_dim(x_prev.size(), model.dim_x(), "transition_logpdf");
  check_dim(x.size(), model.dim_x(), "transition_logpdf");
  return transition_logpdf_from_mean(model, model.drift(n, x_prev), x);
}

double likelihood_logpdf(const SsmDefinition& model, const Vector& x, const Vector& y) {
  check_dim(x.size(), model.dim_x(), "likelihood_logpdf");
  check_dim(y.size(), model.dim_y(), "likelihood_logpdf");
  const double dy = static_cast<double>(model.dim_y());
  return -0.5 * (dy * kLog2Pi + model.r2_sqrt().log_det_cov() +
                 model.r2_sqrt().mahalanobis(y - model.obs().apply(x)));
}

Vector sample_transition(const SsmDefinition& model, Rng& rng, const Vector& x_prev, int n) {
  check_dim(x_prev.size(), model.dim_x(), "sample_transition");
  return model.drift(n, x_prev) + model.r1_sqrt().apply(standard_normal(rng, model.dim_x()));
}

Vector sample_observation(const SsmDefinition& model, Rng& rng, const Vector& x) {
  check_dim(x.size(), model.dim_x(), "sample_observation");
  return model.obs().apply(x) + model.r2_sqrt().apply(standard_normal(rng, model.dim_y()));
}

double diag_gaussian_logpdf(const Vector& x, const Vector& mean, const Vector& var) {
  check_dim(x.size(), mean.size(), "diag_gaussian_logpdf");
  check_dim(var.size(), mean.size(), "diag_gaussian_logpdf");
  const auto r = (x - mean).array();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + var.array().log().sum() +
                 (r.square() / var.array()).sum());
}

}  // namespace lpf
