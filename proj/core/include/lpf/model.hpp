#pragma once

// State-space model contract shared by every filter:
//
//   X_n = q_n(X_{n-1}) + R1^{1/2} W_n,        W_n ~ N(0, I_d)
//   Y_m = C X_{m k} + R2^{1/2} V_m,           V_m ~ N(0, I_dy)
//
// with observations only at model times that are multiples of the
// observation frequency k. All densities are returned in log space and
// include their normalizing constants.

#include "lpf/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lpf {

/// Square root of a Gaussian noise covariance. Scalar and diagonal forms
/// cost O(d); the dense form is accepted but factorized once and is O(d^2)
/// per evaluation.
class NoiseSqrt {
 public:
  enum class Kind { scalar, diagonal, dense };

  static NoiseSqrt scalar(Eigen::Index dim, double s);
  static NoiseSqrt diagonal(Vector sqrt_diag);
  /// `sqrt_cov` must be symmetric positive definite; the covariance is sqrt_cov^2.
  static NoiseSqrt dense(Matrix sqrt_cov);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  /// R^{1/2} z
  Vector apply(const Vector& z) const;
  /// r^T R^{-1} r
  double mahalanobis(const Vector& r) const;
  double log_det_cov() const { return log_det_cov_; }
  /// Diagonal of R.
  Vector cov_diagonal() const;
  Matrix covariance() const;
  /// Diagonal of R^{-1/2}; only for scalar/diagonal kinds.
  Vector inv_sqrt_diagonal() const;
  /// L^{-1} M for R = L L^T (row scaling for the diagonal kinds).
  Matrix whiten(const Matrix& m) const;

 private:
  NoiseSqrt() = default;

  Kind kind_ = Kind::scalar;
  Eigen::Index dim_ = 0;
  Vector sqrt_diag_;
  Vector inv_var_;
  Matrix sqrt_cov_;
  Eigen::LLT<Matrix> cov_llt_;
  double log_det_cov_ = 0.0;
};

/// Linear observation operator C. Either a dense matrix or a row selector
/// (every row of C is a unit vector), which is the structure of all the
/// experiment models.
class ObservationOperator {
 public:
  static ObservationOperator identity(Eigen::Index dim);
  static ObservationOperator dense(Matrix c);
  /// Row r of C is e_{indices[r]} (0-based).
  static ObservationOperator selector(Eigen::Index dim_x, std::vector<Eigen::Index> indices);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_selector() const { return !dense_.has_value(); }
  const std::vector<Eigen::Index>& indices() const { return indices_; }

  Vector apply(const Vector& x) const;
  /// Applies C to every column of `xs`.
  Matrix apply_columns(const Matrix& xs) const;
  Matrix to_dense() const;

 private:
  ObservationOperator() = default;

  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Eigen::Index> indices_;
  std::optional<Matrix> dense_;
};

/// q_n. The first argument is the model step index n >= 1.
using Drift = std::function<Vector(int, const Vector&)>;

struct SsmParams {
  std::string name;
  Eigen::Index dim_x = 0;
  Drift drift;
  /// Present when q_n(x) = A x; needed by the exact Kalman filter.
  std::optional<Matrix> linear_map;
  NoiseSqrt r1_sqrt = NoiseSqrt::scalar(1, 1.0);
  NoiseSqrt r2_sqrt = NoiseSqrt::scalar(1, 1.0);
  ObservationOperator obs = ObservationOperator::identity(1);
  int obs_frequency = 1;
  Vector x0;
};

/// Immutable after construction; safe to share across threads.
class SsmDefinition {
 public:
  explicit SsmDefinition(SsmParams params);

  const std::string& name() const { return p_.name; }
  Eigen::Index dim_x() const { return p_.dim_x; }
  Eigen::Index dim_y() const { return p_.obs.rows(); }
  int obs_frequency() const { return p_.obs_frequency; }
  const Vector& x0() const { return p_.x0; }
  const NoiseSqrt& r1_sqrt() const { return p_.r1_sqrt; }
  const NoiseSqrt& r2_sqrt() const { return p_.r2_sqrt; }
  const ObservationOperator& obs() const { return p_.obs; }
  const std::optional<Matrix>& linear_map() const { return p_.linear_map; }
  bool is_linear() const { return p_.linear_map.has_value(); }

  Vector drift(int n, const Vector& x) const { return p_.drift(n, x); }
  bool observed_at(int n) const { return n > 0 && n % p_.obs_frequency == 0; }

 private:
  SsmParams p_;
};

/// log N(x; q_n(x_prev), R1). `n` is the step index passed to q_n.
double transition_logpdf(const SsmDefinition& model, const Vector& x_prev, const Vector& x,
                         int n = 1);
/// Same density with q_n(x_prev) already evaluated.
double transition_logpdf_from_mean(const SsmDefinition& model, const Vector& mean,
                                   const Vector& x);
/// log N(y; C x, R2).
double likelihood_logpdf(const SsmDefinition& model, const Vector& x, const Vector& y);

Vector sample_transition(const SsmDefinition& model, Rng& rng, const Vector& x_prev, int n = 1);
Vector sample_observation(const SsmDefinition& model, Rng& rng, const Vector& x);

/// log of a Gaussian density with diagonal covariance `var`.
double diag_gaussian_logpdf(const Vector& x, const Vector& mean, const Vector& var);

}  // namespace lpf
