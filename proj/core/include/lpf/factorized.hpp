#pragma once

// Models whose log-densities split into a coupled head block on the first
// m coordinates plus a sum of identical scalar terms over all d coordinates:
//
//   log g(x, y)  = g~(x^{1:m}, y^{1:m}) + sum_j g-(x^j, y^j)
//   log f(x, z)  = f~(x^{1:m}, z^{1:m}) + sum_j f-(x^j, z^j)
//   log mu(x)    = mu~(x^{1:m})         + sum_j mu-(x^j)
//
// This is the family on which dimension-stability of the tempered filter is
// checked. The scalar terms receive the observation coordinate y^j.

#include "lpf/model.hpp"

#include <functional>
#include <utility>

namespace lpf {

struct FactorizedModel {
  Eigen::Index m = 0;

  std::function<double(double x, double y)> g_bar;
  std::function<double(const Vector& x_head, const Vector& y_head)> g_tilde;
  std::function<double(double x, double z)> f_bar;
  std::function<double(const Vector& x_head, const Vector& z_head)> f_tilde;
  std::function<double(double x)> mu_bar;
  std::function<double(const Vector& x_head)> mu_tilde;

  /// Compact coordinate domain E = [lower, upper]; observations range over the same set.
  double lower = -1.0;
  double upper = 1.0;
};

struct FactorizedLogpdfs {
  std::function<double(const Vector& x, const Vector& y)> log_g;
  std::function<double(const Vector& x, const Vector& z)> log_f;
  std::function<double(const Vector& x)> log_mu;
};

/// Assembles the full log-densities at dimension d. Throws ContractViolation if d < m.
FactorizedLogpdfs factorized_logpdfs(const FactorizedModel& fm, Eigen::Index d);

/// Largest absolute value of any of the six log-terms. Scalar terms are
/// evaluated on a uniform grid over E (grid_points per axis); head terms on
/// the corners of E^m plus grid_points^2 uniform draws from `rng`.
double factorized_term_bound(const FactorizedModel& fm, int grid_points, Rng& rng);

/// Linear-Gaussian member of the family, used by the dimension-stability checks.
struct GaussianFactorizedSpec {
  Eigen::Index m = 2;
  double rho = 0.9;          ///< per-coordinate autoregression
  double head_coupling = 0.05;  ///< off-diagonal of the head-block transition matrix
  double sigma = 0.5;        ///< transition noise std
  double tau = 0.5;          ///< observation noise std
  double mu_mean = 0.0;      ///< mean of the coordinatewise mu
  double mu_var = 1.0;
  double x0 = 0.0;           ///< common initial value of every coordinate
  double lower = -4.0;
  double upper = 4.0;
};

FactorizedModel make_gaussian_factorized(const GaussianFactorizedSpec& spec);

/// The same model as an SsmDefinition at dimension d (linear drift, C = I).
SsmDefinition make_gaussian_factorized_ssm(const GaussianFactorizedSpec& spec, Eigen::Index d);

}  // namespace lpf
