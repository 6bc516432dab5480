#include "lpf/factorized.hpp"

#include <algorithm>
#include <cmath>

namespace lpf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

Matrix head_matrix(const GaussianFactorizedSpec& s) {
  Matrix a = Matrix::Constant(s.m, s.m, s.head_coupling);
  a.diagonal().setConstant(s.rho);
  return a;
}

}  // namespace

FactorizedLogpdfs factorized_logpdfs(const FactorizedModel& fm, Eigen::Index d) {
  require(d >= fm.m, "factorized_logpdfs: d must be >= m");
  require(d >= 1, "factorized_logpdfs: d must be positive");
  const Eigen::Index m = fm.m;
  FactorizedLogpdfs out;
  out.log_g = [fm, d, m](const Vector& x, const Vector& y) {
    require(x.size() == d && y.size() == d, "factorized log g: dimension mismatch");
    double s = m > 0 ? fm.g_tilde(x.head(m), y.head(m)) : 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += fm.g_bar(x[j], y[j]);
    return s;
  };
  out.log_f = [fm, d, m](const Vector& x, const Vector& z) {
    require(x.size() == d && z.size() == d, "factorized log f: dimension mismatch");
    double s = m > 0 ? fm.f_tilde(x.head(m), z.head(m)) : 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += fm.f_bar(x[j], z[j]);
    return s;
  };
  out.log_mu = [fm, d, m](const Vector& x) {
    require(x.size() == d, "factorized log mu: dimension mismatch");
    double s = m > 0 ? fm.mu_tilde(x.head(m)) : 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += fm.mu_bar(x[j]);
    return s;
  };
  return out;
}

double factorized_term_bound(const FactorizedModel& fm, int grid_points, Rng& rng) {
  require(grid_points >= 2, "factorized_term_bound: need at least 2 grid points");
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    grid[static_cast<std::size_t>(i)] = fm.lower + (fm.upper - fm.lower) * i / (grid_points - 1);
  }
  double bound = 0.0;
  auto track = [&bound](double v) { bound = std::max(bound, std::abs(v)); };
  for (double a : grid) {
    track(fm.mu_bar(a));
    for (double b : grid) {
      track(fm.g_bar(a, b));
      track(fm.f_bar(a, b));
    }
  }
  if (fm.m == 0) return bound;

  std::uniform_real_distribution<double> unif(fm.lower, fm.upper);
  const int samples = grid_points * grid_points;
  for (int s = 0; s < samples; ++s) {
    Vector a(fm.m), b(fm.m);
    for (Eigen::Index j = 0; j < fm.m; ++j) {
      a[j] = unif(rng);
      b[j] = unif(rng);
    }
    track(fm.g_tilde(a, b));
    track(fm.f_tilde(a, b));
    track(fm.mu_tilde(a));
  }
  // corners of E^m carry the extremes of the quadratic head terms
  const Eigen::Index corners = Eigen::Index{1} << std::min<Eigen::Index>(fm.m, 10);
  for (Eigen::Index c = 0; c < corners; ++c) {
    for (Eigen::Index c2 = 0; c2 < corners; ++c2) {
      Vector a(fm.m), b(fm.m);
      for (Eigen::Index j = 0; j < fm.m; ++j) {
        a[j] = ((c >> j) & 1) ? fm.upper : fm.lower;
        b[j] = ((c2 >> j) & 1) ? fm.upper : fm.lower;
      }
      track(fm.g_tilde(a, b));
      track(fm.f_tilde(a, b));
      track(fm.mu_tilde(a));
    }
  }
  return bound;
}

FactorizedModel make_gaussian_factorized(const GaussianFactorizedSpec& spec) {
  require(spec.m >= 0, "make_gaussian_factorized: m must be >= 0");
  require(spec.sigma > 0.0 && spec.tau > 0.0 && spec.mu_var > 0.0,
          "make_gaussian_factorized: scales must be positive");
  FactorizedModel fm;
  fm.m = spec.m;
  fm.lower = spec.lower;
  fm.upper = spec.upper;
  const double s2 = spec.sigma * spec.sigma;
  const double t2 = spec.tau * spec.tau;
  const double rho = spec.rho;
  fm.g_bar = [t2](double x, double y) { return normal_logpdf(y, x, t2); };
  fm.g_tilde = [](const Vector&, const Vector&) { return 0.0; };
  fm.f_bar = [rho, s2](double x, double z) { return normal_logpdf(z, rho * x, s2); };
  const Matrix a = head_matrix(spec);
  // head correction: exact head-block Gaussian minus the coordinatewise terms already counted
  fm.f_tilde = [a, rho, s2](const Vector& xh, const Vector& zh) {
    return -0.5 * ((zh - a * xh).squaredNorm() - (zh - rho * xh).squaredNorm()) / s2;
  };
  const double mm = spec.mu_mean;
  const double mv = spec.mu_var;
  fm.mu_bar = [mm, mv](double x) { return normal_logpdf(x, mm, mv); };
  fm.mu_tilde = [](const Vector&) { return 0.0; };
  return fm;
}

SsmDefinition make_gaussian_factorized_ssm(const GaussianFactorizedSpec& spec, Eigen::Index d) {
  require(d >= spec.m && d >= 1, "make_gaussian_factorized_ssm: d must be >= max(m, 1)");
  Matrix a = Matrix::Identity(d, d) * spec.rho;
  if (spec.m > 0) a.topLeftCorner(spec.m, spec.m) = head_matrix(spec);
  SsmParams p;
  p.name = "factorized-gaussian";
  p.dim_x = d;
  p.drift = [a](int, const Vector& x) -> Vector { return a * x; };
  p.linear_map = a;
  p.r1_sqrt = NoiseSqrt::scalar(d, spec.sigma);
  p.r2_sqrt = NoiseSqrt::scalar(d, spec.tau);
  p.obs = ObservationOperator::identity(d);
  p.obs_frequency = 1;
  p.x0 = Vector::Constant(d, spec.x0);
  return SsmDefinition(std::move(p));
}

}  // namespace lpf
