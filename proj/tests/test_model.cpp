#include "lpf/factorized.hpp"
#include "lpf/model.hpp"
#include "lpf/models.hpp"
#include "lpf/swe.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace lpf;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

SsmDefinition scalar_model(double r1, double r2) {
  models::LinearGaussianParams p;
  p.dim = 1;
  p.r1_sqrt = r1;
  p.r2_sqrt = r2;
  p.x0 = 0.0;
  return models::make_linear_gaussian(p);
}

// log N(x; m, S) with an explicit inverse and determinant
double dense_gaussian(const Vector& x, const Vector& m, const Matrix& s) {
  const Vector r = x - m;
  const double q = r.dot(s.inverse() * r);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + std::log(s.determinant()) + q);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("transition logpdf at the mode and at unit displacement") {
  const auto m = scalar_model(1.0, 1.0);
  CHECK(transition_logpdf(m, Vector::Zero(1), Vector::Zero(1)) == doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-15));
  CHECK(transition_logpdf(m, Vector::Zero(1), Vector::Ones(1)) ==
        doctest::Approx(-0.5 * kLog2Pi - 0.5).epsilon(1e-15));
}

TEST_CASE("transition logpdf matches a dense quadratic form") {
  models::LinearGaussianParams p;
  p.dim = 2;
  p.r1_sqrt = std::sqrt(0.5);
  const auto m = models::make_linear_gaussian(p);
  const Vector xp = (Vector(2) << 1.0, 1.0).finished();
  const Vector x = (Vector(2) << 1.2, 0.9).finished();
  const double oracle = dense_gaussian(x, xp, Matrix::Identity(2, 2) * 0.5);
  CHECK(transition_logpdf(m, xp, x) == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("likelihood logpdf examples") {
  models::LinearGaussianParams p;
  p.dim = 7;
  const auto m = models::make_linear_gaussian(p);
  const Vector x = Vector::LinSpaced(7, -1.0, 2.0);
  CHECK(likelihood_logpdf(m, x, x) == doctest::Approx(-3.5 * std::log(2.0 * std::numbers::pi * 0.01)).epsilon(1e-13));

  const auto s = scalar_model(1.0, 1.0);
  CHECK(likelihood_logpdf(s, Vector::Zero(1), Vector::Constant(1, 2.0)) ==
        doctest::Approx(-0.5 * kLog2Pi - 2.0).epsilon(1e-15));
}

TEST_CASE("likelihood with the shallow-water selector matches a dense oracle") {
  models::SweModelParams p;
  p.grid.grid_points = 6;
  const auto m = models::make_swe(p);
  Rng rng = make_rng(3);
  const Vector x = standard_normal(rng, m.dim_x());
  const Vector y = standard_normal(rng, m.dim_y()) * 0.02;
  const Matrix c = m.obs().to_dense();
  const Matrix r2 = Matrix::Identity(m.dim_y(), m.dim_y()) * 1e-4;
  CHECK(likelihood_logpdf(m, x, y) == doctest::Approx(dense_gaussian(y, c * x, r2)).epsilon(1e-12));
}

TEST_CASE("diagonal and dense noise agree") {
  const Vector sd = (Vector(3) << 0.5, 1.0, 2.0).finished();
  const auto diag = NoiseSqrt::diagonal(sd);
  const auto dense = NoiseSqrt::dense(sd.asDiagonal().toDenseMatrix());
  const Vector r = (Vector(3) << 0.3, -1.0, 4.0).finished();
  CHECK(diag.mahalanobis(r) == doctest::Approx(dense.mahalanobis(r)).epsilon(1e-13));
  CHECK(diag.log_det_cov() == doctest::Approx(dense.log_det_cov()).epsilon(1e-13));
  CHECK((diag.apply(r) - dense.apply(r)).norm() < 1e-14);
  CHECK((diag.whiten(r) - dense.whiten(r)).norm() < 1e-13);
}

TEST_CASE("construction rejects invalid parameters") {
  CHECK_THROWS_AS(NoiseSqrt::scalar(2, 0.0), ContractViolation);
  CHECK_THROWS_AS(NoiseSqrt::diagonal((Vector(2) << 1.0, -1.0).finished()), ContractViolation);
  CHECK_THROWS_AS(NoiseSqrt::dense((Matrix(2, 2) << 1.0, 2.0, 2.0, 1.0).finished()), ContractViolation);
  CHECK_THROWS_AS(ObservationOperator::selector(3, {0, 3}), ContractViolation);

  SsmParams p;
  p.dim_x = 2;
  p.drift = [](int, const Vector& x) { return x; };
  p.r1_sqrt = NoiseSqrt::scalar(2, 1.0);
  p.r2_sqrt = NoiseSqrt::scalar(2, 1.0);
  p.obs = ObservationOperator::identity(2);
  p.x0 = Vector::Zero(2);
  CHECK_NOTHROW(SsmDefinition{p});
  auto bad = p;
  bad.obs_frequency = 0;
  CHECK_THROWS_AS(SsmDefinition{bad}, ContractViolation);
  bad = p;
  bad.obs = ObservationOperator::identity(3);
  CHECK_THROWS_AS(SsmDefinition{bad}, ContractViolation);
  bad = p;
  bad.r2_sqrt = NoiseSqrt::scalar(3, 1.0);
  CHECK_THROWS_AS(SsmDefinition{bad}, ContractViolation);
}

TEST_CASE("sample_transition: small noise, moments, determinism") {
  models::LinearGaussianParams p;
  p.dim = 50;
  p.r1_sqrt = 1e-6;
  const auto tiny = models::make_linear_gaussian(p);
  Rng rng = make_rng(1);
  const Vector xp = Vector::LinSpaced(50, -3.0, 3.0);
  CHECK((sample_transition(tiny, rng, xp) - xp).cwiseAbs().maxCoeff() <= 6e-6);

  const auto m = scalar_model(1.0, 1.0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_transition(m, rng, Vector::Constant(1, 0.7))[0];
  CHECK(std::abs(sum / n - 0.7) <= 4.0 / std::sqrt(static_cast<double>(n)));

  Rng a = make_rng(9);
  Rng b = make_rng(9);
  CHECK(sample_transition(m, a, Vector::Zero(1)) == sample_transition(m, b, Vector::Zero(1)));
}

TEST_CASE("sample_observation: small noise, covariance, determinism") {
  models::LinearGaussianParams p;
  p.dim = 2;
  p.r2_sqrt = 1e-6;
  const auto tiny = models::make_linear_gaussian(p);
  Rng rng = make_rng(2);
  const Vector x = (Vector(2) << 0.3, -0.4).finished();
  CHECK((sample_observation(tiny, rng, x) - x).cwiseAbs().maxCoeff() <= 6e-6);

  SsmParams q;
  q.dim_x = 2;
  q.drift = [](int, const Vector& v) { return v; };
  q.r1_sqrt = NoiseSqrt::scalar(2, 1.0);
  q.r2_sqrt = NoiseSqrt::diagonal((Vector(2) << 0.5, 2.0).finished());
  q.obs = ObservationOperator::identity(2);
  q.x0 = Vector::Zero(2);
  const SsmDefinition m(q);
  const int n = 100000;
  Matrix acc = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Vector y = sample_observation(m, rng, x) - x;
    acc += y * y.transpose();
    mean += y;
  }
  mean /= n;
  const Matrix cov = acc / n - mean * mean.transpose();
  CHECK(cov(0, 0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::abs(cov(0, 1)) < 0.05);

  Rng a = make_rng(4);
  Rng b = make_rng(4);
  CHECK(sample_observation(m, a, x) == sample_observation(m, b, x));
}

TEST_CASE("transition density integrates to one") {
  const auto m = scalar_model(0.3, 1.0);
  const double lo = -5.0, hi = 5.0;
  const int n = 20000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * std::exp(transition_logpdf(m, Vector::Constant(1, 0.2), Vector::Constant(1, lo + i * h)));
  }
  CHECK(std::abs(s * h - 1.0) < 1e-6);
}

TEST_CASE("samples score higher under their generating parameters") {
  const auto truth = scalar_model(1.0, 0.5);
  const auto wrong = scalar_model(2.0, 1.5);
  Rng rng = make_rng(5);
  double own = 0.0, other = 0.0;
  const int n = 10000;
  Vector x = Vector::Zero(1);
  for (int i = 0; i < n; ++i) {
    const Vector xn = sample_transition(truth, rng, x);
    const Vector y = sample_observation(truth, rng, xn);
    own += transition_logpdf(truth, x, xn) + likelihood_logpdf(truth, xn, y);
    other += transition_logpdf(wrong, x, xn) + likelihood_logpdf(wrong, xn, y);
    x = xn;
  }
  CHECK(own / n > other / n);
}

TEST_CASE("factorized log-densities") {
  SUBCASE("m = 0 with constant g gives d c") {
    FactorizedModel fm;
    fm.g_bar = [](double, double) { return -0.75; };
    fm.f_bar = [](double, double) { return 0.0; };
    fm.mu_bar = [](double) { return 0.0; };
    const auto lp = factorized_logpdfs(fm, 6);
    CHECK(lp.log_g(Vector::Zero(6), Vector::Ones(6)) == doctest::Approx(-4.5));
  }
  SUBCASE("m = 1, d = 3 matches a hand sum") {
    FactorizedModel fm;
    fm.m = 1;
    fm.g_bar = [](double x, double y) { return -(x - y) * (x - y); };
    fm.g_tilde = [](const Vector& x, const Vector& y) { return 0.5 * x[0] * y[0]; };
    fm.f_bar = [](double x, double z) { return -std::abs(z - 0.5 * x); };
    fm.f_tilde = [](const Vector& x, const Vector& z) { return x[0] - z[0]; };
    fm.mu_bar = [](double x) { return -x * x; };
    fm.mu_tilde = [](const Vector& x) { return 3.0 * x[0]; };
    const auto lp = factorized_logpdfs(fm, 3);
    const Vector x = (Vector(3) << 0.1, -0.2, 0.3).finished();
    const Vector y = (Vector(3) << 0.4, 0.5, -0.6).finished();
    const double g = 0.5 * 0.1 * 0.4 - (0.1 - 0.4) * (0.1 - 0.4) - (-0.2 - 0.5) * (-0.2 - 0.5) -
                     (0.3 + 0.6) * (0.3 + 0.6);
    const double f = (0.1 - 0.4) - std::abs(0.4 - 0.05) - std::abs(0.5 + 0.1) - std::abs(-0.6 - 0.15);
    const double mu = 0.3 - 0.01 - 0.04 - 0.09;
    CHECK(lp.log_g(x, y) == doctest::Approx(g).epsilon(1e-15));
    CHECK(lp.log_f(x, y) == doctest::Approx(f).epsilon(1e-15));
    CHECK(lp.log_mu(x) == doctest::Approx(mu).epsilon(1e-15));
  }
  SUBCASE("doubling d adds the new coordinate terms") {
    const auto fm = make_gaussian_factorized({});
    const auto a = factorized_logpdfs(fm, 5);
    const auto b = factorized_logpdfs(fm, 10);
    Rng rng = make_rng(6);
    const Vector x = standard_normal(rng, 10);
    const Vector y = standard_normal(rng, 10);
    double extra_g = 0.0, extra_f = 0.0, extra_mu = 0.0;
    for (int j = 5; j < 10; ++j) {
      extra_g += fm.g_bar(x[j], y[j]);
      extra_f += fm.f_bar(x[j], y[j]);
      extra_mu += fm.mu_bar(x[j]);
    }
    CHECK(b.log_g(x, y) == doctest::Approx(a.log_g(x.head(5), y.head(5)) + extra_g).epsilon(1e-14));
    CHECK(b.log_f(x, y) == doctest::Approx(a.log_f(x.head(5), y.head(5)) + extra_f).epsilon(1e-14));
    CHECK(b.log_mu(x) == doctest::Approx(a.log_mu(x.head(5)) + extra_mu).epsilon(1e-14));
  }
  SUBCASE("d < m is rejected") {
    FactorizedModel fm;
    fm.m = 3;
    CHECK_THROWS_AS(factorized_logpdfs(fm, 2), ContractViolation);
  }
}

TEST_CASE("gaussian factorized model agrees with its state-space form") {
  GaussianFactorizedSpec spec;
  const auto fm = make_gaussian_factorized(spec);
  Rng rng = make_rng(7);
  for (Eigen::Index d : {2, 3, 8, 40}) {
    const auto lp = factorized_logpdfs(fm, d);
    const auto ssm = make_gaussian_factorized_ssm(spec, d);
    for (int t = 0; t < 5; ++t) {
      const Vector x = standard_normal(rng, d);
      const Vector z = standard_normal(rng, d);
      CHECK(lp.log_g(x, z) == doctest::Approx(likelihood_logpdf(ssm, x, z)).epsilon(1e-12));
      CHECK(lp.log_f(x, z) == doctest::Approx(transition_logpdf(ssm, x, z)).epsilon(1e-12));
    }
  }
}

TEST_CASE("factorized log-terms are bounded on the domain") {
  const auto fm = make_gaussian_factorized({});
  Rng rng = make_rng(8);
  const double bound = factorized_term_bound(fm, 41, rng);
  CHECK(std::isfinite(bound));
  CHECK(bound > 0.0);
  CHECK(bound < 1e3);
}

}  // TEST_SUITE
