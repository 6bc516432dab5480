#include "lpf/baselines.hpp"
#include "lpf/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace lpf;
using namespace lpf::baselines;

namespace {

SsmDefinition linear_model(const Matrix& a, double r1, double r2, const Matrix* c = nullptr) {
  const Eigen::Index d = a.rows();
  SsmParams p;
  p.dim_x = d;
  p.drift = [a](int, const Vector& x) -> Vector { return a * x; };
  p.linear_map = a;
  p.r1_sqrt = NoiseSqrt::scalar(d, r1);
  p.obs = c ? ObservationOperator::dense(*c) : ObservationOperator::identity(d);
  p.r2_sqrt = NoiseSqrt::scalar(p.obs.rows(), r2);
  p.x0 = Vector::Zero(d);
  return SsmDefinition(std::move(p));
}

EnsembleState draw(const Vector& mean, const Matrix& cov, Eigen::Index ne, Rng& rng) {
  const Matrix l = cov.llt().matrixL();
  EnsembleState es{Matrix(mean.size(), ne)};
  for (Eigen::Index j = 0; j < ne; ++j) es.members.col(j) = mean + l * standard_normal(rng, mean.size());
  return es;
}

Matrix sample_cov(const EnsembleState& es) {
  const Matrix a = es.members.colwise() - es.mean();
  return a * a.transpose() / static_cast<double>(es.size() - 1);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("kalman predict examples") {
  const auto m = linear_model(Matrix::Identity(3, 3), std::sqrt(0.5), 1.0);
  const KalmanState z{Vector::Ones(3), Matrix::Zero(3, 3)};
  const auto p = kalman_predict(z, m);
  CHECK((p.cov - 0.5 * Matrix::Identity(3, 3)).norm() < 1e-15);
  CHECK(p.mean == Vector::Ones(3));

  const auto s = linear_model(Matrix::Identity(1, 1), 0.4, 1.0);
  KalmanState k{Vector::Zero(1), Matrix::Constant(1, 1, 0.3)};
  for (int i = 0; i < 3; ++i) k = kalman_predict(k, s);
  CHECK(k.cov(0, 0) == doctest::Approx(0.3 + 3 * 0.16).epsilon(1e-14));
}

TEST_CASE("kalman predict matches sampled transitions") {
  const Matrix a = (Matrix(2, 2) << 0.9, -0.4, 0.3, 1.1).finished();
  const auto m = linear_model(a, 0.5, 1.0);
  const KalmanState ks{(Vector(2) << 1.0, -2.0).finished(), (Matrix(2, 2) << 1.0, 0.3, 0.3, 0.6).finished()};
  const auto pred = kalman_predict(ks, m);
  Rng rng = make_rng(1);
  auto es = draw(ks.mean, ks.cov, 100000, rng);
  es = forecast(es, m, rng);
  const Matrix cov = sample_cov(es);
  for (int i = 0; i < 2; ++i) {
    CHECK(cov(i, i) == doctest::Approx(pred.cov(i, i)).epsilon(0.05));
    CHECK(std::abs(es.mean()[i] - pred.mean[i]) < 0.02);
  }
  CHECK(std::abs(cov(0, 1) - pred.cov(0, 1)) <= 0.05 * std::sqrt(pred.cov(0, 0) * pred.cov(1, 1)));
}

TEST_CASE("kalman update examples") {
  const auto vague = linear_model(Matrix::Identity(2, 2), 1.0, 1e8);
  const KalmanState prior{(Vector(2) << 0.5, 1.0).finished(), (Matrix(2, 2) << 2.0, 0.4, 0.4, 1.0).finished()};
  const auto post = kalman_update(prior, Vector::Constant(2, 7.0), vague);
  CHECK((post.mean - prior.mean).norm() < 1e-6);
  CHECK((post.cov - prior.cov).norm() < 1e-6);

  const auto s = linear_model(Matrix::Identity(1, 1), 1.0, 0.5);
  const double p0 = 2.0, m0 = 1.0, y = 3.0, r = 0.25;
  const auto c = kalman_update({Vector::Constant(1, m0), Matrix::Constant(1, 1, p0)}, Vector::Constant(1, y), s);
  const double pv = 1.0 / (1.0 / p0 + 1.0 / r);
  CHECK(c.cov(0, 0) == doctest::Approx(pv).epsilon(1e-14));
  CHECK(c.mean[0] == doctest::Approx(pv * (m0 / p0 + y / r)).epsilon(1e-14));

  const auto m = linear_model(Matrix::Identity(2, 2), 1.0, 0.7);
  const auto q = kalman_update(prior, Vector::Zero(2), m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(prior.cov - q.cov);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("kalman contracts") {
  CHECK_THROWS_AS(kalman_predict({Vector::Zero(40), Matrix::Zero(40, 40)}, models::make_lorenz96({})),
                  ContractViolation);
  models::LinearGaussianParams big;
  big.dim = kMaxKalmanDim + 1;
  const auto m = models::make_linear_gaussian(big);
  CHECK_THROWS_AS(run_kalman_filter(m, {}, 1), ContractViolation);
}

TEST_CASE("run_kalman_filter matches a scalar recursion") {
  models::LinearGaussianParams p;
  p.dim = 1;
  p.r1_sqrt = 0.6;
  p.r2_sqrt = 0.3;
  p.x0 = 1.0;
  p.obs_frequency = 2;
  const auto m = models::make_linear_gaussian(p);
  const std::vector<Vector> obs{Vector::Constant(1, 1.4), Vector::Constant(1, 0.2)};
  const Matrix out = run_kalman_filter(m, obs, 5);
  double mean = 1.0, var = 0.0;
  std::vector<double> expect{1.0};
  for (int t = 1; t <= 5; ++t) {
    var += 0.36;
    if (t % 2 == 0) {
      const double k = var / (var + 0.09);
      mean += k * (obs[static_cast<std::size_t>(t / 2 - 1)][0] - mean);
      var *= 1 - k;
    }
    expect.push_back(mean);
  }
  for (int t = 0; t <= 5; ++t) CHECK(out(t, 0) == doctest::Approx(expect[static_cast<std::size_t>(t)]).epsilon(1e-14));
}

TEST_CASE("ensemble analyses agree with the Kalman filter at large ensembles") {
  const Matrix a = (Matrix(3, 3) << 0.9, 0.1, 0.0, 0.0, 0.8, 0.2, 0.1, 0.0, 0.7).finished();
  const Matrix c = (Matrix(2, 3) << 1.0, 0.0, 0.0, 0.0, 1.0, 1.0).finished();
  const auto m = linear_model(a, 0.5, 0.4, &c);
  const KalmanState prior{(Vector(3) << 1.0, 0.0, -1.0).finished(), Matrix::Identity(3, 3) * 0.8};
  const Vector y = (Vector(2) << 1.5, -0.7).finished();
  const auto kf = kalman_update(kalman_predict(prior, m), y, m);
  const auto pf = kalman_predict(prior, m);
  for (auto kind : {EnsembleKind::enkf, EnsembleKind::etkf, EnsembleKind::etkf_sqrt}) {
    Rng rng = make_rng(2, static_cast<std::uint64_t>(kind));
    const Eigen::Index ne = 2000;
    const auto es = ensemble_step(kind, draw(prior.mean, prior.cov, ne, rng), &y, m, rng);
    const Vector se = (pf.cov.diagonal() / static_cast<double>(ne)).cwiseSqrt();
    for (int i = 0; i < 3; ++i) CHECK(std::abs(es.mean()[i] - kf.mean[i]) <= 3.0 * se[i]);
    CHECK((sample_cov(es) - kf.cov).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("uninformative observations leave the forecast unchanged") {
  const auto m = linear_model(Matrix::Identity(4, 4), 0.3, 1e9);
  Rng rng = make_rng(3);
  const auto fc = draw(Vector::Zero(4), Matrix::Identity(4, 4), 12, rng);
  const Vector y = Vector::Constant(4, 5.0);
  CHECK((etkf_analysis(fc, y, m).members - fc.members).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((etkf_sqrt_analysis(fc, y, m).members - fc.members).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((enkf_analysis(fc, y, m, rng).members - fc.members).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("transform analyses equal the Kalman update with the ensemble covariance") {
  const Matrix c = (Matrix(2, 3) << 1.0, 0.5, 0.0, 0.0, 1.0, -1.0).finished();
  const auto m = linear_model(Matrix::Identity(3, 3), 1.0, 0.6, &c);
  Rng rng = make_rng(4);
  for (Eigen::Index ne : {3, 5, 40}) {
    const auto fc = draw((Vector(3) << 0.2, -0.1, 0.4).finished(), Matrix::Identity(3, 3), ne, rng);
    const Vector y = (Vector(2) << 0.3, 0.9).finished();
    // exact update restricted to the ensemble span
    const KalmanState oracle = kalman_update({fc.mean(), sample_cov(fc)}, y, m);
    for (const auto& an : {etkf_analysis(fc, y, m), etkf_sqrt_analysis(fc, y, m)}) {
      CHECK((an.mean() - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((sample_cov(an) - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("transform analyses are deterministic") {
  const auto m = linear_model(Matrix::Identity(3, 3), 1.0, 0.5);
  Rng rng = make_rng(5);
  const auto fc = draw(Vector::Zero(3), Matrix::Identity(3, 3), 6, rng);
  const Vector y = Vector::Constant(3, 0.4);
  CHECK(etkf_analysis(fc, y, m).members == etkf_analysis(fc, y, m).members);
  CHECK(etkf_sqrt_analysis(fc, y, m).members == etkf_sqrt_analysis(fc, y, m).members);
}

TEST_CASE("enkf analysis mean is unbiased over replicates") {
  const auto m = linear_model(Matrix::Identity(2, 2), 1.0, 1.0);
  const KalmanState prior{Vector::Zero(2), (Matrix(2, 2) << 1.0, 0.2, 0.2, 0.5).finished()};
  const Vector y = (Vector(2) << 0.5, -0.5).finished();
  const auto kf = kalman_update(prior, y, m);
  Rng rng = make_rng(6);
  const int reps = 500;
  const Eigen::Index ne = 500;
  Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
  for (int r = 0; r < reps; ++r) {
    const Vector mean = enkf_analysis(draw(prior.mean, prior.cov, ne, rng), y, m, rng).mean();
    sum += mean;
    sq += mean.cwiseProduct(mean);
  }
  const Vector avg = sum / reps;
  const Vector sd = (sq / reps - avg.cwiseProduct(avg)).cwiseSqrt();
  for (int i = 0; i < 2; ++i) CHECK(std::abs(avg[i] - kf.mean[i]) <= 3.0 * sd[i] / std::sqrt(double(reps)));
}

TEST_CASE("ensemble helpers") {
  const auto es = ensemble_at((Vector(2) << 1.0, 2.0).finished(), 4);
  CHECK(es.size() == 4);
  CHECK(es.mean() == (Vector(2) << 1.0, 2.0).finished());
  const EnsembleState pm{(Matrix(1, 2) << -1.0, 1.0).finished()};
  CHECK(pm.variance()[0] == 2.0);
}

TEST_CASE("all baselines track the Kalman filter on the reduced linear model") {
  models::LinearGaussianParams p;
  p.dim = 20;
  const auto m = models::make_linear_gaussian(p);
  Rng data = make_rng(7);
  std::vector<Vector> obs;
  Vector x = m.x0();
  for (int n = 1; n <= 100; ++n) {
    x = sample_transition(m, data, x, n);
    obs.push_back(sample_observation(m, data, x));
  }
  const Matrix kf = run_kalman_filter(m, obs, 100);
  for (auto kind : {EnsembleKind::enkf, EnsembleKind::etkf, EnsembleKind::etkf_sqrt}) {
    Rng rng = make_rng(8, static_cast<std::uint64_t>(kind));
    const Matrix est = run_ensemble_filter(kind, m, obs, 100, 100, rng);
    CHECK(est.allFinite());
    CHECK((est - kf).norm() / kf.norm() < 0.05);
  }
}

}  // TEST_SUITE
