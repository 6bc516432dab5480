#include "lpf/models.hpp"

namespace lpf::models {

Vector lorenz96_drift(const Vector& x, double forcing) {
  const Eigen::Index d = x.size();
  require(d >= 4, "lorenz96_drift: dimension must be >= 4");
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double xm1 = x[(i + d - 1) % d];
    const double xm2 = x[(i + d - 2) % d];
    const double xp1 = x[(i + 1) % d];
    out[i] = xm1 * (xp1 - xm2) - x[i] + forcing;
  }
  return out;
}

Vector rk4_step(const std::function<Vector(const Vector&)>& rhs, const Vector& x, double dt) {
  require(dt > 0.0, "rk4_step: dt must be positive");
  const Vector k1 = rhs(x);
  const Vector k2 = rhs(x + 0.5 * dt * k1);
  const Vector k3 = rhs(x + 0.5 * dt * k2);
  const Vector k4 = rhs(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SsmDefinition make_lorenz96(const Lorenz96Params& p) {
  require(p.dim >= 4, "make_lorenz96: dim must be >= 4");
  require(p.dt > 0.0, "make_lorenz96: dt must be positive");
  require(p.x0_perturb_index >= 0 && p.x0_perturb_index <= p.dim,
          "make_lorenz96: x0_perturb_index out of range");
  const double dt = p.dt;
  const double forcing = p.forcing;
  SsmParams s;
  s.name = "lorenz96";
  s.dim_x = p.dim;
  s.drift = [dt, forcing](int, const Vector& x) -> Vector {
    return rk4_step([forcing](const Vector& v) { return lorenz96_drift(v, forcing); }, x, dt);
  };
  s.r1_sqrt = NoiseSqrt::scalar(p.dim, p.r1_sqrt);
  s.r2_sqrt = NoiseSqrt::scalar(p.dim, p.r2_sqrt);
  s.obs = ObservationOperator::identity(p.dim);
  s.obs_frequency = p.obs_frequency;
  s.x0 = Vector::Constant(p.dim, p.x0);
  if (p.x0_perturb_index > 0) s.x0[p.x0_perturb_index - 1] = p.x0_perturb_value;
  return SsmDefinition(std::move(s));
}

}  // namespace lpf::models
