#include "lpf/models.hpp"

namespace lpf::models {

SsmDefinition make_linear_gaussian(const LinearGaussianParams& p) {
  require(p.dim >= 1, "make_linear_gaussian: dim must be positive");
  SsmParams s;
  s.name = "linear-gaussian";
  s.dim_x = p.dim;
  s.drift = [](int, const Vector& x) -> Vector { return x; };
  s.linear_map = Matrix::Identity(p.dim, p.dim);
  s.r1_sqrt = NoiseSqrt::scalar(p.dim, p.r1_sqrt);
  s.r2_sqrt = NoiseSqrt::scalar(p.dim, p.r2_sqrt);
  s.obs = ObservationOperator::identity(p.dim);
  s.obs_frequency = p.obs_frequency;
  s.x0 = Vector::Constant(p.dim, p.x0);
  return SsmDefinition(std::move(s));
}

}  // namespace lpf::models
