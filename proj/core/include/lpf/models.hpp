#pragma once

// The three experiment models packaged as SsmDefinitions.

#include "lpf/model.hpp"

#include <functional>

namespace lpf::models {

// ---------------------------------------------------------------------------
// Linear-Gaussian: q_n(x) = x

struct LinearGaussianParams {
  Eigen::Index dim = 500;
  double r1_sqrt = 0.70710678118654752440;  // 1/sqrt(2)
  double r2_sqrt = 0.1;
  double x0 = 1.5;
  int obs_frequency = 1;
};

SsmDefinition make_linear_gaussian(const LinearGaussianParams& p);

// ---------------------------------------------------------------------------
// Stochastic Lorenz 96 advanced by one RK4 step per model step

/// dx^i/dt = x^{i-1} (x^{i+1} - x^{i-2}) - x^i + forcing, cyclic indices.
Vector lorenz96_drift(const Vector& x, double forcing = 8.0);

/// One classical fourth-order Runge-Kutta step.
Vector rk4_step(const std::function<Vector(const Vector&)>& rhs, const Vector& x, double dt);

struct Lorenz96Params {
  Eigen::Index dim = 40;
  double dt = 0.05;
  double forcing = 8.0;
  double r1_sqrt = 0.1;
  double r2_sqrt = 0.1;
  int obs_frequency = 3;
  double x0 = 8.0;
  /// 1-based index of the perturbed initial coordinate (0 disables).
  Eigen::Index x0_perturb_index = 20;
  double x0_perturb_value = 8.01;
};

SsmDefinition make_lorenz96(const Lorenz96Params& p);

}  // namespace lpf::models
