#pragma once

// Conservative 2-D shallow-water equations on [0,a]^2, first-order finite
// volumes with local Lax-Friedrichs (Rusanov) fluxes and reflective walls.
//
//   U = [h, hu, hv],  U_t + A(U)_x + B(U)_y = 0
//   A(U) = [hu, hu^2 + g h^2 / 2, huv],  B(U) = [hv, huv, hv^2 + g h^2 / 2]
//
// The grid stores (d_g + 2)^2 cells; index 0 and d_g + 1 along each axis are
// ghost cells.

#include "lpf/model.hpp"

#include <array>
#include <vector>

namespace lpf::models {

using Cell = std::array<double, 3>;  // h, hu, hv

struct SweParams {
  int grid_points = 35;  ///< d_g
  double domain = 2.0;   ///< a
  double gravity = 9.81;
  double cfl = 0.5;
};

class SweGrid {
 public:
  /// Lake at rest with unit depth.
  explicit SweGrid(SweParams params);

  const SweParams& params() const { return params_; }
  int dg() const { return params_.grid_points; }
  int stride() const { return params_.grid_points + 2; }
  double dx() const { return params_.domain / params_.grid_points; }

  /// i is the x index, j the y index, both in [0, d_g + 1].
  Cell& at(int i, int j) { return cells_[static_cast<std::size_t>(i + stride() * j)]; }
  const Cell& at(int i, int j) const { return cells_[static_cast<std::size_t>(i + stride() * j)]; }

  /// Sum of h * dx * dy over interior cells.
  double total_mass() const;

 private:
  SweParams params_;
  std::vector<Cell> cells_;
};

struct SweFluxes {
  Cell a;
  Cell b;
};

/// Physical fluxes A(U), B(U). Throws SolverError if h <= 0.
SweFluxes swe_fluxes(const Cell& u, double gravity);

/// Ghost cells copy their interior neighbour with the wall-normal momentum negated.
void apply_reflective_boundaries(SweGrid& grid);

/// Largest stable step: cfl * dx / max(|u| + sqrt(g h), |v| + sqrt(g h)) over all cells.
double cfl_timestep(const SweGrid& grid);

/// One explicit finite-volume step. Ghost cells are refreshed before and after.
/// Throws SolverError naming the first interior cell whose depth becomes non-positive.
SweGrid lax_friedrichs_step(const SweGrid& grid, double dt);

/// h = h_high on [lo, hi]^2 (physical grid coordinates x_i = (i-1) dx), h_low elsewhere, at rest.
SweGrid swe_dam_break(const SweParams& params, double h_high = 2.5, double h_low = 1.0,
                      double lo = 0.5, double hi = 1.0);

// State packing: X = [h_1..h_{dg^2}, u_1..u_{dg^2}, v_1..v_{dg^2}] with the
// flat interior index k = (i-1) + dg (j-1), x index fastest.

Vector pack_state(const SweGrid& grid);
/// Inverse of pack_state; ghost cells are filled. Throws SolverError if any h <= 0.
SweGrid unpack_state(const SweParams& params, const Vector& x);

/// Selector observing every h, every third u starting at the first u, and
/// every third v starting at the second v.
ObservationOperator swe_observation_operator(int grid_points);

/// q(x): unpack, one CFL-limited Lax-Friedrichs step, pack.
Vector swe_model_step(const SweParams& params, const Vector& x);

struct SweModelParams {
  SweParams grid;
  double r1_sqrt = 0.01;
  double r2_sqrt = 0.01;
  double h_high = 2.5;
  double h_low = 1.0;
};

SsmDefinition make_swe(const SweModelParams& p);

}  // namespace lpf::models
