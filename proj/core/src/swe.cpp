#include "lpf/swe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lpf::models {

namespace {

void check_params(const SweParams& p) {
  require(p.grid_points >= 3, "SweParams: grid_points must be >= 3");
  require(p.domain > 0.0, "SweParams: domain must be positive");
  require(p.gravity > 0.0, "SweParams: gravity must be positive");
  require(p.cfl > 0.0 && p.cfl <= 1.0, "SweParams: cfl must lie in (0, 1]");
}

double wave_speed_x(const Cell& c, double g) { return std::abs(c[1] / c[0]) + std::sqrt(g * c[0]); }
double wave_speed_y(const Cell& c, double g) { return std::abs(c[2] / c[0]) + std::sqrt(g * c[0]); }

Cell lf_flux(const Cell& fl, const Cell& fr, const Cell& ul, const Cell& ur, double lambda) {
  Cell f;
  for (int c = 0; c < 3; ++c) f[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * lambda * (ur[c] - ul[c]);
  return f;
}

}  // namespace

SweGrid::SweGrid(SweParams params) : params_(params) {
  check_params(params_);
  cells_.assign(static_cast<std::size_t>(stride() * stride()), Cell{1.0, 0.0, 0.0});
}

double SweGrid::total_mass() const {
  double mass = 0.0;
  for (int j = 1; j <= dg(); ++j)
    for (int i = 1; i <= dg(); ++i) mass += at(i, j)[0];
  return mass * dx() * dx();
}

SweFluxes swe_fluxes(const Cell& u, double gravity) {
  const double h = u[0];
  if (!(h > 0.0)) {
    std::ostringstream os;
    os << "swe_fluxes: non-positive depth h=" << h;
    throw SolverError(os.str());
  }
  const double hu = u[1];
  const double hv = u[2];
  const double p = 0.5 * gravity * h * h;
  const double huv = (hu * hv) / h;
  return {Cell{hu, (hu * hu) / h + p, huv}, Cell{hv, huv, (hv * hv) / h + p}};
}

void apply_reflective_boundaries(SweGrid& grid) {
  const int n = grid.dg();
  for (int j = 1; j <= n; ++j) {
    Cell left = grid.at(1, j);
    left[1] = -left[1];
    grid.at(0, j) = left;
    Cell right = grid.at(n, j);
    right[1] = -right[1];
    grid.at(n + 1, j) = right;
  }
  for (int i = 1; i <= n; ++i) {
    Cell bottom = grid.at(i, 1);
    bottom[2] = -bottom[2];
    grid.at(i, 0) = bottom;
    Cell top = grid.at(i, n);
    top[2] = -top[2];
    grid.at(i, n + 1) = top;
  }
  // corners never enter a flux; keep them physical
  grid.at(0, 0) = grid.at(1, 1);
  grid.at(n + 1, 0) = grid.at(n, 1);
  grid.at(0, n + 1) = grid.at(1, n);
  grid.at(n + 1, n + 1) = grid.at(n, n);
}

double cfl_timestep(const SweGrid& grid) {
  const double g = grid.params().gravity;
  const int n = grid.dg();
  double speed = 0.0;
  for (int j = 0; j <= n + 1; ++j) {
    for (int i = 0; i <= n + 1; ++i) {
      const Cell& c = grid.at(i, j);
      require(c[0] > 0.0, "cfl_timestep: non-positive depth");
      speed = std::max({speed, wave_speed_x(c, g), wave_speed_y(c, g)});
    }
  }
  return grid.params().cfl * grid.dx() / speed;
}

SweGrid lax_friedrichs_step(const SweGrid& grid, double dt) {
  require(dt > 0.0, "lax_friedrichs_step: dt must be positive");
  SweGrid cur = grid;
  apply_reflective_boundaries(cur);
  const int n = cur.dg();
  const int s = n + 1;  // interfaces per row
  const double g = cur.params().gravity;
  const double r = dt / cur.dx();

  // fx[(i) + s*(j-1)] is the flux through the interface between cells i and i+1 in row j
  std::vector<Cell> fx(static_cast<std::size_t>(s * n));
  std::vector<Cell> gy(static_cast<std::size_t>(s * n));
  for (int j = 1; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Cell& ul = cur.at(i, j);
      const Cell& ur = cur.at(i + 1, j);
      const double lambda = std::max(wave_speed_x(ul, g), wave_speed_x(ur, g));
      fx[static_cast<std::size_t>(i + s * (j - 1))] =
          lf_flux(swe_fluxes(ul, g).a, swe_fluxes(ur, g).a, ul, ur, lambda);
    }
  }
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Cell& ub = cur.at(i, j);
      const Cell& ut = cur.at(i, j + 1);
      const double lambda = std::max(wave_speed_y(ub, g), wave_speed_y(ut, g));
      gy[static_cast<std::size_t>(j + s * (i - 1))] =
          lf_flux(swe_fluxes(ub, g).b, swe_fluxes(ut, g).b, ub, ut, lambda);
    }
  }

  SweGrid next = cur;
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const Cell& fe = fx[static_cast<std::size_t>(i + s * (j - 1))];
      const Cell& fw = fx[static_cast<std::size_t>(i - 1 + s * (j - 1))];
      const Cell& gn = gy[static_cast<std::size_t>(j + s * (i - 1))];
      const Cell& gs = gy[static_cast<std::size_t>(j - 1 + s * (i - 1))];
      Cell& u = next.at(i, j);
      for (int c = 0; c < 3; ++c) u[c] = u[c] - r * ((fe[c] - fw[c]) + (gn[c] - gs[c]));
      if (!(u[0] > 0.0)) {
        std::ostringstream os;
        os << "lax_friedrichs_step: positivity violated at cell (" << i << ", " << j
           << "), h=" << u[0];
        throw SolverError(os.str());
      }
    }
  }
  apply_reflective_boundaries(next);
  return next;
}

SweGrid swe_dam_break(const SweParams& params, double h_high, double h_low, double lo, double hi) {
  require(h_high > 0.0 && h_low > 0.0, "swe_dam_break: depths must be positive");
  SweGrid grid(params);
  const double dx = grid.dx();
  for (int j = 1; j <= grid.dg(); ++j) {
    for (int i = 1; i <= grid.dg(); ++i) {
      const double x = (i - 1) * dx;
      const double y = (j - 1) * dx;
      const bool inside = x >= lo - 1e-12 && x <= hi + 1e-12 && y >= lo - 1e-12 && y <= hi + 1e-12;
      grid.at(i, j) = Cell{inside ? h_high : h_low, 0.0, 0.0};
    }
  }
  apply_reflective_boundaries(grid);
  return grid;
}

Vector pack_state(const SweGrid& grid) {
  const int n = grid.dg();
  const Eigen::Index block = static_cast<Eigen::Index>(n) * n;
  Vector x(3 * block);
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const Eigen::Index k = (i - 1) + static_cast<Eigen::Index>(n) * (j - 1);
      const Cell& c = grid.at(i, j);
      x[k] = c[0];
      x[block + k] = c[1] / c[0];
      x[2 * block + k] = c[2] / c[0];
    }
  }
  return x;
}

SweGrid unpack_state(const SweParams& params, const Vector& x) {
  SweGrid grid(params);
  const int n = grid.dg();
  const Eigen::Index block = static_cast<Eigen::Index>(n) * n;
  require(x.size() == 3 * block, "unpack_state: state length must be 3 dg^2");
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const Eigen::Index k = (i - 1) + static_cast<Eigen::Index>(n) * (j - 1);
      const double h = x[k];
      if (!(h > 0.0)) {
        std::ostringstream os;
        os << "unpack_state: non-positive depth at cell (" << i << ", " << j << "), h=" << h;
        throw SolverError(os.str());
      }
      grid.at(i, j) = Cell{h, h * x[block + k], h * x[2 * block + k]};
    }
  }
  apply_reflective_boundaries(grid);
  return grid;
}

ObservationOperator swe_observation_operator(int grid_points) {
  require(grid_points >= 3, "swe_observation_operator: grid_points must be >= 3");
  const Eigen::Index block = static_cast<Eigen::Index>(grid_points) * grid_points;
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < block; ++k) idx.push_back(k);
  for (Eigen::Index k = 0; k < block; k += 3) idx.push_back(block + k);
  for (Eigen::Index k = 1; k < block; k += 3) idx.push_back(2 * block + k);
  return ObservationOperator::selector(3 * block, std::move(idx));
}

Vector swe_model_step(const SweParams& params, const Vector& x) {
  const SweGrid grid = unpack_state(params, x);
  return pack_state(lax_friedrichs_step(grid, cfl_timestep(grid)));
}

SsmDefinition make_swe(const SweModelParams& p) {
  check_params(p.grid);
  const Eigen::Index d = 3 * static_cast<Eigen::Index>(p.grid.grid_points) * p.grid.grid_points;
  const SweParams grid = p.grid;
  SsmParams s;
  s.name = "swe";
  s.dim_x = d;
  s.drift = [grid](int, const Vector& x) -> Vector { return swe_model_step(grid, x); };
  s.r1_sqrt = NoiseSqrt::scalar(d, p.r1_sqrt);
  s.obs = swe_observation_operator(p.grid.grid_points);
  s.r2_sqrt = NoiseSqrt::scalar(s.obs.rows(), p.r2_sqrt);
  s.obs_frequency = 1;
  s.x0 = pack_state(swe_dam_break(p.grid, p.h_high, p.h_low));
  return SsmDefinition(std::move(s));
}

}  // namespace lpf::models
