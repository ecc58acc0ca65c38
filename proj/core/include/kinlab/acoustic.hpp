#pragma once

#include <span>
#include <vector>

#include "kinlab/velocity_grid.hpp"

namespace kinlab {

/// Acoustic fields on slab cell centers. `u` is the wall-normal component;
/// tangential components decouple (they are constant in time on the slab) and
/// are carried by the harness. `dim` is the velocity dimension entering the
/// theta equation, independent of the spatial grid.
struct AcousticState {
  int dim = 2;
  double length = 1.0;
  double t = 0.0;
  std::vector<double> rho, u, theta;

  int n_cells() const { return static_cast<int>(rho.size()); }
  double dx() const { return length / n_cells(); }
  static double sound_speed(int dim) { return std::sqrt((dim + 2.0) / dim); }
  /// (1/2) int (rho^2 + u^2 + (D/2) theta^2) dx
  double energy() const;
  /// int rho dx
  double mass() const;
};

/**
 * Exact modal solution of d_t rho + d_x u = 0, d_t u + d_x(rho+theta) = 0,
 * (D/2) d_t theta + d_x u = 0 with u.n = 0 at both walls. rho and theta
 * expand in cos(n pi x / L), u in sin(n pi x / L); each mode oscillates at
 * c n pi / L and rho - (D/2) theta is stationary mode by mode. The sine
 * Nyquist component of u (n = N) has no representable cosine partner and is
 * projected out of the initial data.
 */
AcousticState solve_modal(const AcousticState& initial, double t);

/// Second-order central-flux finite volume with reflecting ghost cells
/// (u odd, rho/theta even) and Heun time stepping. Requires dt <= dx / c.
AcousticState solve_fv(const AcousticState& initial, double t, double dt);

/// Cell-wise fluid moments of a kinetic fluctuation block g[(k, cell)];
/// the normal component of u is taken along axis 0.
AcousticState project_initial(const VelocityGrid& grid, std::span<const double> g,
                              int n_cells, double length);

}  // namespace kinlab
