#pragma once

#include <array>
#include <span>
#include <vector>

#include "kinlab/boundary.hpp"
#include "kinlab/collision_tables.hpp"
#include "kinlab/velocity_grid.hpp"

namespace kinlab {

/// eta(G) = G log G - G + 1, evaluated in the cancellation-safe log1p form.
double entropy_density(double G);

/// H = sum_i dx sum_k w_k eta(G_ki) over a block of `lanes` cells.
double relative_entropy(const VelocityGrid& grid, std::span<const double> G, int lanes,
                        double dx);

/// R = (1/4) sum_i dx << log(G'1 G'/(G1 G)) (G'1 G' - G1 G) >>.
double dissipation_rate(const CollisionTables& tables, std::span<const double> G,
                        int lanes, double dx);

/// Darrozes-Guiraud information of an outgoing trace. The diffuse average is
/// normalized by the discrete half-space mass (Jensen is then exact), and the
/// result carries the sqrt(2pi) S entropy-flux weight so the recorded wall
/// term telescopes exactly in the entropy inequality.
double dg_information(const WallGeometry& wg, std::span<const double> outgoing);

/// Conservation defects (1/sqrt(eps)) << zeta Gamma'(G) q_eps >> per cell for
/// every collision invariant. gamma_prime holds Gamma'(G) per (node, cell).
std::array<std::vector<double>, 5> conservation_defect(
    const CollisionTables& tables, std::span<const double> G, int lanes,
    std::span<const double> gamma_prime, double eps, double delta);

/// Young pair r(z) = z log(1+z) and its Legendre dual.
double young_r(double z);
double young_r_star(double p);

struct EntropyRecord {
  double t = 0.0;
  double H = 0.0;
  double R = 0.0;
  double E_left = 0.0, E_right = 0.0;
  std::array<double, 5> defect_l1{0, 0, 0, 0, 0};  // L1(x) per invariant
  double wall_flux_left = 0.0, wall_flux_right = 0.0;  // <v.n gamma gtilde>
  double slack = 0.0;
  double mass = 0.0;
  double rho_int = 0.0;
  double moment_err = 0.0;  // vs acoustic reference when available
  double min_G = 0.0;
};

}  // namespace kinlab
