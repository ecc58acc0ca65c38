#pragma once

#include <span>
#include <vector>

#include "kinlab/velocity_grid.hpp"

namespace kinlab {

/**
 * @brief Local-equilibrium relative density with exact discrete moments.
 *
 * G_eq = exp(psi . (1, v, |v|^2)) with psi solved by Newton so that the
 * discrete (mass, momentum, energy) moments match the target; this is the
 * minimizer of the relative entropy on the moment shell, so BGK relaxation
 * dissipates entropy exactly at the discrete level.
 */
class DiscreteMaxwellian {
 public:
  explicit DiscreteMaxwellian(const VelocityGrid& grid) : grid_(&grid) {}

  /// Newton-solve psi for target moments (m0, P..., E); warm start from a
  /// previous psi if `psi` is nonzero. Fills G_eq. Returns iterations used.
  int solve(double mass, std::span<const double> momentum, double energy,
            std::span<double> psi, std::span<double> G_eq) const;

  /// (G_eq - G) with G_eq matched to the moments of G. Rejects states with
  /// nonpositive density or temperature moment.
  std::vector<double> bgk_relax(std::span<const double> G) const;

 private:
  const VelocityGrid* grid_;
};

}  // namespace kinlab
