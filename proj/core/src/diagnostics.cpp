#include "kinlab/diagnostics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinlab {

double entropy_density(double G) {
  if (G < 0.0) throw std::invalid_argument("eta: negative argument");
  if (G == 0.0) return 1.0;  // 0 log 0 = 0 convention
  const double s = G - 1.0;
  return (1.0 + s) * std::log1p(s) - s;
}

double relative_entropy(const VelocityGrid& grid, std::span<const double> G, int lanes,
                        double dx) {
  const std::size_t K = grid.size();
  if (G.size() != K * static_cast<std::size_t>(lanes))
    throw std::invalid_argument("field size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double w = grid.weights()[k];
    const double* row = G.data() + k * lanes;
    double rowacc = 0.0;
    for (int c = 0; c < lanes; ++c) rowacc += entropy_density(row[c]);
    acc += w * rowacc;
  }
  return acc * dx;
}

double dissipation_rate(const CollisionTables& tables, std::span<const double> G,
                        int lanes, double dx) {
  auto diag = tables.mu_cell_diagnostics(G, lanes, {});
  double acc = 0.0;
  for (int c = 0; c < lanes; ++c) acc += diag.dissipation[c];
  return 0.25 * dx * acc;
}

double dg_information(const WallGeometry& wg, std::span<const double> outgoing) {
  const auto& g = wg.grid();
  const double S = wg.half_space_mass();
  double cbar = 0.0;
  for (auto k : wg.outgoing_set()) {
    if (outgoing[k] < 0.0) throw std::invalid_argument("negative outgoing trace");
    cbar += g.weights()[k] * wg.vdotn(k) * outgoing[k];
  }
  cbar /= S;
  // Bregman form of the Jensen gap: each term is nonnegative
  double acc = 0.0;
  if (cbar > 0.0) {
    for (auto k : wg.outgoing_set()) {
      const double s = (outgoing[k] - cbar) / cbar;
      acc += g.weights()[k] * wg.vdotn(k) * ((1.0 + s) * std::log1p(s) - s);
    }
    acc *= cbar / S;
  } else {
    for (auto k : wg.outgoing_set())
      acc += g.weights()[k] * wg.vdotn(k) * entropy_density(outgoing[k]);
    acc /= S;
  }
  // E_pi weighted by sqrt(2pi) S: the discrete wall entropy production is
  // alpha S E_pi, recorded as (alpha/sqrt(2pi)) E
  return std::sqrt(2.0 * std::numbers::pi) * S * acc;
}

std::array<std::vector<double>, 5> conservation_defect(
    const CollisionTables& tables, std::span<const double> G, int lanes,
    std::span<const double> gamma_prime, double eps, double delta) {
  if (eps <= 0.0 || delta <= 0.0) throw std::invalid_argument("eps, delta must be > 0");
  auto diag = tables.mu_cell_diagnostics(G, lanes, gamma_prime);
  const double scale = 1.0 / (eps * delta);
  for (auto& d : diag.defect)
    for (auto& v : d) v *= scale;
  return diag.defect;
}

double young_r(double z) {
  if (z <= -1.0) throw std::invalid_argument("young_r: z must exceed -1");
  return z * std::log1p(z);
}

double young_r_star(double p) {
  // stationarity in y = log(1+z): phi(y) = y + 1 - exp(-y) = p, then
  // r*(p) = -expm1(y) expm1(-y)
  double y = p >= 1.0 ? p - 1.0 : (p >= -1.0 ? 0.5 * (p - 1.0) : -std::log(1.0 - p));
  double lo = y, hi = y;
  auto phi = [](double t) { return t + 1.0 - std::exp(-t); };
  while (phi(lo) > p) lo = 2.0 * lo - 1.0;
  while (phi(hi) < p) hi = 2.0 * hi + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double f = phi(y) - p;
    if (std::abs(f) < 1e-15 * std::max(1.0, std::abs(p))) break;
    const double dy = f / (1.0 + std::exp(-y));
    double ynew = y - dy;
    if (!(ynew > lo && ynew < hi)) ynew = 0.5 * (lo + hi);
    if (f > 0.0) hi = y; else lo = y;
    y = ynew;
  }
  return -std::expm1(y) * std::expm1(-y);
}

}  // namespace kinlab
