#include "kinlab/boundary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinlab {

void SlabDomain::validate() const {
  if (length <= 0.0) throw std::invalid_argument("slab length must be positive");
  if (n_cells < 2) throw std::invalid_argument("need at least two cells");
  if (accommodation < 0.0 || accommodation > 1.0)
    throw std::invalid_argument("accommodation coefficient must lie in [0,1]");
}

WallGeometry::WallGeometry(const VelocityGrid& grid, Wall wall)
    : grid_(&grid), wall_(wall), nsign_(SlabDomain::normal_sign(wall)) {
  const std::size_t K = grid.size();
  for (std::size_t k = 0; k < K; ++k)
    if (outgoing(k)) out_.push_back(static_cast<std::int32_t>(k));
  double S = 0.0;
  for (auto k : out_) S += grid.weights()[k] * vdotn(k);
  S_ = S;
  defect_ = std::sqrt(2.0 * std::numbers::pi) * S_ - 1.0;
}

std::vector<double> specular_reflect(const VelocityGrid& grid, std::span<const double> f,
                                     Wall) {
  const std::size_t K = grid.size();
  if (f.size() != K) throw std::invalid_argument("field size mismatch");
  const auto flip = grid.axis_flip(0);
  std::vector<double> out(K);
  for (std::size_t k = 0; k < K; ++k) out[k] = f[flip[k]];
  return out;
}

double outgoing_average(const WallGeometry& wg, std::span<const double> f) {
  const auto& g = wg.grid();
  double acc = 0.0;
  for (auto k : wg.outgoing_set()) acc += g.weights()[k] * wg.vdotn(k) * f[k];
  return std::sqrt(2.0 * std::numbers::pi) * acc;
}

void apply_maxwell_bc(const WallGeometry& wg, WallTrace& trace, double alpha,
                      bool discrete_normalization) {
  const auto& g = wg.grid();
  const std::size_t K = g.size();
  if (trace.values.size() != K) throw std::invalid_argument("trace size mismatch");
  for (auto k : wg.outgoing_set())
    if (trace.values[k] < 0.0)
      throw std::invalid_argument("negative outgoing trace");

  double cbar = 0.0;
  {
    double acc = 0.0;
    for (auto k : wg.outgoing_set()) acc += g.weights()[k] * wg.vdotn(k) * trace.values[k];
    cbar = discrete_normalization ? acc / wg.half_space_mass()
                                  : std::sqrt(2.0 * std::numbers::pi) * acc;
  }
  const auto flip = g.axis_flip(0);
  // gamma_- = L gamma_+ + alpha (cbar - L gamma_+): constants stay exact fixed
  // points for every alpha
  for (std::size_t k = 0; k < K; ++k) {
    if (wg.vdotn(k) < 0.0) {
      const double spec = trace.values[flip[k]];
      trace.values[k] = spec + alpha * (cbar - spec);
    }
  }
}

double wall_mass_flux(const WallGeometry& wg, const WallTrace& trace) {
  const auto& g = wg.grid();
  const auto flip = g.axis_flip(0);
  double acc = 0.0;
  // pair each outgoing node with its specular partner: exact cancellation for
  // symmetric traces
  for (auto k : wg.outgoing_set()) {
    const std::size_t kr = static_cast<std::size_t>(flip[k]);
    acc += g.weights()[k] * wg.vdotn(k) * trace.values[k] +
           g.weights()[kr] * wg.vdotn(kr) * trace.values[kr];
  }
  return acc;
}

double boundary_mass_flux_term(std::span<const double> times,
                               std::span<const double> flux_left,
                               std::span<const double> flux_right, double chi_left,
                               double chi_right) {
  const std::size_t nt = times.size();
  if (nt < 2) throw std::invalid_argument("boundary flux series needs >= 2 samples");
  if (flux_left.size() != nt || flux_right.size() != nt)
    throw std::invalid_argument("flux series length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    const double dt = times[i + 1] - times[i];
    acc += 0.5 * dt *
           (chi_left * (flux_left[i] + flux_left[i + 1]) +
            chi_right * (flux_right[i] + flux_right[i + 1]));
  }
  return acc;
}

}  // namespace kinlab
