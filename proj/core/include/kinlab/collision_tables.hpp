#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kinlab/collision_kernel.hpp"
#include "kinlab/velocity_grid.hpp"

namespace kinlab {

/// Triple-indexed quadrature array Xi(omega_m, v_k1, v_k), layout
/// ((m * K) + k1) * K + k. Entries on dropped triples are zero.
struct TripleArray {
  int n_omega = 0;
  std::size_t n_nodes = 0;
  std::vector<double> values;
  double& at(int m, std::size_t k1, std::size_t k) {
    return values[(static_cast<std::size_t>(m) * n_nodes + k1) * n_nodes + k];
  }
  double at(int m, std::size_t k1, std::size_t k) const {
    return values[(static_cast<std::size_t>(m) * n_nodes + k1) * n_nodes + k];
  }
};

/**
 * @brief Precomputed quadrature data for the collision operator.
 *
 * Post-collision velocities v' = v + w w.(v1-v), v'1 = v1 - w w.(v1-v)
 * fall off-grid; each is represented by a compact nonnegative stencil on the
 * surrounding nodes. Stencils reproduce the node masses individually and the
 * pair momentum and energy exactly (up to the reported solve residual), so
 * collision invariants cancel per quadrature triple for fields in their span.
 *
 * Stencils depend only on the index offset k1 - k and the direction, so the
 * tables are translation invariant; a triple is dropped when its stencil
 * support leaves the grid. The kernel is normalized (z_b) so the discrete
 * mu measure over retained triples has unit mass.
 */
class CollisionTables {
 public:
  struct BuildOptions {
    int n_omega = 16;  // trapezoid count in 2D; 3D always uses the 26-pt rule
  };

  static CollisionTables build(const KernelSpec& spec, const VelocityGrid& grid,
                               BuildOptions opts = {});

  const KernelSpec& spec() const { return spec_; }
  const VelocityGrid& grid() const { return *grid_; }
  int n_omega() const { return sphere_.n_dirs; }
  const SphereQuadrature& sphere() const { return sphere_; }

  /// retained quadrature triples (unfolded count) and dropped ones
  std::size_t n_triples() const { return n_triples_; }
  std::size_t n_dropped() const { return n_dropped_; }
  double mu_mass() const { return mu_mass_; }

  struct StencilResiduals {
    double mass = 0.0;      // max |sum c - 1| per point
    double momentum = 0.0;  // max pair-momentum residual
    double energy = 0.0;    // max pair-energy residual
  };
  const StencilResiduals& stencil_residuals() const { return residuals_; }

  /// loss-side attenuation of the discrete mu measure (per node)
  const std::vector<double>& a_loss() const { return a_loss_; }
  /// attenuation per its integral definition: a(v) = sum_k1 w_k1 bbar(v_k1 - v)
  std::vector<double> attenuation() const;
  /// bbar on the grid offsets (indexed by flat delta offset; see delta_bbar)
  double bbar_at(std::span<const double> vrel) const;

  /// Q(G, G) for a single field, conservation-projected.
  /// Rejects G with entries below -1e-12.
  std::vector<double> collide(std::span<const double> G) const;

  /// Unprojected Q for a block of `lanes` fields stored G[k*lanes + c].
  void collide_block(std::span<const double> G, int lanes, std::span<double> Q) const;

  struct CellDiagnostics {
    std::vector<double> dissipation;            // per cell: <<log(g'/g)(g'-g)>>
    std::array<std::vector<double>, 5> defect;  // per invariant, per cell (unscaled)
    long log_caps = 0;                          // times the log guard triggered
  };
  /// Fused per-cell mu averages: dissipation integrand and, when
  /// gamma_prime is nonempty, the defect integrands <<zeta Gamma' (g'-g)>>.
  CellDiagnostics mu_cell_diagnostics(std::span<const double> G, int lanes,
                                      std::span<const double> gamma_prime) const;

  /// q_eps = (G'1 G' - G1 G) / (sqrt(eps) delta) materialized on all triples.
  TripleArray scaled_q(std::span<const double> G, double eps, double delta) const;
  double mu_average(const TripleArray& xi) const;

  /// Discrete gain operator K+ f = (1/2a) <<(f' + f'1)>>_{omega, v1} as a
  /// dense matrix, with `a_hat` the marginal-consistent attenuation weight
  /// max(loss, gain) used for the L2(aM) norm audit.
  void kplus_matrix(std::vector<double>& matrix, std::vector<double>& a_hat,
                    std::vector<double>& a_gain) const;

  struct TripleView {
    std::size_t k, k1;
    int mu_folded;                 // folded direction id
    double angular_weight;         // folded (doubled) surface weight
    double b;                      // normalized kernel value
    std::span<const std::int32_t> s1_off, s2_off;  // flat offsets rel. to k / k1
    std::span<const double> s1_w, s2_w;
  };
  /// Visit every retained folded triple (test/diagnostic use).
  void visit_triples(const std::function<void(const TripleView&)>& f) const;

  int unfolded_dir(int folded_id, int which) const;  // which in {0, 1}

 private:
  CollisionTables() = default;

  struct Entry {
    std::int32_t dflat;
    std::int32_t mu;
    double b;        // normalized
    double wb;       // folded angular weight * b
    std::uint32_t s1_begin, s2_begin;
    std::uint16_t s1_count, s2_count;
    std::array<std::int16_t, 3> box_lo{0, 0, 0};
    std::array<std::int16_t, 3> box_hi{0, 0, 0};
  };

  const VelocityGrid* grid_ = nullptr;
  KernelSpec spec_;
  SphereQuadrature sphere_;
  std::vector<std::array<int, 2>> fold_pairs_;  // folded id -> unfolded dirs
  std::vector<double> fold_weight_;
  std::vector<Entry> entries_;
  std::vector<std::int32_t> pool_off_;
  std::vector<double> pool_w_;
  std::vector<double> delta_bbar_;  // bbar per delta (flat (2n-1)^D table)
  std::vector<double> a_loss_;
  std::size_t n_triples_ = 0;
  std::size_t n_dropped_ = 0;
  double mu_mass_ = 1.0;
  StencilResiduals residuals_;
};

}  // namespace kinlab
