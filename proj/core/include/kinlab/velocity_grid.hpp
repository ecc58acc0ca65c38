#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinlab {

/// Fluid fluctuation fields at one point: density, bulk velocity, temperature.
struct FluidTriple {
  double rho = 0.0;
  std::array<double, 3> u{0.0, 0.0, 0.0};
  double theta = 0.0;
};

struct GridReport {
  int dim = 0;
  int n_per_axis = 0;
  double v_max = 0.0;
  std::string quadrature;
  double mass_defect = 0.0;            // |<1> - 1|
  std::array<double, 2> moment_defects{0.0, 0.0};  // |<|v|^2>-D|, |<|v|^4>-D(D+2)|
  double roundtrip_tol = 0.0;          // max moment error of inf-Maxwellian round trip
  std::string to_json() const;
};

/**
 * @brief Velocity quadrature approximating integration against the unit
 *        Gaussian weight, with exact reflection symmetry.
 *
 * Default builder is a tensor-product midpoint rule with weights
 * w_k = M(v_k) h^D; a Gauss-Hermite variant is available for 1D checks.
 * The node set is invariant under every single-axis sign flip and under
 * v -> -v; the corresponding index permutations are stored as involutions.
 */
class VelocityGrid {
 public:
  static VelocityGrid midpoint(int dim, double v_max, int n_per_axis);
  static VelocityGrid gauss_hermite(int dim, int n_per_axis);

  int dim() const { return dim_; }
  int n_per_axis() const { return n_; }
  double v_max() const { return v_max_; }
  bool uniform() const { return uniform_; }
  double spacing() const { return h_; }
  std::size_t size() const { return weights_.size(); }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& axis_nodes() const { return axis_nodes_; }
  /// component j of node k
  double node(std::size_t k, int j) const { return coords_[k * dim_ + j]; }
  std::span<const double> node(std::size_t k) const {
    return {coords_.data() + k * dim_, static_cast<std::size_t>(dim_)};
  }
  double speed2(std::size_t k) const { return speed2_[k]; }
  const std::vector<double>& speed2() const { return speed2_; }

  std::span<const std::int32_t> axis_flip(int j) const { return axis_flip_[j]; }
  std::span<const std::int32_t> full_flip() const { return full_flip_; }
  /// decompose flat index into per-axis indices
  std::array<int, 3> multi_index(std::size_t k) const;
  std::size_t flat_index(const std::array<int, 3>& mi) const;

  /// Discrete <f> = sum_k w_k f_k. Accumulated over v <-> -v orbit pairs so
  /// that odd integrands cancel exactly in floating point.
  double average(std::span<const double> f) const;

  /// g(v) = rho + v.u + (|v|^2/2 - D/2) theta at every node.
  std::vector<double> infinitesimal_maxwellian(const FluidTriple& t) const;
  void infinitesimal_maxwellian(const FluidTriple& t, std::span<double> out) const;

  /// rho = <g>, u = <v g>, theta = <(|v|^2/D - 1) g>.
  FluidTriple fluid_moments(std::span<const double> g) const;

  // collision invariants zeta in {1, v_1..v_D, |v|^2}
  int n_invariants() const { return dim_ + 2; }
  double invariant(std::size_t k, int a) const;
  /// w-weighted moments <zeta_a f> for all invariants
  std::array<double, 5> invariant_moments(std::span<const double> f) const;
  /// subtract the w-orthogonal projection onto span{1, v, |v|^2} (in place)
  void project_out_invariants(std::span<double> q) const;

  const GridReport& report() const { return report_; }

 private:
  VelocityGrid() = default;
  void finalize(const std::string& quadrature_name);

  int dim_ = 0;
  int n_ = 0;
  double v_max_ = 0.0;
  double h_ = 0.0;
  bool uniform_ = true;
  std::vector<double> axis_nodes_;
  std::vector<double> axis_weights_;
  std::vector<double> coords_;    // K * D
  std::vector<double> weights_;   // K
  std::vector<double> speed2_;    // K
  std::array<std::vector<std::int32_t>, 3> axis_flip_;
  std::vector<std::int32_t> full_flip_;
  std::array<double, 25> gram_chol_{};  // Cholesky of invariant Gram, (D+2)^2
  GridReport report_;
};

}  // namespace kinlab
