#pragma once

#include <span>
#include <string>
#include <vector>

namespace kinlab {

enum class KernelFamily { HardSphere, VariableHardSphere, MaxwellMolecule };

/// Cutoff collision kernel b(omega, V) = Z_b C |V|^{1+beta} |omega.n|,
/// with beta = 0 (hard sphere), beta in (-D, 1] (VHS), beta = -1 (Maxwell).
struct KernelSpec {
  KernelFamily family = KernelFamily::HardSphere;
  double vhs_exponent = 0.0;
  double c_kernel = 1.0;
  double z_b = 1.0;  // set by the table builder so the mu measure has unit mass

  double exponent() const {
    switch (family) {
      case KernelFamily::HardSphere: return 0.0;
      case KernelFamily::MaxwellMolecule: return -1.0;
      default: return vhs_exponent;
    }
  }
  std::string family_name() const;
  static KernelFamily family_from_name(const std::string& name);
};

/// b evaluated at one (omega, V) pair; returns 0 at V = 0. Soft exponents
/// (beta < 0) use the mollification |V| <- max(|V|, 1e-6).
double kernel_eval(const KernelSpec& spec, std::span<const double> omega,
                   std::span<const double> vrel);

/// b-bar(V) = integral of b over the sphere (quadrature consistent with the
/// collision tables' angular rule).
double kernel_bbar(const KernelSpec& spec, std::span<const double> vrel, int n_omega);

struct SphereQuadrature {
  std::vector<double> dirs;     // n_dirs * D
  std::vector<double> weights;  // n_dirs (surface measure)
  int n_dirs = 0;
  int dim = 0;
  static SphereQuadrature make(int dim, int n_omega);
};

}  // namespace kinlab
