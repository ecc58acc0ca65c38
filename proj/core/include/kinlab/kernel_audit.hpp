#pragma once

#include <string>
#include <vector>

#include "kinlab/collision_tables.hpp"

namespace kinlab {

/// Numerical audit of the kernel assumptions on the truncated grid. All
/// quantities carry the quadrature resolution used; the asymptotic
/// assumptions are certified on the resolved range only.
struct AuditReport {
  std::string kernel;
  int dim = 0;
  int n_per_axis = 0;
  double v_max = 0.0;
  int n_omega = 0;

  // (i) DiPerna-Lions integrability: (1+|v|^2)^-1 int_K bbar dv1 sampled
  // along increasing |v| (K = truncated velocity box)
  std::vector<double> blimit_radii;
  std::vector<double> blimit_values;
  bool blimit_decays = false;

  // (ii) attenuation lower bound a >= C_a (1+|v|^2)^beta_a
  double beta_a = 0.0;
  double c_a = 0.0;

  // (iii) s-integral bound
  double s = 2.0;
  double c_b = 0.0;

  // (iv) saturation bound per delta: sup ratio / ((1+a)(1+a))
  std::vector<double> delta_list;
  std::vector<double> c_delta;

  // (v) gain operator: norm on L2(a_hat M) (structural weight) and on the
  // aDef-weighted space, plus leading singular values (compactness proxy)
  double kplus_norm = 0.0;
  double kplus_norm_adef = 0.0;
  std::vector<double> kplus_singular_values;

  double mu_mass = 1.0;
  double z_b = 1.0;

  std::string to_json() const;
};

struct AuditOptions {
  double s = 2.0;
  std::vector<double> delta_list{0.1, 1.0, 10.0};
  int n_singular_values = 20;
};

AuditReport audit_assumptions(const CollisionTables& tables, const AuditOptions& opts = {});

}  // namespace kinlab
