#include "kinlab/collision_kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinlab {

namespace {
constexpr double kMoll = 1e-6;  // small-|V| mollifier for soft exponents
}

std::string KernelSpec::family_name() const {
  switch (family) {
    case KernelFamily::HardSphere: return "hard-sphere";
    case KernelFamily::MaxwellMolecule: return "maxwell";
    default: return "vhs";
  }
}

KernelFamily KernelSpec::family_from_name(const std::string& name) {
  if (name == "hard-sphere" || name == "hard_sphere") return KernelFamily::HardSphere;
  if (name == "maxwell" || name == "maxwell-molecule") return KernelFamily::MaxwellMolecule;
  if (name == "vhs" || name == "variable-hard-sphere") return KernelFamily::VariableHardSphere;
  throw std::invalid_argument("unknown kernel family: " + name);
}

double kernel_eval(const KernelSpec& spec, std::span<const double> omega,
                   std::span<const double> vrel) {
  const int D = static_cast<int>(omega.size());
  double on = 0.0, vv = 0.0, ov = 0.0;
  for (int j = 0; j < D; ++j) {
    on += omega[j] * omega[j];
    vv += vrel[j] * vrel[j];
    ov += omega[j] * vrel[j];
  }
  if (std::abs(std::sqrt(on) - 1.0) > 1e-12)
    throw std::invalid_argument("omega must be a unit vector");
  const double Vn = std::sqrt(vv);
  if (Vn == 0.0) return 0.0;
  const double cosw = std::abs(ov) / Vn;
  const double beta = spec.exponent();
  const double Vm = (beta < 0.0) ? std::max(Vn, kMoll) : Vn;
  return spec.z_b * spec.c_kernel * std::pow(Vm, 1.0 + beta) * cosw;
}

double kernel_bbar(const KernelSpec& spec, std::span<const double> vrel, int n_omega) {
  const int D = static_cast<int>(vrel.size());
  const SphereQuadrature sq = SphereQuadrature::make(D, n_omega);
  double acc = 0.0;
  for (int m = 0; m < sq.n_dirs; ++m) {
    std::span<const double> om{sq.dirs.data() + m * D, static_cast<std::size_t>(D)};
    acc += sq.weights[m] * kernel_eval(spec, om, vrel);
  }
  return acc;
}

SphereQuadrature SphereQuadrature::make(int dim, int n_omega) {
  SphereQuadrature q;
  q.dim = dim;
  if (dim == 1) {
    q.n_dirs = 2;
    q.dirs = {1.0, -1.0};
    q.weights = {1.0, 1.0};
    return q;
  }
  if (dim == 2) {
    if (n_omega < 2 || n_omega % 2 != 0)
      throw std::invalid_argument("n_omega must be even and >= 2 in 2D");
    q.n_dirs = n_omega;
    q.dirs.resize(2 * n_omega);
    q.weights.assign(n_omega, 2.0 * std::numbers::pi / n_omega);
    const int half = n_omega / 2;
    for (int m = 0; m < half; ++m) {
      const double th = 2.0 * std::numbers::pi * m / n_omega;
      q.dirs[2 * m] = std::cos(th);
      q.dirs[2 * m + 1] = std::sin(th);
    }
    // exact antipodes
    for (int m = 0; m < half; ++m) {
      q.dirs[2 * (m + half)] = -q.dirs[2 * m];
      q.dirs[2 * (m + half) + 1] = -q.dirs[2 * m + 1];
    }
    return q;
  }
  // dim == 3: Lebedev 26-point rule (degree 7), antipodally symmetric
  const double a1 = 1.0 / 21.0, a2 = 4.0 / 105.0, a3 = 9.0 / 280.0;
  const double s2 = 1.0 / std::sqrt(2.0), s3 = 1.0 / std::sqrt(3.0);
  auto push = [&q](double x, double y, double z, double w) {
    q.dirs.push_back(x);
    q.dirs.push_back(y);
    q.dirs.push_back(z);
    q.weights.push_back(w * 4.0 * std::numbers::pi);
  };
  for (int j = 0; j < 3; ++j)
    for (int s : {1, -1}) {
      double e[3] = {0, 0, 0};
      e[j] = s;
      push(e[0], e[1], e[2], a1);
    }
  const int pairs[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  for (auto& p : pairs)
    for (int sa : {1, -1})
      for (int sb : {1, -1}) {
        double e[3] = {0, 0, 0};
        e[p[0]] = sa * s2;
        e[p[1]] = sb * s2;
        push(e[0], e[1], e[2], a2);
      }
  for (int sa : {1, -1})
    for (int sb : {1, -1})
      for (int sc : {1, -1}) push(sa * s3, sb * s3, sc * s3, a3);
  q.n_dirs = 26;
  return q;
}

}  // namespace kinlab
