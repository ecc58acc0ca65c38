#include "kinlab/bgk.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace kinlab {

int DiscreteMaxwellian::solve(double mass, std::span<const double> momentum, double energy,
                              std::span<double> psi, std::span<double> G_eq) const {
  const auto& g = *grid_;
  const int D = g.dim();
  const int m = D + 2;
  const std::size_t K = g.size();
  if (mass <= 0.0) throw std::invalid_argument("nonpositive density moment");
  double u2 = 0.0;
  for (int j = 0; j < D; ++j) u2 += (momentum[j] / mass) * (momentum[j] / mass);
  const double T = (energy / mass - u2) / D;
  if (T <= 0.0) throw std::invalid_argument("nonpositive temperature moment");

  Eigen::VectorXd p(m);
  bool cold = true;
  for (int a = 0; a < m; ++a) {
    p(a) = psi[a];
    cold = cold && psi[a] == 0.0;
  }

  Eigen::VectorXd tgt(m);
  tgt(0) = mass;
  for (int j = 0; j < D; ++j) tgt(1 + j) = momentum[j];
  tgt(m - 1) = energy;
  const double scale = std::max({std::abs(mass), std::abs(energy), 1e-3});

  int it = 0;
  bool converged = false;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd r_last = Eigen::VectorXd::Zero(m);
  for (; it < 60; ++it) {
    Eigen::VectorXd mom = Eigen::VectorXd::Zero(m);
    J.setZero();
    for (std::size_t k = 0; k < K; ++k) {
      double e = p(0);
      for (int j = 0; j < D; ++j) e += p(1 + j) * g.node(k, j);
      e += p(m - 1) * g.speed2(k);
      const double val = std::exp(e);
      G_eq[k] = val;
      const double wv = g.weights()[k] * val;
      double z[5];
      for (int a = 0; a < m; ++a) z[a] = g.invariant(k, a);
      for (int a = 0; a < m; ++a) {
        mom(a) += wv * z[a];
        for (int b = a; b < m; ++b) J(a, b) += wv * z[a] * z[b];
      }
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < a; ++b) J(a, b) = J(b, a);
    const Eigen::VectorXd r = mom - tgt;
    if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
      converged = true;
      r_last = r;
      break;
    }
    if (it == 0 && cold && r.cwiseAbs().maxCoeff() > 1e-2 * scale) {
      // continuum-Maxwellian seed for far-off cold starts
      p(0) = std::log(mass * std::pow(T, -0.5 * D)) - 0.5 * u2 / T;
      for (int j = 0; j < D; ++j) p(1 + j) = (momentum[j] / mass) / T;
      p(m - 1) = 0.5 - 0.5 / T;
      continue;
    }
    p -= J.ldlt().solve(r);
  }
  if (!converged) throw std::runtime_error("discrete Maxwellian Newton did not converge");
  for (int a = 0; a < m; ++a) psi[a] = p(a);
  // multiplicative trim G_eq (1 + lam.zeta): the moment map is affine in lam,
  // so one solve pins the moments to round-off without risking positivity
  if (r_last.cwiseAbs().maxCoeff() > 0.0) {
    const Eigen::VectorXd lam = J.ldlt().solve(r_last);
    for (std::size_t k = 0; k < K; ++k) {
      double corr = lam(0);
      for (int j = 0; j < D; ++j) corr += lam(1 + j) * g.node(k, j);
      corr += lam(m - 1) * g.speed2(k);
      G_eq[k] *= 1.0 - corr;
    }
  }
  return it;
}

std::vector<double> DiscreteMaxwellian::bgk_relax(std::span<const double> G) const {
  const auto& g = *grid_;
  const int D = g.dim();
  const std::size_t K = g.size();
  if (G.size() != K) throw std::invalid_argument("field size mismatch");
  const auto mom = g.invariant_moments(G);
  std::array<double, 3> P{0, 0, 0};
  for (int j = 0; j < D; ++j) P[j] = mom[1 + j];
  std::vector<double> psi(D + 2, 0.0), G_eq(K);
  solve(mom[0], {P.data(), static_cast<std::size_t>(D)}, mom[D + 1], psi, G_eq);
  std::vector<double> out(K);
  for (std::size_t k = 0; k < K; ++k) out[k] = G_eq[k] - G[k];
  return out;
}

}  // namespace kinlab
