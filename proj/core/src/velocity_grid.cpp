#include "kinlab/velocity_grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace kinlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

VelocityGrid VelocityGrid::midpoint(int dim, double v_max, int n_per_axis) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (n_per_axis % 2 != 0) throw std::invalid_argument("n_per_axis must be even");
  if (v_max <= 0.0) throw std::invalid_argument("v_max must be positive");
  VelocityGrid g;
  g.dim_ = dim;
  g.n_ = n_per_axis;
  g.v_max_ = v_max;
  g.h_ = 2.0 * v_max / n_per_axis;
  g.uniform_ = true;
  g.axis_nodes_.resize(n_per_axis);
  g.axis_weights_.resize(n_per_axis);
  for (int i = 0; i < n_per_axis; ++i) {
    const double x = -v_max + (i + 0.5) * g.h_;
    g.axis_nodes_[i] = x;
    g.axis_weights_[i] = std::exp(-0.5 * x * x) / std::sqrt(kTwoPi) * g.h_;
  }
  g.finalize("midpoint");
  return g;
}

VelocityGrid VelocityGrid::gauss_hermite(int dim, int n_per_axis) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (n_per_axis % 2 != 0) throw std::invalid_argument("n_per_axis must be even");
  // Golub-Welsch for weight exp(-x^2); substitute v = sqrt(2) x to get the
  // unit Gaussian. Off-diagonal of the Jacobi matrix: sqrt(i/2).
  const int n = n_per_axis;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(0.5 * i);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  VelocityGrid g;
  g.dim_ = dim;
  g.n_ = n;
  g.uniform_ = false;
  g.axis_nodes_.resize(n);
  g.axis_weights_.resize(n);
  for (int i = 0; i < n; ++i) {
    g.axis_nodes_[i] = std::sqrt(2.0) * es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    g.axis_weights_[i] = v0 * v0;  // weights sum to 1 for the unit Gaussian
  }
  // symmetrize exactly: nodes come out numerically symmetric, enforce it
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (g.axis_nodes_[n - 1 - i] - g.axis_nodes_[i]);
    g.axis_nodes_[i] = -x;
    g.axis_nodes_[n - 1 - i] = x;
    const double w = 0.5 * (g.axis_weights_[i] + g.axis_weights_[n - 1 - i]);
    g.axis_weights_[i] = w;
    g.axis_weights_[n - 1 - i] = w;
  }
  g.v_max_ = g.axis_nodes_.back();
  g.h_ = 0.0;
  g.finalize("gauss-hermite");
  return g;
}

void VelocityGrid::finalize(const std::string& quadrature_name) {
  const int D = dim_, n = n_;
  std::size_t K = 1;
  for (int j = 0; j < D; ++j) K *= n;
  coords_.resize(K * D);
  weights_.resize(K);
  speed2_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t r = k;
    double w = 1.0, s2 = 0.0;
    for (int j = D - 1; j >= 0; --j) {
      const int i = static_cast<int>(r % n);
      r /= n;
      const double x = axis_nodes_[i];
      coords_[k * D + j] = x;
      w *= axis_weights_[i];
      s2 += x * x;
    }
    weights_[k] = w;
    speed2_[k] = s2;
  }
  for (int j = 0; j < D; ++j) {
    axis_flip_[j].resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      auto mi = multi_index(k);
      mi[j] = n - 1 - mi[j];
      axis_flip_[j][k] = static_cast<std::int32_t>(flat_index(mi));
    }
  }
  full_flip_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto mi = multi_index(k);
    for (int j = 0; j < D; ++j) mi[j] = n - 1 - mi[j];
    full_flip_[k] = static_cast<std::int32_t>(flat_index(mi));
  }

  // invariant Gram and its Cholesky
  const int m = n_invariants();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 0; k < K; ++k)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) B(a, b) += weights_[k] * invariant(k, a) * invariant(k, b);
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  Eigen::MatrixXd Lm = llt.matrixL();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) gram_chol_[a * m + b] = Lm(a, b);

  // report
  report_.dim = D;
  report_.n_per_axis = n;
  report_.v_max = v_max_;
  report_.quadrature = quadrature_name;
  double s0 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    s0 += weights_[k];
    s2 += weights_[k] * speed2_[k];
    s4 += weights_[k] * speed2_[k] * speed2_[k];
  }
  report_.mass_defect = std::abs(1.0 - s0);
  report_.moment_defects = {std::abs(s2 - D), std::abs(s4 - double(D) * (D + 2))};
  double rt = 0.0;
  {
    FluidTriple basis[5];
    basis[0].rho = 1.0;
    for (int j = 0; j < D; ++j) basis[1 + j].u[j] = 1.0;
    basis[1 + D].theta = 1.0;
    std::vector<double> buf(K);
    for (int a = 0; a < 2 + D; ++a) {
      infinitesimal_maxwellian(basis[a], buf);
      const FluidTriple back = fluid_moments(buf);
      rt = std::max(rt, std::abs(back.rho - basis[a].rho));
      for (int j = 0; j < D; ++j) rt = std::max(rt, std::abs(back.u[j] - basis[a].u[j]));
      rt = std::max(rt, std::abs(back.theta - basis[a].theta));
    }
  }
  report_.roundtrip_tol = rt;
}

std::array<int, 3> VelocityGrid::multi_index(std::size_t k) const {
  std::array<int, 3> mi{0, 0, 0};
  std::size_t r = k;
  for (int j = dim_ - 1; j >= 0; --j) {
    mi[j] = static_cast<int>(r % n_);
    r /= n_;
  }
  return mi;
}

std::size_t VelocityGrid::flat_index(const std::array<int, 3>& mi) const {
  std::size_t f = 0;
  for (int j = 0; j < dim_; ++j) f = f * n_ + mi[j];
  return f;
}

double VelocityGrid::average(std::span<const double> f) const {
  const std::size_t K = size();
  if (f.size() != K) throw std::invalid_argument("field size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t k2 = static_cast<std::size_t>(full_flip_[k]);
    if (k < k2) acc += weights_[k] * f[k] + weights_[k2] * f[k2];
  }
  return acc;
}

std::vector<double> VelocityGrid::infinitesimal_maxwellian(const FluidTriple& t) const {
  std::vector<double> out(size());
  infinitesimal_maxwellian(t, out);
  return out;
}

void VelocityGrid::infinitesimal_maxwellian(const FluidTriple& t, std::span<double> out) const {
  const std::size_t K = size();
  if (out.size() != K) throw std::invalid_argument("field size mismatch");
  const double half_d = 0.5 * dim_;
  for (std::size_t k = 0; k < K; ++k) {
    double vu = 0.0;
    for (int j = 0; j < dim_; ++j) vu += coords_[k * dim_ + j] * t.u[j];
    out[k] = t.rho + vu + (0.5 * speed2_[k] - half_d) * t.theta;
  }
}

FluidTriple VelocityGrid::fluid_moments(std::span<const double> g) const {
  const std::size_t K = size();
  if (g.size() != K) throw std::invalid_argument("field size mismatch");
  FluidTriple t;
  t.rho = average(g);
  // paired accumulation as in average(): exact cancellation for odd parts
  for (int j = 0; j < dim_; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t k2 = static_cast<std::size_t>(full_flip_[k]);
      if (k < k2)
        acc += weights_[k] * coords_[k * dim_ + j] * g[k] +
               weights_[k2] * coords_[k2 * dim_ + j] * g[k2];
    }
    t.u[j] = acc;
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t k2 = static_cast<std::size_t>(full_flip_[k]);
    if (k < k2)
      acc += weights_[k] * (speed2_[k] / dim_ - 1.0) * g[k] +
             weights_[k2] * (speed2_[k2] / dim_ - 1.0) * g[k2];
  }
  t.theta = acc;
  return t;
}

double VelocityGrid::invariant(std::size_t k, int a) const {
  if (a == 0) return 1.0;
  if (a <= dim_) return coords_[k * dim_ + (a - 1)];
  return speed2_[k];
}

std::array<double, 5> VelocityGrid::invariant_moments(std::span<const double> f) const {
  std::array<double, 5> mom{0, 0, 0, 0, 0};
  const int m = n_invariants();
  const std::size_t K = size();
  for (std::size_t k = 0; k < K; ++k) {
    const double wf = weights_[k] * f[k];
    for (int a = 0; a < m; ++a) mom[a] += wf * invariant(k, a);
  }
  return mom;
}

void VelocityGrid::project_out_invariants(std::span<double> q) const {
  const int m = n_invariants();
  const std::size_t K = size();
  // two sweeps of the projection squeeze the residual to the round-off floor
  for (int pass = 0; pass < 2; ++pass) {
    auto r = invariant_moments(q);
    // solve L L^T lam = r
    double y[5], lam[5];
    for (int a = 0; a < m; ++a) {
      double s = r[a];
      for (int b = 0; b < a; ++b) s -= gram_chol_[a * m + b] * y[b];
      y[a] = s / gram_chol_[a * m + a];
    }
    for (int a = m - 1; a >= 0; --a) {
      double s = y[a];
      for (int b = a + 1; b < m; ++b) s -= gram_chol_[b * m + a] * lam[b];
      lam[a] = s / gram_chol_[a * m + a];
    }
    for (std::size_t k = 0; k < K; ++k) {
      double corr = lam[0];
      for (int j = 0; j < dim_; ++j) corr += lam[1 + j] * coords_[k * dim_ + j];
      corr += lam[1 + dim_] * speed2_[k];
      q[k] -= corr;
    }
  }
}

std::string GridReport::to_json() const {
  nlohmann::json j;
  j["D"] = dim;
  j["n"] = n_per_axis;
  j["v_max"] = v_max;
  j["quadrature"] = quadrature;
  j["mass_defect"] = mass_defect;
  j["moment_defects"] = {moment_defects[0], moment_defects[1]};
  j["roundtrip_tol"] = roundtrip_tol;
  return j.dump(2);
}

}  // namespace kinlab
