#include "kinlab/acoustic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinlab {

double AcousticState::energy() const {
  const double half_d = 0.5 * dim;
  double acc = 0.0;
  for (int i = 0; i < n_cells(); ++i)
    acc += rho[i] * rho[i] + u[i] * u[i] + half_d * theta[i] * theta[i];
  return 0.5 * acc * dx();
}

double AcousticState::mass() const {
  double acc = 0.0;
  for (double r : rho) acc += r;
  return acc * dx();
}

namespace {

void check_state(const AcousticState& s) {
  const std::size_t n = s.rho.size();
  if (n < 2 || s.u.size() != n || s.theta.size() != n)
    throw std::invalid_argument("acoustic state fields must share a size >= 2");
  if (s.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (s.length <= 0.0) throw std::invalid_argument("length must be positive");
}

}  // namespace

AcousticState solve_modal(const AcousticState& initial, double t) {
  check_state(initial);
  const int N = initial.n_cells();
  const int D = initial.dim;
  const double L = initial.length;
  const double c = AcousticState::sound_speed(D);
  const double dxv = L / N;
  const double pi = std::numbers::pi;

  // DCT-II / DST-II coefficients on midpoint samples
  std::vector<double> rh(N, 0.0), th(N, 0.0), uh(N, 0.0);  // uh: modes 1..N-1
  for (int i = 0; i < N; ++i) {
    const double x = (i + 0.5) * dxv;
    for (int n = 0; n < N; ++n) {
      const double cn = std::cos(n * pi * x / L);
      rh[n] += initial.rho[i] * cn;
      th[n] += initial.theta[i] * cn;
    }
    for (int n = 1; n < N; ++n) uh[n] += initial.u[i] * std::sin(n * pi * x / L);
  }
  for (int n = 0; n < N; ++n) {
    const double f = (n == 0) ? 1.0 / N : 2.0 / N;
    rh[n] *= f;
    th[n] *= f;
    if (n >= 1) uh[n] *= 2.0 / N;
  }

  AcousticState out = initial;
  out.t = initial.t + t;
  std::fill(out.rho.begin(), out.rho.end(), 0.0);
  std::fill(out.u.begin(), out.u.end(), 0.0);
  std::fill(out.theta.begin(), out.theta.end(), 0.0);

  for (int n = 0; n < N; ++n) {
    double rt, tt, ut = 0.0;
    if (n == 0) {
      rt = rh[0];
      tt = th[0];
    } else {
      const double k = n * pi / L;
      const double w = c * k;
      const double s0 = rh[n] + th[n];
      const double d0 = rh[n] - 0.5 * D * th[n];
      const double u0 = uh[n];
      const double st = s0 * std::cos(w * t) - c * u0 * std::sin(w * t);
      ut = u0 * std::cos(w * t) + (s0 / c) * std::sin(w * t);
      tt = (st - d0) / (1.0 + 0.5 * D);
      rt = st - tt;
    }
    for (int i = 0; i < N; ++i) {
      const double x = (i + 0.5) * dxv;
      const double cn = std::cos(n * pi * x / L);
      out.rho[i] += rt * cn;
      out.theta[i] += tt * cn;
      if (n >= 1) out.u[i] += ut * std::sin(n * pi * x / L);
    }
  }
  return out;
}

AcousticState solve_fv(const AcousticState& initial, double t, double dt) {
  check_state(initial);
  const int N = initial.n_cells();
  const int D = initial.dim;
  const double c = AcousticState::sound_speed(D);
  const double dxv = initial.dx();
  if (dt <= 0.0 || dt > dxv / c + 1e-15)
    throw std::invalid_argument("FV time step violates dt <= dx / c");
  if (t <= 0.0) return initial;
  const int steps = static_cast<int>(std::ceil(t / dt - 1e-12));
  const double h = t / steps;

  using Field = std::vector<double>;
  Field r = initial.rho, u = initial.u, q = initial.theta;
  Field rs(N), us(N), qs(N), Lr(N), Lu(N), Lq(N), Lr1(N), Lu1(N), Lq1(N);

  auto rhs = [&](const Field& rr, const Field& uu, const Field& qq) {
    // flux F = (u, rho + theta, (2/D) u), central with mirror ghosts
    auto uval = [&](int i) { return i < 0 ? -uu[0] : (i >= N ? -uu[N - 1] : uu[i]); };
    auto pval = [&](int i) {
      const int j = i < 0 ? 0 : (i >= N ? N - 1 : i);
      return rr[j] + qq[j];
    };
    for (int i = 0; i < N; ++i) {
      const double fu_r = 0.5 * (uval(i) + uval(i + 1));
      const double fu_l = 0.5 * (uval(i - 1) + uval(i));
      const double fp_r = 0.5 * (pval(i) + pval(i + 1));
      const double fp_l = 0.5 * (pval(i - 1) + pval(i));
      Lr[i] = -(fu_r - fu_l) / dxv;
      Lu[i] = -(fp_r - fp_l) / dxv;
      Lq[i] = -(2.0 / D) * (fu_r - fu_l) / dxv;
    }
  };

  for (int s = 0; s < steps; ++s) {
    rhs(r, u, q);
    Lr1 = Lr;
    Lu1 = Lu;
    Lq1 = Lq;
    for (int i = 0; i < N; ++i) {
      rs[i] = r[i] + h * Lr1[i];
      us[i] = u[i] + h * Lu1[i];
      qs[i] = q[i] + h * Lq1[i];
    }
    rhs(rs, us, qs);
    for (int i = 0; i < N; ++i) {
      r[i] += 0.5 * h * (Lr1[i] + Lr[i]);
      u[i] += 0.5 * h * (Lu1[i] + Lu[i]);
      q[i] += 0.5 * h * (Lq1[i] + Lq[i]);
    }
  }
  AcousticState out = initial;
  out.t = initial.t + t;
  out.rho = std::move(r);
  out.u = std::move(u);
  out.theta = std::move(q);
  return out;
}

AcousticState project_initial(const VelocityGrid& grid, std::span<const double> g,
                              int n_cells, double length) {
  const std::size_t K = grid.size();
  if (g.size() != K * static_cast<std::size_t>(n_cells))
    throw std::invalid_argument("field size mismatch");
  AcousticState s;
  s.dim = grid.dim();
  s.length = length;
  s.rho.resize(n_cells);
  s.u.resize(n_cells);
  s.theta.resize(n_cells);
  std::vector<double> col(K);
  for (int i = 0; i < n_cells; ++i) {
    for (std::size_t k = 0; k < K; ++k) col[k] = g[k * n_cells + i];
    const FluidTriple m = grid.fluid_moments(col);
    s.rho[i] = m.rho;
    s.u[i] = m.u[0];
    s.theta[i] = m.theta;
  }
  return s;
}

}  // namespace kinlab
