#include "kinlab/collision_tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <Eigen/Dense>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kinlab {

namespace {

constexpr double kMoll = 1e-6;

double raw_b(const KernelSpec& spec, const double* omega, const double* dv, int D) {
  double vv = 0.0, ov = 0.0;
  for (int j = 0; j < D; ++j) {
    vv += dv[j] * dv[j];
    ov += omega[j] * dv[j];
  }
  const double Vn = std::sqrt(vv);
  if (Vn == 0.0) return 0.0;
  const double cosw = std::abs(ov) / Vn;
  const double beta = spec.exponent();
  const double Vm = (beta < 0.0) ? std::max(Vn, kMoll) : Vn;
  return spec.c_kernel * std::pow(Vm, 1.0 + beta) * cosw;
}

struct PairStencil {
  std::vector<std::array<int, 3>> off1, off2;
  std::vector<double> w1, w2;
  double res_mass = 0.0, res_mom = 0.0, res_energy = 0.0;
};

/// Nonnegative pair stencil: per-point mass 1 second, pair momentum and energy
/// exact. Equality-constrained least squares from the multilinear base with
/// an active-set nonnegativity loop.
bool solve_pair_stencil(int D, double h, const double* dv, const double* d,
                        PairStencil& out) {
  const int npt = 1 << (2 * D);  // 4^D support points per side
  const int nvar = 2 * npt;
  const int nrow = 2 + D + 1;

  int fl1[3], fl2[3];
  double t1[3], t2[3];
  for (int j = 0; j < D; ++j) {
    const double du = d[j] / h;
    fl1[j] = static_cast<int>(std::floor(du));
    t1[j] = du - fl1[j];
    const double du2 = -du;
    fl2[j] = static_cast<int>(std::floor(du2));
    t2[j] = du2 - fl2[j];
  }

  // support offsets and coordinates relative to the pair midpoint
  std::vector<std::array<int, 3>> offs(nvar);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nrow, nvar);
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(nvar);
  for (int side = 0; side < 2; ++side) {
    const int* fl = side == 0 ? fl1 : fl2;
    const double* t = side == 0 ? t1 : t2;
    const double sgn = side == 0 ? -0.5 : 0.5;  // xi = off*h -+ dv/2
    for (int p = 0; p < npt; ++p) {
      std::array<int, 3> o{0, 0, 0};
      int r = p;
      double bw = 1.0;
      for (int j = 0; j < D; ++j) {
        const int a = r & 3;  // 0..3 -> fl-1 .. fl+2
        r >>= 2;
        o[j] = fl[j] - 1 + a;
        bw *= (a == 1) ? (1.0 - t[j]) : (a == 2 ? t[j] : 0.0);
      }
      const int v = side * npt + p;
      offs[v] = o;
      c0(v) = bw;
      A(side, v) = 1.0;
      double xi2 = 0.0;
      for (int j = 0; j < D; ++j) {
        const double xi = o[j] * h + sgn * dv[j];
        A(2 + j, v) = xi;
        xi2 += xi * xi;
      }
      A(2 + D, v) = xi2;
    }
  }
  Eigen::VectorXd rhs(nrow);
  rhs.setZero();
  rhs(0) = rhs(1) = 1.0;
  double e = 0.0;
  for (int j = 0; j < D; ++j) {
    const double x = d[j] - 0.5 * dv[j];
    e += x * x;
  }
  rhs(2 + D) = 2.0 * e;

  std::vector<char> free_var(nvar, 1);
  Eigen::VectorXd c = c0;
  for (int iter = 0; iter <= nvar; ++iter) {
    int nf = 0;
    for (int v = 0; v < nvar; ++v) nf += free_var[v];
    if (nf < nrow) return false;
    Eigen::MatrixXd Af(nrow, nf);
    Eigen::VectorXd c0f(nf);
    int col = 0;
    for (int v = 0; v < nvar; ++v)
      if (free_var[v]) {
        Af.col(col) = A.col(v);
        c0f(col) = c0(v);
        ++col;
      }
    Eigen::MatrixXd M = Af * Af.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd lam = lu.solve(rhs - Af * c0f);
    Eigen::VectorXd cf = c0f + Af.transpose() * lam;
    c.setZero();
    col = 0;
    int worst = -1;
    double worst_val = -1e-13;
    for (int v = 0; v < nvar; ++v)
      if (free_var[v]) {
        c(v) = cf(col++);
        if (c(v) < worst_val) {
          worst_val = c(v);
          worst = v;
        }
      }
    if (worst < 0) break;
    free_var[worst] = 0;
    if (iter == nvar) return false;
  }

  Eigen::VectorXd resid = A * c - rhs;
  if (resid.cwiseAbs().maxCoeff() > 1e-9) return false;

  out.off1.clear();
  out.off2.clear();
  out.w1.clear();
  out.w2.clear();
  for (int v = 0; v < nvar; ++v) {
    const double cv = std::max(c(v), 0.0);
    if (cv <= 0.0) continue;
    if (v < npt) {
      out.off1.push_back(offs[v]);
      out.w1.push_back(cv);
    } else {
      out.off2.push_back(offs[v]);
      out.w2.push_back(cv);
    }
  }
  out.res_mass = std::max(std::abs(resid(0)), std::abs(resid(1)));
  out.res_mom = 0.0;
  for (int j = 0; j < D; ++j) out.res_mom = std::max(out.res_mom, std::abs(resid(2 + j)));
  out.res_energy = std::abs(resid(2 + D));
  return !out.w1.empty() && !out.w2.empty();
}

}  // namespace

CollisionTables CollisionTables::build(const KernelSpec& spec, const VelocityGrid& grid,
                                       BuildOptions opts) {
  if (!grid.uniform())
    throw std::invalid_argument("collision tables require the uniform midpoint grid");
  const int D = grid.dim();
  const int n = grid.n_per_axis();
  const double h = grid.spacing();

  CollisionTables t;
  t.grid_ = &grid;
  t.spec_ = spec;
  t.sphere_ = SphereQuadrature::make(D, opts.n_omega);

  // antipodal folding
  {
    const int nd = t.sphere_.n_dirs;
    std::vector<char> used(nd, 0);
    for (int m = 0; m < nd; ++m) {
      if (used[m]) continue;
      int partner = -1;
      for (int m2 = m + 1; m2 < nd; ++m2) {
        if (used[m2]) continue;
        bool anti = true;
        for (int j = 0; j < D; ++j)
          if (t.sphere_.dirs[m2 * D + j] != -t.sphere_.dirs[m * D + j]) {
            anti = false;
            break;
          }
        if (anti) {
          partner = m2;
          break;
        }
      }
      if (partner < 0) throw std::logic_error("sphere rule is not antipodally paired");
      used[m] = used[partner] = 1;
      t.fold_pairs_.push_back({m, partner});
      t.fold_weight_.push_back(t.sphere_.weights[m] + t.sphere_.weights[partner]);
    }
  }

  // guard table size
  {
    double ndelta = 1.0;
    for (int j = 0; j < D; ++j) ndelta *= 2.0 * n - 1.0;
    if (ndelta * t.fold_pairs_.size() > 8e6)
      throw std::length_error("collision table too large; reduce n_per_axis or n_omega");
  }

  // bbar per delta (all offsets, independent of stencil feasibility)
  const int dn = 2 * n - 1;
  std::size_t ndelta = 1;
  for (int j = 0; j < D; ++j) ndelta *= dn;
  t.delta_bbar_.assign(ndelta, 0.0);

  // enumerate half-space deltas, solve stencils, mirror
  std::size_t dropped_entries = 0;
  PairStencil st;
  std::vector<int> dmi(D, -(n - 1));
  const auto advance = [&]() {
    for (int j = D - 1; j >= 0; --j) {
      if (++dmi[j] <= n - 1) return true;
      dmi[j] = -(n - 1);
    }
    return false;
  };
  std::vector<std::array<int, 3>> half_deltas;
  do {
    bool zero = true, positive = false;
    for (int j = 0; j < D; ++j)
      if (dmi[j] != 0) {
        zero = false;
        positive = dmi[j] > 0;
        break;
      }
    std::array<int, 3> dm{0, 0, 0};
    for (int j = 0; j < D; ++j) dm[j] = dmi[j];
    if (!zero) {
      // accumulate bbar for every delta
      double dv[3];
      for (int j = 0; j < D; ++j) dv[j] = dm[j] * h;
      double bb = 0.0;
      for (std::size_t f = 0; f < t.fold_pairs_.size(); ++f) {
        const double* om = t.sphere_.dirs.data() + t.fold_pairs_[f][0] * D;
        bb += t.fold_weight_[f] * raw_b(spec, om, dv, D);
      }
      std::size_t df = 0;
      for (int j = 0; j < D; ++j) df = df * dn + (dm[j] + n - 1);
      t.delta_bbar_[df] = bb;
      if (positive) half_deltas.push_back(dm);
    }
  } while (advance());

  std::int32_t strides[3] = {0, 0, 0};
  {
    std::int32_t s = 1;
    for (int j = D - 1; j >= 0; --j) {
      strides[j] = s;
      s *= n;
    }
  }

  for (std::size_t f = 0; f < t.fold_pairs_.size(); ++f) {
    const double* om = t.sphere_.dirs.data() + t.fold_pairs_[f][0] * D;
    for (const auto& dm : half_deltas) {
      double dv[3] = {0, 0, 0}, d[3] = {0, 0, 0};
      std::int32_t dflat = 0;
      for (int j = 0; j < D; ++j) {
        dv[j] = dm[j] * h;
        dflat += dm[j] * strides[j];
      }
      const double b = raw_b(spec, om, dv, D);
      if (b == 0.0) continue;
      double od = 0.0;
      for (int j = 0; j < D; ++j) od += om[j] * dv[j];
      double dmax = 0.0;
      for (int j = 0; j < D; ++j) {
        d[j] = om[j] * od;
        dmax = std::max(dmax, std::abs(d[j]));
      }
      if (dmax < 1e-12 * h) {
        st.off1.assign(1, {0, 0, 0});
        st.w1.assign(1, 1.0);
        st.off2.assign(1, {0, 0, 0});
        st.w2.assign(1, 1.0);
        st.res_mass = st.res_mom = st.res_energy = 0.0;
      } else if (!solve_pair_stencil(D, h, dv, d, st)) {
        ++dropped_entries;
        continue;
      }
      t.residuals_.mass = std::max(t.residuals_.mass, st.res_mass);
      t.residuals_.momentum = std::max(t.residuals_.momentum, st.res_mom);
      t.residuals_.energy = std::max(t.residuals_.energy, st.res_energy);

      const auto push_entry = [&](std::int32_t dfl, const std::array<int, 3>* o1,
                                  const double* w1, std::size_t n1,
                                  const std::array<int, 3>* o2, const double* w2,
                                  std::size_t n2, const std::array<int, 3>& dmm) {
        Entry e;
        e.dflat = dfl;
        e.mu = static_cast<std::int32_t>(f);
        e.b = b;  // z_b applied later
        e.wb = 0.0;
        e.s1_begin = static_cast<std::uint32_t>(t.pool_off_.size());
        e.s1_count = static_cast<std::uint16_t>(n1);
        for (std::size_t p = 0; p < n1; ++p) {
          std::int32_t fo = 0;
          for (int j = 0; j < D; ++j) fo += o1[p][j] * strides[j];
          t.pool_off_.push_back(fo);
          t.pool_w_.push_back(w1[p]);
        }
        e.s2_begin = static_cast<std::uint32_t>(t.pool_off_.size());
        e.s2_count = static_cast<std::uint16_t>(n2);
        for (std::size_t p = 0; p < n2; ++p) {
          std::int32_t fo = 0;
          for (int j = 0; j < D; ++j) fo += o2[p][j] * strides[j];
          t.pool_off_.push_back(fo);
          t.pool_w_.push_back(w2[p]);
        }
        for (int j = 0; j < D; ++j) {
          int lo = std::min(0, dmm[j]);
          int hi = std::max(0, dmm[j]);
          for (std::size_t p = 0; p < n1; ++p) {
            lo = std::min(lo, o1[p][j]);
            hi = std::max(hi, o1[p][j]);
          }
          for (std::size_t p = 0; p < n2; ++p) {
            lo = std::min(lo, o2[p][j] + dmm[j]);
            hi = std::max(hi, o2[p][j] + dmm[j]);
          }
          e.box_lo[j] = static_cast<std::int16_t>(lo);
          e.box_hi[j] = static_cast<std::int16_t>(hi);
        }
        t.entries_.push_back(e);
      };

      push_entry(dflat, st.off1.data(), st.w1.data(), st.off1.size(), st.off2.data(),
                 st.w2.data(), st.off2.size(), dm);
      std::array<int, 3> dneg{0, 0, 0};
      for (int j = 0; j < D; ++j) dneg[j] = -dm[j];
      push_entry(-dflat, st.off2.data(), st.w2.data(), st.off2.size(), st.off1.data(),
                 st.w1.data(), st.off1.size(), dneg);
    }
  }

  std::sort(t.entries_.begin(), t.entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.mu != b.mu) return a.mu < b.mu;
    return a.dflat < b.dflat;
  });

  // normalization over retained triples
  const auto& w = grid.weights();
  double Z = 0.0;
  std::size_t retained = 0, pairable = 0;
  for (auto& e : t.entries_) {
    double wsum = 0.0;
    std::size_t cnt = 0;
    // iterate valid box
    int lo[3], hi[3];
    for (int j = 0; j < D; ++j) {
      lo[j] = std::max(0, -int(e.box_lo[j]));
      hi[j] = std::min(n - 1, n - 1 - int(e.box_hi[j]));
    }
    std::array<int, 3> mi{lo[0], D > 1 ? lo[1] : 0, D > 2 ? lo[2] : 0};
    bool any = true;
    for (int j = 0; j < D; ++j) any = any && lo[j] <= hi[j];
    while (any) {
      std::size_t k = 0;
      for (int j = 0; j < D; ++j) k = k * n + mi[j];
      wsum += w[k] * w[k + e.dflat];
      ++cnt;
      int j = D - 1;
      for (; j >= 0; --j) {
        if (++mi[j] <= hi[j]) break;
        mi[j] = lo[j];
      }
      if (j < 0) break;
    }
    Z += t.fold_weight_[e.mu] * e.b * wsum;
    retained += 2 * cnt;
  }
  for (const auto& dm : half_deltas) {
    std::size_t c = 1;
    for (int j = 0; j < D; ++j) c *= n - std::abs(dm[j]);
    pairable += 2 * c;
  }
  pairable *= t.sphere_.n_dirs;

  if (Z <= 0.0) throw std::runtime_error("degenerate kernel: zero collision mass");
  t.spec_.z_b = 1.0 / Z;
  for (auto& e : t.entries_) {
    e.b *= t.spec_.z_b;
    e.wb = t.fold_weight_[e.mu] * e.b;
  }
  for (auto& bb : t.delta_bbar_) bb *= t.spec_.z_b;
  t.n_triples_ = retained;
  t.n_dropped_ = pairable - retained;

  // recompute mu mass and loss attenuation with the normalized kernel
  t.a_loss_.assign(grid.size(), 0.0);
  double mass = 0.0;
  for (const auto& e : t.entries_) {
    int lo[3], hi[3];
    for (int j = 0; j < D; ++j) {
      lo[j] = std::max(0, -int(e.box_lo[j]));
      hi[j] = std::min(n - 1, n - 1 - int(e.box_hi[j]));
    }
    bool any = true;
    for (int j = 0; j < D; ++j) any = any && lo[j] <= hi[j];
    if (!any) continue;
    std::array<int, 3> mi{lo[0], D > 1 ? lo[1] : 0, D > 2 ? lo[2] : 0};
    while (true) {
      std::size_t k = 0;
      for (int j = 0; j < D; ++j) k = k * n + mi[j];
      t.a_loss_[k] += e.wb * w[k + e.dflat];
      mass += e.wb * w[k + e.dflat] * w[k];
      int j = D - 1;
      for (; j >= 0; --j) {
        if (++mi[j] <= hi[j]) break;
        mi[j] = lo[j];
      }
      if (j < 0) break;
    }
  }
  t.mu_mass_ = mass;
  return t;
}

std::vector<double> CollisionTables::attenuation() const {
  const auto& g = *grid_;
  const int D = g.dim(), n = g.n_per_axis();
  const int dn = 2 * n - 1;
  const std::size_t K = g.size();
  std::vector<double> a(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto mk = g.multi_index(k);
    double acc = 0.0;
    for (std::size_t k1 = 0; k1 < K; ++k1) {
      if (k1 == k) continue;
      const auto m1 = g.multi_index(k1);
      std::size_t df = 0;
      for (int j = 0; j < D; ++j) df = df * dn + (m1[j] - mk[j] + n - 1);
      acc += g.weights()[k1] * delta_bbar_[df];
    }
    a[k] = acc;
  }
  return a;
}

double CollisionTables::bbar_at(std::span<const double> vrel) const {
  const int D = grid_->dim();
  double acc = 0.0;
  for (std::size_t f = 0; f < fold_pairs_.size(); ++f) {
    const double* om = sphere_.dirs.data() + fold_pairs_[f][0] * D;
    acc += fold_weight_[f] * raw_b(spec_, om, vrel.data(), D) * spec_.z_b;
  }
  return acc;
}

std::vector<double> CollisionTables::collide(std::span<const double> G) const {
  const std::size_t K = grid_->size();
  if (G.size() != K) throw std::invalid_argument("field size mismatch");
  for (std::size_t k = 0; k < K; ++k)
    if (G[k] < -1e-12) throw std::invalid_argument("collide: negative relative density");
  std::vector<double> Q(K, 0.0);
  collide_block(G, 1, Q);
  grid_->project_out_invariants(Q);
  return Q;
}

void CollisionTables::collide_block(std::span<const double> G, int lanes,
                                    std::span<double> Q) const {
  const auto& g = *grid_;
  const int D = g.dim(), n = g.n_per_axis();
  const auto& w = g.weights();
  std::fill(Q.begin(), Q.end(), 0.0);

  const auto run_lanes = [&](int c0, int c1) {
    const int nl = c1 - c0;
    std::vector<double> scratch(2 * nl);
    double* gp = scratch.data();
    double* gp1 = scratch.data() + nl;
    for (const Entry& e : entries_) {
      int lo[3], hi[3];
      bool any = true;
      for (int j = 0; j < D; ++j) {
        lo[j] = std::max(0, -int(e.box_lo[j]));
        hi[j] = std::min(n - 1, n - 1 - int(e.box_hi[j]));
        any = any && lo[j] <= hi[j];
      }
      if (!any) continue;
      const std::int32_t* o1 = pool_off_.data() + e.s1_begin;
      const double* w1 = pool_w_.data() + e.s1_begin;
      const std::int32_t* o2 = pool_off_.data() + e.s2_begin;
      const double* w2 = pool_w_.data() + e.s2_begin;
      std::array<int, 3> mi{lo[0], D > 1 ? lo[1] : 0, D > 2 ? lo[2] : 0};
      while (true) {
        std::size_t k = 0;
        for (int j = 0; j < D; ++j) k = k * n + mi[j];
        const std::size_t k1 = k + e.dflat;
        const double coeff = e.wb * w[k1];
        const double* Gk = G.data() + k * lanes + c0;
        const double* Gk1 = G.data() + k1 * lanes + c0;
        for (int c = 0; c < nl; ++c) {
          gp[c] = Gk[c];
          gp1[c] = Gk1[c];
        }
        for (int p = 0; p < e.s1_count; ++p) {
          const double* Gj = G.data() + (k + o1[p]) * lanes + c0;
          const double wj = w1[p];
          for (int c = 0; c < nl; ++c) gp[c] += wj * (Gj[c] - Gk[c]);
        }
        for (int p = 0; p < e.s2_count; ++p) {
          const double* Gj = G.data() + (k1 + o2[p]) * lanes + c0;
          const double wj = w2[p];
          for (int c = 0; c < nl; ++c) gp1[c] += wj * (Gj[c] - Gk1[c]);
        }
        double* Qk = Q.data() + k * lanes + c0;
        for (int c = 0; c < nl; ++c) Qk[c] += coeff * (gp1[c] * gp[c] - Gk1[c] * Gk[c]);
        int j = D - 1;
        for (; j >= 0; --j) {
          if (++mi[j] <= hi[j]) break;
          mi[j] = lo[j];
        }
        if (j < 0) break;
      }
    }
  };

#ifdef _OPENMP
  if (lanes >= 4) {
    const int nt = std::min(omp_get_max_threads(), lanes);
#pragma omp parallel for schedule(static)
    for (int th = 0; th < nt; ++th) {
      const int c0 = lanes * th / nt;
      const int c1 = lanes * (th + 1) / nt;
      if (c1 > c0) run_lanes(c0, c1);
    }
    return;
  }
#endif
  run_lanes(0, lanes);
}

CollisionTables::CellDiagnostics CollisionTables::mu_cell_diagnostics(
    std::span<const double> G, int lanes, std::span<const double> gamma_prime) const {
  const auto& g = *grid_;
  const int D = g.dim(), n = g.n_per_axis();
  const auto& w = g.weights();
  const int ninv = g.n_invariants();
  const bool with_defect = !gamma_prime.empty();

  CellDiagnostics out;
  out.dissipation.assign(lanes, 0.0);
  for (int a = 0; a < ninv; ++a) out.defect[a].assign(lanes, 0.0);

  const auto run_lanes = [&](int c0, int c1, CellDiagnostics& acc, long& caps) {
    const int nl = c1 - c0;
    std::vector<double> scratch(2 * nl);
    double* gp = scratch.data();
    double* gp1 = scratch.data() + nl;
    for (const Entry& e : entries_) {
      int lo[3], hi[3];
      bool any = true;
      for (int j = 0; j < D; ++j) {
        lo[j] = std::max(0, -int(e.box_lo[j]));
        hi[j] = std::min(n - 1, n - 1 - int(e.box_hi[j]));
        any = any && lo[j] <= hi[j];
      }
      if (!any) continue;
      const std::int32_t* o1 = pool_off_.data() + e.s1_begin;
      const double* w1 = pool_w_.data() + e.s1_begin;
      const std::int32_t* o2 = pool_off_.data() + e.s2_begin;
      const double* w2 = pool_w_.data() + e.s2_begin;
      std::array<int, 3> mi{lo[0], D > 1 ? lo[1] : 0, D > 2 ? lo[2] : 0};
      while (true) {
        std::size_t k = 0;
        for (int j = 0; j < D; ++j) k = k * n + mi[j];
        const std::size_t k1 = k + e.dflat;
        const double muw = e.wb * w[k1] * w[k];
        const double* Gk = G.data() + k * lanes + c0;
        const double* Gk1 = G.data() + k1 * lanes + c0;
        for (int c = 0; c < nl; ++c) {
          gp[c] = Gk[c];
          gp1[c] = Gk1[c];
        }
        for (int p = 0; p < e.s1_count; ++p) {
          const double* Gj = G.data() + (k + o1[p]) * lanes + c0;
          const double wj = w1[p];
          for (int c = 0; c < nl; ++c) gp[c] += wj * (Gj[c] - Gk[c]);
        }
        for (int p = 0; p < e.s2_count; ++p) {
          const double* Gj = G.data() + (k1 + o2[p]) * lanes + c0;
          const double wj = w2[p];
          for (int c = 0; c < nl; ++c) gp1[c] += wj * (Gj[c] - Gk1[c]);
        }
        double zeta[5];
        for (int a = 0; a < ninv; ++a) zeta[a] = g.invariant(k, a);
        for (int c = 0; c < nl; ++c) {
          const double loss = Gk1[c] * Gk[c];
          const double gain = gp1[c] * gp[c];
          const double diff = gain - loss;
          if (loss > 0.0) {
            double x = gain;
            if (x <= 0.0) {
              x = 1e-300;
              ++caps;
            }
            acc.dissipation[c0 + c] += muw * std::log(x / loss) * diff;
          } else {
            ++caps;
          }
          if (with_defect) {
            const double gpr = gamma_prime[k * lanes + c0 + c] * muw * diff;
            for (int a = 0; a < ninv; ++a) acc.defect[a][c0 + c] += zeta[a] * gpr;
          }
        }
        int j = D - 1;
        for (; j >= 0; --j) {
          if (++mi[j] <= hi[j]) break;
          mi[j] = lo[j];
        }
        if (j < 0) break;
      }
    }
  };

#ifdef _OPENMP
  if (lanes >= 4) {
    const int nt = std::min(omp_get_max_threads(), lanes);
    std::vector<long> caps(nt, 0);
#pragma omp parallel for schedule(static)
    for (int th = 0; th < nt; ++th) {
      const int c0 = lanes * th / nt;
      const int c1 = lanes * (th + 1) / nt;
      if (c1 > c0) run_lanes(c0, c1, out, caps[th]);
    }
    for (long c : caps) out.log_caps += c;
    return out;
  }
#endif
  run_lanes(0, lanes, out, out.log_caps);
  return out;
}

TripleArray CollisionTables::scaled_q(std::span<const double> G, double eps,
                                      double delta) const {
  if (eps <= 0.0 || delta <= 0.0) throw std::invalid_argument("eps, delta must be > 0");
  const auto& g = *grid_;
  const std::size_t K = g.size();
  const std::size_t total = static_cast<std::size_t>(sphere_.n_dirs) * K * K;
  if (total > 200000000ull)
    throw std::length_error("scaled_q materialization too large for this grid");
  TripleArray arr;
  arr.n_omega = sphere_.n_dirs;
  arr.n_nodes = K;
  arr.values.assign(total, 0.0);
  const double scale = 1.0 / (std::sqrt(eps) * delta);
  visit_triples([&](const TripleView& tv) {
    double gp = G[tv.k], gp1 = G[tv.k1];
    for (std::size_t p = 0; p < tv.s1_w.size(); ++p)
      gp += tv.s1_w[p] * (G[tv.k + tv.s1_off[p]] - G[tv.k]);
    for (std::size_t p = 0; p < tv.s2_w.size(); ++p)
      gp1 += tv.s2_w[p] * (G[tv.k1 + tv.s2_off[p]] - G[tv.k1]);
    const double v = scale * (gp1 * gp - G[tv.k1] * G[tv.k]);
    arr.at(unfolded_dir(tv.mu_folded, 0), tv.k1, tv.k) = v;
    arr.at(unfolded_dir(tv.mu_folded, 1), tv.k1, tv.k) = v;
  });
  return arr;
}

double CollisionTables::mu_average(const TripleArray& xi) const {
  const auto& g = *grid_;
  if (xi.n_nodes != g.size() || xi.n_omega != sphere_.n_dirs)
    throw std::invalid_argument("triple array does not match tables");
  const auto& w = g.weights();
  double acc = 0.0;
  visit_triples([&](const TripleView& tv) {
    const double halfw = 0.5 * tv.angular_weight * tv.b * w[tv.k1] * w[tv.k];
    acc += halfw * (xi.at(unfolded_dir(tv.mu_folded, 0), tv.k1, tv.k) +
                    xi.at(unfolded_dir(tv.mu_folded, 1), tv.k1, tv.k));
  });
  return acc;
}

void CollisionTables::kplus_matrix(std::vector<double>& matrix, std::vector<double>& a_hat,
                                   std::vector<double>& a_gain) const {
  const auto& g = *grid_;
  const std::size_t K = g.size();
  const auto& w = g.weights();
  a_gain.assign(K, 0.0);
  visit_triples([&](const TripleView& tv) {
    const double mw = tv.angular_weight * tv.b * w[tv.k1] * w[tv.k];
    for (std::size_t p = 0; p < tv.s1_w.size(); ++p)
      a_gain[tv.k + tv.s1_off[p]] += 0.5 * mw * tv.s1_w[p];
    for (std::size_t p = 0; p < tv.s2_w.size(); ++p)
      a_gain[tv.k1 + tv.s2_off[p]] += 0.5 * mw * tv.s2_w[p];
  });
  for (std::size_t k = 0; k < K; ++k) a_gain[k] /= w[k];
  a_hat.resize(K);
  for (std::size_t k = 0; k < K; ++k) a_hat[k] = std::max(a_loss_[k], a_gain[k]);
  matrix.assign(K * K, 0.0);
  visit_triples([&](const TripleView& tv) {
    const double c = tv.angular_weight * tv.b * w[tv.k1] / (2.0 * a_hat[tv.k]);
    double* row = matrix.data() + tv.k * K;
    for (std::size_t p = 0; p < tv.s1_w.size(); ++p) row[tv.k + tv.s1_off[p]] += c * tv.s1_w[p];
    for (std::size_t p = 0; p < tv.s2_w.size(); ++p) row[tv.k1 + tv.s2_off[p]] += c * tv.s2_w[p];
  });
}

void CollisionTables::visit_triples(const std::function<void(const TripleView&)>& f) const {
  const auto& g = *grid_;
  const int D = g.dim(), n = g.n_per_axis();
  for (const Entry& e : entries_) {
    int lo[3], hi[3];
    bool any = true;
    for (int j = 0; j < D; ++j) {
      lo[j] = std::max(0, -int(e.box_lo[j]));
      hi[j] = std::min(n - 1, n - 1 - int(e.box_hi[j]));
      any = any && lo[j] <= hi[j];
    }
    if (!any) continue;
    TripleView tv;
    tv.mu_folded = e.mu;
    tv.angular_weight = fold_weight_[e.mu];
    tv.b = e.b;
    tv.s1_off = {pool_off_.data() + e.s1_begin, e.s1_count};
    tv.s1_w = {pool_w_.data() + e.s1_begin, e.s1_count};
    tv.s2_off = {pool_off_.data() + e.s2_begin, e.s2_count};
    tv.s2_w = {pool_w_.data() + e.s2_begin, e.s2_count};
    std::array<int, 3> mi{lo[0], D > 1 ? lo[1] : 0, D > 2 ? lo[2] : 0};
    while (true) {
      std::size_t k = 0;
      for (int j = 0; j < D; ++j) k = k * n + mi[j];
      tv.k = k;
      tv.k1 = k + e.dflat;
      f(tv);
      int j = D - 1;
      for (; j >= 0; --j) {
        if (++mi[j] <= hi[j]) break;
        mi[j] = lo[j];
      }
      if (j < 0) break;
    }
  }
}

int CollisionTables::unfolded_dir(int folded_id, int which) const {
  return fold_pairs_[folded_id][which];
}

}  // namespace kinlab
