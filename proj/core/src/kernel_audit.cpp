#include "kinlab/kernel_audit.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

namespace kinlab {

AuditReport audit_assumptions(const CollisionTables& tables, const AuditOptions& opts) {
  const auto& g = tables.grid();
  const int D = g.dim();
  const std::size_t K = g.size();
  AuditReport rep;
  rep.kernel = tables.spec().family_name();
  rep.dim = D;
  rep.n_per_axis = g.n_per_axis();
  rep.v_max = g.v_max();
  rep.n_omega = tables.n_omega();
  rep.s = opts.s;
  rep.mu_mass = tables.mu_mass();
  rep.z_b = tables.spec().z_b;

  const std::vector<double> a = tables.attenuation();

  // (i) bLimit along v = r e1, K = the truncated box, plain Lebesgue measure
  {
    const double h = g.spacing();
    const double cellvol = std::pow(h, D);
    const int nr = 24;
    for (int i = 0; i < nr; ++i) {
      const double r = 3.0 * g.v_max() * (i + 1) / nr;
      double acc = 0.0;
      std::vector<double> vrel(D);
      for (std::size_t k1 = 0; k1 < K; ++k1) {
        for (int j = 0; j < D; ++j) vrel[j] = g.node(k1, j) - (j == 0 ? r : 0.0);
        acc += cellvol * tables.bbar_at(vrel);
      }
      rep.blimit_radii.push_back(r);
      rep.blimit_values.push_back(acc / (1.0 + r * r));
    }
    const int q = nr / 4;
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < q; ++i) head += rep.blimit_values[i];
    for (int i = nr - q; i < nr; ++i) tail += rep.blimit_values[i];
    rep.blimit_decays = tail < head;
  }

  // (ii) least-squares exponent of log a vs log(1+|v|^2); C_a as the sharp
  // on-grid constant so the lower bound holds at every node
  {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double x = std::log1p(g.speed2(k));
      const double y = std::log(a[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double nK = static_cast<double>(K);
    rep.beta_a = (sxy - sx * sy / nK) / (sxx - sx * sx / nK);
    double cmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k)
      cmin = std::min(cmin, a[k] / std::pow(1.0 + g.speed2(k), rep.beta_a));
    rep.c_a = cmin;
  }

  // (iii) C_b = sup_v ( sum w1 a1 |bbar/(a1 a)|^s )^(1/s)
  {
    const int n = g.n_per_axis();
    const int dn = 2 * n - 1;
    double sup = 0.0;
    std::vector<double> vrel(D);
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t k1 = 0; k1 < K; ++k1) {
        if (k1 == k) continue;
        for (int j = 0; j < D; ++j) vrel[j] = g.node(k1, j) - g.node(k, j);
        const double bb = tables.bbar_at(vrel);
        acc += g.weights()[k1] * a[k1] * std::pow(bb / (a[k1] * a[k]), opts.s);
      }
      sup = std::max(sup, std::pow(acc, 1.0 / opts.s));
    }
    rep.c_b = sup;
    (void)dn;
  }

  // (iv) saturation ratio per delta over all grid pairs
  for (double dl : opts.delta_list) {
    double sup = 0.0;
    std::vector<double> vrel(D);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t k1 = 0; k1 < K; ++k1) {
        if (k1 == k) continue;
        for (int j = 0; j < D; ++j) vrel[j] = g.node(k1, j) - g.node(k, j);
        double V2 = 0.0;
        for (int j = 0; j < D; ++j) V2 += vrel[j] * vrel[j];
        const double bb = tables.bbar_at(vrel);
        const double sat = bb / (1.0 + dl * bb / (1.0 + V2));
        sup = std::max(sup, sat / ((1.0 + a[k1]) * (1.0 + a[k])));
      }
    rep.delta_list.push_back(dl);
    rep.c_delta.push_back(sup);
  }

  // (v) K+ operator norm and leading singular values
  {
    std::vector<double> M, ahat, again;
    tables.kplus_matrix(M, ahat, again);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        A(M.data(), K, K);
    Eigen::VectorXd shat(K), sdef(K);
    for (std::size_t k = 0; k < K; ++k) {
      shat(k) = std::sqrt(ahat[k] * g.weights()[k]);
      sdef(k) = std::sqrt(a[k] * g.weights()[k]);
    }
    Eigen::MatrixXd Sim = shat.asDiagonal() * A * shat.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Sim);
    const auto& sv = svd.singularValues();
    rep.kplus_norm = sv(0);
    for (int i = 0; i < std::min<int>(opts.n_singular_values, sv.size()); ++i)
      rep.kplus_singular_values.push_back(sv(i));
    // informational: the same matrix measured in the aDef-weighted space,
    // with rows rescaled to the aDef attenuation
    Eigen::MatrixXd Adef = A;
    for (std::size_t k = 0; k < K; ++k) Adef.row(k) *= ahat[k] / a[k];
    Eigen::MatrixXd Sim2 = sdef.asDiagonal() * Adef * sdef.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd2(Sim2);
    rep.kplus_norm_adef = svd2.singularValues()(0);
  }
  return rep;
}

std::string AuditReport::to_json() const {
  nlohmann::json j;
  j["kernel"] = kernel;
  j["grid"] = {{"D", dim}, {"n", n_per_axis}, {"v_max", v_max}, {"n_omega", n_omega}};
  j["blimit"] = {{"radii", blimit_radii}, {"values", blimit_values}, {"decays", blimit_decays}};
  j["attenuation_bound"] = {{"beta_a", beta_a}, {"C_a", c_a}};
  j["b_bound"] = {{"s", s}, {"C_b", c_b}};
  j["saturation"] = {{"delta", delta_list}, {"C_delta", c_delta}};
  j["kplus"] = {{"norm", kplus_norm},
                {"norm_adef_weight", kplus_norm_adef},
                {"singular_values", kplus_singular_values}};
  j["mu_mass"] = mu_mass;
  j["z_b"] = z_b;
  return j.dump(2);
}

}  // namespace kinlab
