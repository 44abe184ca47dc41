#include "wong/reduction.hpp"

#include <cmath>

#include "wong/errors.hpp"

namespace wong {

namespace {

// condition number from singular values, with a typed error on blowup
void guard_condition(const Eigen::MatrixXd& m, double cond_limit, const char* what,
                     bool orbit_error) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv.minCoeff();
  if (smin <= 0.0 || sv.maxCoeff() / smin > cond_limit) {
    if (orbit_error) throw DegenerateOrbit(what);
    throw GribovHorizon(what);
  }
}

// Moore-Penrose inverse across a known corank: the trailing `corank` singular
// values must sit at numerical zero (else the declared structure is wrong)
// and the retained block is condition-guarded like a regular inversion.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, int corank, double cond_limit,
                               const char* what) {
  const int n = static_cast<int>(m.rows());
  if (corank < 0 || corank > n) throw DimensionMismatch("pseudo_inverse: bad corank");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const int rank = n - corank;
  const double smax = sv.size() ? sv[0] : 0.0;
  if (corank > 0 && rank > 0 && sv[rank] > 1e-10 * std::max(1.0, smax))
    throw EvaluationFailure("declared corank exceeds the actual rank deficiency");
  if (rank > 0 && (sv[rank - 1] <= 0.0 || smax / sv[rank - 1] > cond_limit))
    throw GribovHorizon(what);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < rank; ++i) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

ReductionData reduce(const ChartSystem& sys, const Eigen::VectorXd& q, double cond_limit,
                     bool derivative_tables) {
  if (q.size() != sys.n_p) throw DimensionMismatch("reduce: q size != n_p");
  ReductionData r;
  r.n_p = sys.n_p;
  r.n_g = sys.n_g();
  const int np = r.n_p, ng = r.n_g;
  const auto& c = sys.algebra.c;

  r.G = sys.metric(q);
  if (derivative_tables) r.dG = sys.metric_deriv(q);
  r.K = sys.killing(q);
  r.dK = sys.killing_deriv(q);
  r.chi = sys.constraint(q);
  r.chi_jac = sys.constraint_jac(q);

  Eigen::LLT<Eigen::MatrixXd> gllt(r.G);
  if (gllt.info() != Eigen::Success) throw DegenerateMetric("configuration metric not SPD");
  r.G_inv = gllt.solve(Eigen::MatrixXd::Identity(np, np));

  // orbit metric
  r.gamma = r.K.transpose() * r.G * r.K;
  r.gamma = 0.5 * (r.gamma + r.gamma.transpose()).eval();
  guard_condition(r.gamma, cond_limit, "orbit metric gamma ill-conditioned", true);
  Eigen::LLT<Eigen::MatrixXd> gam_llt(r.gamma);
  if (gam_llt.info() != Eigen::Success) throw DegenerateOrbit("orbit metric not SPD");
  r.gamma_inv = gam_llt.solve(Eigen::MatrixXd::Identity(ng, ng));

  // Faddeev-Popov matrix.  A constraint whose Jacobian vanishes identically
  // constrains nothing (degenerate discretizations produce this, e.g. central
  // differences on a period-2 lattice); the section is then the whole chart
  // and the oblique projectors are the identity.
  r.phi = r.chi_jac * r.K;
  if (r.chi_jac.cwiseAbs().maxCoeff() == 0.0) {
    r.phi_inv = Eigen::MatrixXd::Zero(ng, ng);
    r.lambda = Eigen::MatrixXd::Zero(ng, np);
    r.n_proj = Eigen::MatrixXd::Identity(np, np);
    r.p_perp = Eigen::MatrixXd::Identity(np, np);
  } else if (sys.constraint_corank == 0) {
    guard_condition(r.phi, cond_limit, "Faddeev-Popov matrix singular", false);
    r.phi_inv = Eigen::FullPivLU<Eigen::MatrixXd>(r.phi).inverse();
    r.lambda = r.phi_inv * r.chi_jac;
    r.n_proj = Eigen::MatrixXd::Identity(np, np) - r.K * r.lambda;
    Eigen::MatrixXd jgj = r.chi_jac * r.G_inv * r.chi_jac.transpose();
    Eigen::LLT<Eigen::MatrixXd> jgj_llt(jgj);
    if (jgj_llt.info() != Eigen::Success)
      throw EvaluationFailure("constraint jacobian is rank-deficient");
    r.p_perp = Eigen::MatrixXd::Identity(np, np) -
               r.G_inv * r.chi_jac.transpose() *
                   jgj_llt.solve(Eigen::MatrixXd::Identity(ng, ng)) * r.chi_jac;
  } else {
    // The chart declares gauge directions tangent to the section; invert on
    // the complement of that fixed-dimension kernel and flag anything beyond
    // it as a horizon.
    r.phi_inv = pseudo_inverse(r.phi, sys.constraint_corank, cond_limit,
                               "Faddeev-Popov matrix singular beyond the declared corank");
    r.lambda = r.phi_inv * r.chi_jac;
    r.n_proj = Eigen::MatrixXd::Identity(np, np) - r.K * r.lambda;
    Eigen::MatrixXd jgj = r.chi_jac * r.G_inv * r.chi_jac.transpose();
    Eigen::MatrixXd jgj_pinv = pseudo_inverse(jgj, sys.constraint_corank, cond_limit,
                                              "constraint normal matrix singular beyond "
                                              "the declared corank");
    r.p_perp =
        Eigen::MatrixXd::Identity(np, np) - r.G_inv * r.chi_jac.transpose() * jgj_pinv * r.chi_jac;
  }

  // mechanical connection
  r.mech_conn = r.gamma_inv * r.K.transpose() * r.G;
  r.pi_proj = Eigen::MatrixXd::Identity(np, np) - r.K * r.mech_conn;

  // horizontal metric G^H = Pi^T G Pi = G - A^T gamma A
  r.h_metric = r.pi_proj.transpose() * r.G * r.pi_proj;
  r.h_metric = 0.5 * (r.h_metric + r.h_metric.transpose()).eval();

  if (!derivative_tables) return r;

  // coordinate derivative of gamma and of the connection
  r.dgamma_coord.assign(np, Eigen::MatrixXd());
  r.dconn.assign(np, Eigen::MatrixXd());
  for (int d = 0; d < np; ++d) {
    r.dgamma_coord[d] = r.dK[d].transpose() * r.G * r.K + r.K.transpose() * r.dG[d] * r.K +
                        r.K.transpose() * r.G * r.dK[d];
    r.dconn[d] = r.gamma_inv * (-r.dgamma_coord[d] * r.mech_conn +
                                r.dK[d].transpose() * r.G + r.K.transpose() * r.dG[d]);
  }

  // curvature F[nu](E,P) = dconn[E](nu,P) - dconn[P](nu,E) + c A A
  r.curvature.assign(ng, Eigen::MatrixXd::Zero(np, np));
  for (int nu = 0; nu < ng; ++nu) {
    for (int e = 0; e < np; ++e)
      for (int p = 0; p < np; ++p)
        r.curvature[nu](e, p) = r.dconn[e](nu, p) - r.dconn[p](nu, e);
    // + c^nu_{beta sigma} A^beta_E A^sigma_P
    r.curvature[nu] += r.mech_conn.transpose() * c[nu] * r.mech_conn;
  }

  // covariant derivative of gamma: D_E gamma = d gamma - ad(A_E)^T gamma - gamma ad(A_E)
  r.dgamma.assign(np, Eigen::MatrixXd());
  r.dgamma_inv.assign(np, Eigen::MatrixXd());
  for (int e = 0; e < np; ++e) {
    Eigen::MatrixXd ad_a = sys.algebra.adjoint_matrix(r.mech_conn.col(e));
    r.dgamma[e] = r.dgamma_coord[e] - ad_a.transpose() * r.gamma - r.gamma * ad_a;
    r.dgamma_inv[e] = -r.gamma_inv * r.dgamma[e] * r.gamma_inv;
  }

  // derivative of the horizontal metric
  r.dh_metric.assign(np, Eigen::MatrixXd());
  for (int d = 0; d < np; ++d) {
    Eigen::MatrixXd w = r.dconn[d].transpose() * r.gamma * r.mech_conn;
    r.dh_metric[d] = r.dG[d] - w - w.transpose() -
                     r.mech_conn.transpose() * r.dgamma_coord[d] * r.mech_conn;
  }

  // HGamma from the half-sum relation: G^H is degenerate along the gauge
  // directions, so solve with the SPD completion G^H + K gamma K^T and fix the
  // unobservable vertical component by projecting with N.
  Eigen::MatrixXd reg = r.h_metric + r.K * r.gamma * r.K.transpose();
  Eigen::LLT<Eigen::MatrixXd> reg_llt(reg);
  if (reg_llt.info() != Eigen::Success)
    throw DegenerateMetric("regularized horizontal metric not SPD");
  Eigen::MatrixXd halfsum(np, np * np);
  for (int cidx = 0; cidx < np; ++cidx)
    for (int d = 0; d < np; ++d)
      for (int a = 0; a < np; ++a)
        halfsum(a, cidx * np + d) = 0.5 * (r.dh_metric[d](a, cidx) + r.dh_metric[cidx](a, d) -
                                           r.dh_metric[a](cidx, d));
  Eigen::MatrixXd sol = r.n_proj * reg_llt.solve(halfsum);
  r.h_christoffel.assign(np, Eigen::MatrixXd(np, np));
  for (int b = 0; b < np; ++b)
    for (int cidx = 0; cidx < np; ++cidx)
      for (int d = 0; d < np; ++d) r.h_christoffel[b](cidx, d) = sol(b, cidx * np + d);

  r.ghat = r.n_proj * r.G_inv * r.n_proj.transpose();

  // nonholonomic frame structure functions (diagnostics)
  r.struct_q.assign(np, Eigen::MatrixXd::Zero(np, np));
  for (int a = 0; a < np; ++a)
    for (int cc = 0; cc < np; ++cc)
      for (int d = 0; d < np; ++d) {
        double s = 0.0;
        for (int g = 0; g < ng; ++g)
          s += r.lambda(g, cc) * r.dK[d](a, g) - r.lambda(g, d) * r.dK[cc](a, g);
        r.struct_q[a](cc, d) = s;
      }
  r.struct_g.assign(ng, Eigen::MatrixXd());
  for (int g = 0; g < ng; ++g)
    r.struct_g[g] = -r.n_proj.transpose() * r.curvature[g] * r.n_proj;

  return r;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orbit_metric(const ChartSystem& sys,
                                                         const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  return {r.gamma, r.gamma_inv};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fp_matrix(const ChartSystem& sys,
                                                      const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  return {r.phi, r.phi_inv};
}

Projectors projectors(const ChartSystem& sys, const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  return {r.p_perp, r.n_proj, r.pi_proj, r.lambda};
}

Eigen::MatrixXd mechanical_connection(const ChartSystem& sys, const Eigen::VectorXd& q) {
  return reduce(sys, q).mech_conn;
}

std::vector<Eigen::MatrixXd> curvature(const ChartSystem& sys, const Eigen::VectorXd& q) {
  return reduce(sys, q).curvature;
}

std::pair<Eigen::MatrixXd, std::vector<Eigen::MatrixXd>> horizontal_metric_christoffels(
    const ChartSystem& sys, const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  return {r.h_metric, r.h_christoffel};
}

std::pair<std::vector<Eigen::MatrixXd>, std::vector<Eigen::MatrixXd>>
covariant_derivative_gamma(const ChartSystem& sys, const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  return {r.dgamma, r.dgamma_inv};
}

NonholonomicChristoffels nonholonomic_christoffels(const ChartSystem& sys,
                                                   const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  const int np = r.n_p, ng = r.n_g;
  const auto& c = sys.algebra.c;
  NonholonomicChristoffels t;

  t.q_qq.assign(np, Eigen::MatrixXd::Zero(np, np));
  for (int d = 0; d < np; ++d)
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < np; ++b) {
        double s = 0.0;
        for (int e = 0; e < np; ++e) s += r.n_proj(e, a) * r.h_christoffel[d](b, e);
        t.q_qq[d](a, b) = s;
      }

  t.g_qq.assign(ng, Eigen::MatrixXd());
  for (int mu = 0; mu < ng; ++mu)
    t.g_qq[mu] = -0.5 * r.n_proj.transpose() * r.curvature[mu] * r.n_proj;

  // T[mu] = G^{-1} N^T F[mu]^T N has (P,B) = sum_S G^{PS} (N^T F[mu] N)(B,S)
  std::vector<Eigen::MatrixXd> tmu(ng);
  for (int mu = 0; mu < ng; ++mu)
    tmu[mu] = r.G_inv * r.n_proj.transpose() * r.curvature[mu].transpose() * r.n_proj;
  t.q_gq.assign(np, Eigen::MatrixXd::Zero(ng, np));
  t.q_qg.assign(np, Eigen::MatrixXd::Zero(np, ng));
  for (int p = 0; p < np; ++p)
    for (int al = 0; al < ng; ++al)
      for (int b = 0; b < np; ++b) {
        double s = 0.0;
        for (int mu = 0; mu < ng; ++mu) s += r.gamma(mu, al) * tmu[mu](p, b);
        t.q_gq[p](al, b) = 0.5 * s;
        t.q_qg[p](b, al) = 0.5 * s;
      }

  // contraction N^E_S D_E gamma, reused by three blocks
  std::vector<Eigen::MatrixXd> ndg(np);  // [S](alpha,beta)
  for (int s = 0; s < np; ++s) {
    ndg[s] = Eigen::MatrixXd::Zero(ng, ng);
    for (int e = 0; e < np; ++e) ndg[s] += r.n_proj(e, s) * r.dgamma[e];
  }
  t.q_gg.assign(np, Eigen::MatrixXd::Zero(ng, ng));
  for (int p = 0; p < np; ++p)
    for (int s = 0; s < np; ++s) t.q_gg[p] -= 0.5 * r.G_inv(p, s) * ndg[s];

  t.g_gq.assign(ng, Eigen::MatrixXd::Zero(ng, np));
  t.g_qg.assign(ng, Eigen::MatrixXd::Zero(np, ng));
  for (int mu = 0; mu < ng; ++mu)
    for (int al = 0; al < ng; ++al)
      for (int b = 0; b < np; ++b) {
        double s = 0.0;
        for (int nu = 0; nu < ng; ++nu) s += r.gamma_inv(mu, nu) * ndg[b](al, nu);
        t.g_gq[mu](al, b) = 0.5 * s;
        t.g_qg[mu](b, al) = 0.5 * s;
      }

  t.g_gg.assign(ng, Eigen::MatrixXd::Zero(ng, ng));
  for (int mu = 0; mu < ng; ++mu)
    for (int al = 0; al < ng; ++al)
      for (int be = 0; be < ng; ++be) {
        double s = 0.0;
        for (int nu = 0; nu < ng; ++nu)
          for (int sg = 0; sg < ng; ++sg)
            s += r.gamma_inv(mu, nu) *
                 (c[sg](al, be) * r.gamma(sg, nu) - c[sg](nu, be) * r.gamma(al, sg) -
                  c[sg](nu, al) * r.gamma(be, sg));
        t.g_gg[mu](al, be) = 0.5 * s;
      }

  return t;
}

double pseudoinverse_check(const ChartSystem& sys, const Eigen::VectorXd& q) {
  auto r = reduce(sys, q);
  const int np = r.n_p, ng = r.n_g;
  const int n = np + ng;

  // block metric at the group identity (group translation factors = id)
  Eigen::MatrixXd big(n, n);
  big.topLeftCorner(np, np) = r.p_perp.transpose() * r.G * r.p_perp;
  big.topRightCorner(np, ng) = r.p_perp.transpose() * r.G * r.K;
  big.bottomLeftCorner(ng, np) = big.topRightCorner(np, ng).transpose();
  big.bottomRightCorner(ng, ng) = r.gamma;

  // pseudoinverse blocks: rows of T = [N; phi^{-1} chi_jac] against G^{-1}
  Eigen::MatrixXd t(n, np);
  t.topRows(np) = r.n_proj;
  t.bottomRows(ng) = r.lambda;
  Eigen::MatrixXd pinv = t * r.G_inv * t.transpose();

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(n, n);
  expected.topLeftCorner(np, np) = r.p_perp;
  expected.bottomRightCorner(ng, ng) = Eigen::MatrixXd::Identity(ng, ng);

  return (pinv * big - expected).cwiseAbs().maxCoeff();
}

}  // namespace wong
