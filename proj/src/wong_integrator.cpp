#include "wong/wong_integrator.hpp"

#include <cmath>
#include <sstream>

#include "wong/errors.hpp"

namespace wong {

namespace {

// dp for the vertical equation. The momentum is carried in the frame of the
// Killing vectors at the section point, so it rotates with both the gauge
// part of the velocity (classic Wong precession) and with itself:
//   dp = ad(A v)' p - ad(gamma^{-1} p)' p.
// This is the unique combination that conserves 1/2 v'G^H v + 1/2 p'g^{-1}p
// exactly; the optional gamma_coupling term spoils that balance whenever
// gamma varies over the section.
Eigen::VectorXd vertical_rhs(const LieAlgebra& alg, const ReductionData& r,
                             const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                             const VerticalTermWeights& weights) {
  const int ng = r.n_g;
  if (alg.abelian) return Eigen::VectorXd::Zero(ng);
  Eigen::VectorXd w = r.mech_conn * v;
  Eigen::VectorXd phat = r.gamma_inv * p;
  Eigen::MatrixXd ad_w = alg.adjoint_matrix(w);
  Eigen::VectorXd dp = weights.classic * (ad_w.transpose() * p);
  if (weights.rotation != 0.0)
    dp -= weights.rotation *
          (alg.adjoint_matrix(phat).transpose() * p);
  if (weights.gamma_coupling != 0.0)
    dp += weights.gamma_coupling * (r.gamma * (ad_w * phat));
  return dp;
}

// sum_E v^E dK[E], the Killing differential contracted along a base direction
Eigen::MatrixXd dk_along(const std::vector<Eigen::MatrixXd>& dk,
                         const Eigen::VectorXd& dir) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dk[0].rows(), dk[0].cols());
  for (int e = 0; e < static_cast<int>(dk.size()); ++e)
    if (dir[e] != 0.0) out += dir[e] * dk[e];
  return out;
}

}  // namespace

StateDerivative wong_rhs(const ChartSystem& sys, const WongState& s,
                         const VerticalTermWeights& vertical) {
  auto r = reduce(sys, s.q_star);
  const int np = r.n_p, ng = r.n_g;
  if (s.v.size() != np || s.p.size() != ng)
    throw DimensionMismatch("wong_rhs: state shape does not match system");

  StateDerivative d;
  d.dq = s.v;

  // quadratic velocity term from the stored horizontal Christoffel table
  Eigen::VectorXd hgvv(np);
  for (int a = 0; a < np; ++a) hgvv[a] = s.v.dot(r.h_christoffel[a] * s.v);

  // curvature force covector f_F = F^n_{EF} v^E p_n
  Eigen::VectorXd fvec = Eigen::VectorXd::Zero(np);
  for (int nu = 0; nu < ng; ++nu)
    fvec += s.p[nu] * (r.curvature[nu].transpose() * s.v);

  // colour-charge force covector h_E = 1/2 p' (D_E gamma^{-1}) p
  Eigen::VectorXd hvec(np);
  for (int e = 0; e < np; ++e)
    hvec[e] = 0.5 * s.p.dot(r.dgamma_inv[e] * s.p);

  d.dv = -(hgvv + r.ghat * (fvec + hvec));
  d.dp = vertical_rhs(sys.algebra, r, s.v, s.p, vertical);
  return d;
}

StateDerivative wong_rhs_flat(const ChartSystem& sys, const WongState& s,
                              const FlatTermWeights& weights,
                              FlatBreakdown* breakdown,
                              const VerticalTermWeights& vertical) {
  if (!sys.flat_metric)
    throw NotFlat("wong_rhs_flat requires a position-independent metric: " +
                  sys.name);
  auto r = reduce(sys, s.q_star, 1e12, false);
  const int np = r.n_p, ng = r.n_g;
  if (s.v.size() != np || s.p.size() != ng)
    throw DimensionMismatch("wong_rhs_flat: state shape does not match system");
  const LieAlgebra& alg = sys.algebra;

  Eigen::VectorXd w = r.mech_conn * s.v;    // vertical part of v in the algebra
  Eigen::VectorXd phat = r.gamma_inv * s.p;
  Eigen::MatrixXd dk_v = dk_along(r.dK, s.v);
  Eigen::MatrixXd dk_kw = dk_along(r.dK, r.K * w);
  Eigen::MatrixXd dk_kp = dk_along(r.dK, r.K * phat);

  // horizontal Christoffel contraction, flattened: two pieces
  std::array<Eigen::VectorXd, 2> hg;
  hg[0] = 2.0 * (dk_v * w);
  hg[1] = -(dk_kw * w);

  // the six expanded curvature terms, each contracted with (v, p); they enter
  // dv with a minus sign which is folded in here
  std::array<Eigen::VectorXd, 6> ft;
  ft[0] = -2.0 * (r.K * (r.gamma_inv * (dk_kp.transpose() * (r.G * s.v))));
  ft[2] = -2.0 * (dk_v * phat);
  ft[3] = 2.0 * (dk_kp * w);
  if (alg.abelian) {
    ft[1] = Eigen::VectorXd::Zero(np);
    ft[4] = Eigen::VectorXd::Zero(np);
    ft[5] = Eigen::VectorXd::Zero(np);
  } else {
    Eigen::VectorXd gw = r.gamma * w;
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(ng);
    for (int sg = 0; sg < ng; ++sg) m2 += gw[sg] * (alg.c[sg] * phat);
    ft[1] = -(r.K * (r.gamma_inv * m2));
    ft[4] = r.K * alg.bracket(w, phat);
    ft[5] = -(r.K * (r.gamma_inv * (alg.adjoint_matrix(w).transpose() * s.p)));
  }

  // covariant-derivative-of-gamma pair contracted with (p, p)
  std::array<Eigen::VectorXd, 2> dg;
  dg[0] = -(dk_kp * phat);
  if (alg.abelian) {
    dg[1] = Eigen::VectorXd::Zero(np);
  } else {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(ng);
    for (int kp = 0; kp < ng; ++kp) m += s.p[kp] * (alg.c[kp] * phat);
    dg[1] = -(r.K * (r.gamma_inv * m));
  }

  Eigen::VectorXd raw = Eigen::VectorXd::Zero(np);
  for (int i = 0; i < 6; ++i) raw += weights.curvature[i] * ft[i];
  for (int i = 0; i < 2; ++i) raw += weights.christoffel[i] * hg[i];
  for (int i = 0; i < 2; ++i) raw += weights.dgamma[i] * dg[i];

  if (breakdown) {
    breakdown->curvature = ft;
    breakdown->christoffel = hg;
    breakdown->dgamma = dg;
  }

  StateDerivative d;
  d.dq = s.v;
  // The expanded term sum carries a pure range(K) component (the expansions
  // reproduce the unprojected covector forces exactly; those are horizontal,
  // K^T f = 0, but not section-tangent once raised). The N projection removes
  // exactly that component and is what makes the flat path agree with the
  // general path vector-for-vector.
  d.dv = r.n_proj * raw;
  d.dp = vertical_rhs(alg, r, s.v, s.p, vertical);
  return d;
}

Eigen::VectorXd project_constraint(const ChartSystem& sys,
                                   const Eigen::VectorXd& q, double tol,
                                   int max_iters) {
  Eigen::VectorXd cur = q;
  double res = sys.constraint(cur).cwiseAbs().maxCoeff();
  if (res <= tol) return cur;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd chi = sys.constraint(cur);
    Eigen::MatrixXd jac = sys.constraint_jac(cur);
    Eigen::MatrixXd gram = jac * jac.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
      throw ProjectionDiverged("constraint Jacobian lost rank at |chi| = " +
                               std::to_string(res));
    cur -= jac.transpose() * ldlt.solve(chi);
    res = sys.constraint(cur).cwiseAbs().maxCoeff();
    if (res <= tol) return cur;
  }
  throw ProjectionDiverged("projection stalled at |chi| = " +
                           std::to_string(res));
}

double energy(const ChartSystem& sys, const WongState& s) {
  auto r = reduce(sys, s.q_star);
  return 0.5 * s.v.dot(r.h_metric * s.v) +
         0.5 * s.p.dot(r.gamma_inv * s.p);
}

namespace {

WongState axpy(const WongState& s, double a, const StateDerivative& d) {
  return {s.q_star + a * d.dq, s.v + a * d.dv, s.p + a * d.dp};
}

StateDerivative eval_rhs(const ChartSystem& sys, const WongState& s,
                         const IntegrateOptions& opts) {
  if (opts.flat_path)
    return wong_rhs_flat(sys, s, {}, nullptr, opts.vertical);
  return wong_rhs(sys, s, opts.vertical);
}

WongState rk4_step(const ChartSystem& sys, const WongState& s, double dt,
                   const IntegrateOptions& opts) {
  auto k1 = eval_rhs(sys, s, opts);
  auto k2 = eval_rhs(sys, axpy(s, 0.5 * dt, k1), opts);
  auto k3 = eval_rhs(sys, axpy(s, 0.5 * dt, k2), opts);
  auto k4 = eval_rhs(sys, axpy(s, dt, k3), opts);
  WongState out = s;
  out.q_star += dt / 6.0 * (k1.dq + 2 * k2.dq + 2 * k3.dq + k4.dq);
  out.v += dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
  out.p += dt / 6.0 * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
  return out;
}

// Fehlberg 4(5) embedded pair; returns the 5th-order solution and the
// embedded error estimate.
WongState rkf45_step(const ChartSystem& sys, const WongState& s, double dt,
                     const IntegrateOptions& opts, double* err) {
  // autonomous RHS, so the time-offset coefficients are not needed
  static const double b21 = 1.0 / 4;
  static const double b31 = 3.0 / 32, b32 = 9.0 / 32;
  static const double b41 = 1932.0 / 2197, b42 = -7200.0 / 2197,
                      b43 = 7296.0 / 2197;
  static const double b51 = 439.0 / 216, b52 = -8.0, b53 = 3680.0 / 513,
                      b54 = -845.0 / 4104;
  static const double b61 = -8.0 / 27, b62 = 2.0, b63 = -3544.0 / 2565,
                      b64 = 1859.0 / 4104, b65 = -11.0 / 40;
  static const double c51 = 16.0 / 135, c53 = 6656.0 / 12825,
                      c54 = 28561.0 / 56430, c55 = -9.0 / 50, c56 = 2.0 / 55;
  static const double c41 = 25.0 / 216, c43 = 1408.0 / 2565,
                      c44 = 2197.0 / 4104, c45 = -1.0 / 5;

  auto k1 = eval_rhs(sys, s, opts);
  auto s2 = axpy(s, dt * b21, k1);
  auto k2 = eval_rhs(sys, s2, opts);
  WongState s3 = {s.q_star + dt * (b31 * k1.dq + b32 * k2.dq),
                  s.v + dt * (b31 * k1.dv + b32 * k2.dv),
                  s.p + dt * (b31 * k1.dp + b32 * k2.dp)};
  auto k3 = eval_rhs(sys, s3, opts);
  WongState s4 = {s.q_star + dt * (b41 * k1.dq + b42 * k2.dq + b43 * k3.dq),
                  s.v + dt * (b41 * k1.dv + b42 * k2.dv + b43 * k3.dv),
                  s.p + dt * (b41 * k1.dp + b42 * k2.dp + b43 * k3.dp)};
  auto k4 = eval_rhs(sys, s4, opts);
  WongState s5 = {
      s.q_star + dt * (b51 * k1.dq + b52 * k2.dq + b53 * k3.dq + b54 * k4.dq),
      s.v + dt * (b51 * k1.dv + b52 * k2.dv + b53 * k3.dv + b54 * k4.dv),
      s.p + dt * (b51 * k1.dp + b52 * k2.dp + b53 * k3.dp + b54 * k4.dp)};
  auto k5 = eval_rhs(sys, s5, opts);
  WongState s6 = {s.q_star + dt * (b61 * k1.dq + b62 * k2.dq + b63 * k3.dq +
                                   b64 * k4.dq + b65 * k5.dq),
                  s.v + dt * (b61 * k1.dv + b62 * k2.dv + b63 * k3.dv +
                              b64 * k4.dv + b65 * k5.dv),
                  s.p + dt * (b61 * k1.dp + b62 * k2.dp + b63 * k3.dp +
                              b64 * k4.dp + b65 * k5.dp)};
  auto k6 = eval_rhs(sys, s6, opts);

  WongState hi = {s.q_star + dt * (c51 * k1.dq + c53 * k3.dq + c54 * k4.dq +
                                   c55 * k5.dq + c56 * k6.dq),
                  s.v + dt * (c51 * k1.dv + c53 * k3.dv + c54 * k4.dv +
                              c55 * k5.dv + c56 * k6.dv),
                  s.p + dt * (c51 * k1.dp + c53 * k3.dp + c54 * k4.dp +
                              c55 * k5.dp + c56 * k6.dp)};
  WongState lo = {
      s.q_star + dt * (c41 * k1.dq + c43 * k3.dq + c44 * k4.dq + c45 * k5.dq),
      s.v + dt * (c41 * k1.dv + c43 * k3.dv + c44 * k4.dv + c45 * k5.dv),
      s.p + dt * (c41 * k1.dp + c43 * k3.dp + c44 * k4.dp + c45 * k5.dp)};
  double e = (hi.q_star - lo.q_star).cwiseAbs().maxCoeff();
  e = std::max(e, (hi.v - lo.v).cwiseAbs().maxCoeff());
  e = std::max(e, (hi.p - lo.p).cwiseAbs().maxCoeff());
  *err = e;
  return hi;
}

void enforce_section(const ChartSystem& sys, WongState& s,
                     const IntegrateOptions& opts) {
  s.q_star = project_constraint(sys, s.q_star, opts.projection_tol,
                                opts.max_projection_iters);
  auto pr = projectors(sys, s.q_star);
  s.v = pr.n_proj * s.v;
  // sweep out roundoff along the constraint normals
  Eigen::MatrixXd jac = sys.constraint_jac(s.q_star);
  Eigen::VectorXd resid = jac * s.v;
  if (resid.cwiseAbs().maxCoeff() > 0.0)
    s.v -= jac.transpose() * (jac * jac.transpose()).ldlt().solve(resid);
}

void record(const ChartSystem& sys, Trajectory& tr, double t,
            const WongState& s) {
  auto r = reduce(sys, s.q_star);
  tr.times.push_back(t);
  tr.states.push_back(s);
  tr.energy.push_back(0.5 * s.v.dot(r.h_metric * s.v) +
                      0.5 * s.p.dot(r.gamma_inv * s.p));
  tr.chi_residual.push_back(sys.constraint(s.q_star).cwiseAbs().maxCoeff());
  tr.p_knorm.push_back(std::sqrt(std::abs(s.p.dot(sys.algebra.k_inv * s.p))));
  tr.p_gammanorm.push_back(std::sqrt(std::abs(s.p.dot(r.gamma_inv * s.p))));
}

}  // namespace

Trajectory integrate(const ChartSystem& sys, const WongState& s0, double dt,
                     int n_steps, const IntegrateOptions& opts) {
  if (dt == 0.0) throw ConfigError("integrate: dt must be nonzero");
  if (n_steps < 0) throw ConfigError("integrate: n_steps must be >= 0");
  Trajectory tr;
  WongState s = s0;
  double t = 0.0;
  record(sys, tr, t, s);

  if (!opts.adaptive) {
    for (int step = 0; step < n_steps; ++step) {
      try {
        s = rk4_step(sys, s, dt, opts);
        if (opts.project) enforce_section(sys, s, opts);
      } catch (const Error& e) {
        std::ostringstream msg;
        msg << "step failed at t = " << t << ": " << e.what();
        throw StepFailure(msg.str());
      }
      t += dt;
      record(sys, tr, t, s);
    }
    return tr;
  }

  // adaptive: cover the same span [0, n_steps*dt] with error-controlled steps
  const double t_end = n_steps * dt;
  const double dir = dt > 0 ? 1.0 : -1.0;
  double h = dt;
  long guard = 0;
  while (dir * (t_end - t) > 1e-15 * std::abs(t_end)) {
    if (++guard > 2000000) throw StepFailure("adaptive step count exceeded");
    if (dir * (t + h) > dir * t_end) h = t_end - t;
    double err = 0.0;
    WongState cand;
    try {
      cand = rkf45_step(sys, s, h, opts, &err);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "step failed at t = " << t << ": " << e.what();
      throw StepFailure(msg.str());
    }
    if (err <= opts.adaptive_tol || std::abs(h) < 1e-14) {
      s = cand;
      if (opts.project) enforce_section(sys, s, opts);
      t += h;
      record(sys, tr, t, s);
      if (err > 0.0)
        h *= std::min(4.0, 0.9 * std::pow(opts.adaptive_tol / err, 0.2));
      else
        h *= 4.0;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(opts.adaptive_tol / err, 0.25));
    }
  }
  return tr;
}

}  // namespace wong
