#include "wong/geodesic_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wong/errors.hpp"

namespace wong {
namespace {

// Minimal point data for the block metric, computed straight from the value
// evaluators.  Deliberately separate from reduce(): the oracle must not share
// the analytic derivative machinery it is used to validate.
struct Pieces {
  Eigen::MatrixXd g;
  Eigen::MatrixXd k;
  Eigen::MatrixXd p_perp;
  Eigen::MatrixXd n;       // I - K Phi^{-1} chi_jac
  Eigen::MatrixXd lam;     // Phi^{-1} chi_jac
  Eigen::MatrixXd gamma;   // K^T G K
  Eigen::LLT<Eigen::MatrixXd> g_llt;
  int n_p = 0, n_g = 0;
};

Pieces pieces(const ChartSystem& sys, const Eigen::VectorXd& q) {
  Pieces pc;
  pc.n_p = sys.n_p;
  pc.n_g = sys.n_g();
  pc.g = sys.metric(q);
  pc.k = sys.killing(q);
  Eigen::MatrixXd chi_jac = sys.constraint_jac(q);
  pc.g_llt.compute(pc.g);
  if (pc.g_llt.info() != Eigen::Success)
    throw DegenerateMetric("total-space metric not positive definite at evaluation point");
  Eigen::MatrixXd ginv_chit = pc.g_llt.solve(chi_jac.transpose());
  Eigen::FullPivLU<Eigen::MatrixXd> s_lu(chi_jac * ginv_chit);
  if (!s_lu.isInvertible())
    throw DegenerateMetric("constraint Jacobian loses rank, normal projector undefined");
  pc.p_perp = Eigen::MatrixXd::Identity(pc.n_p, pc.n_p) - ginv_chit * s_lu.solve(chi_jac);
  Eigen::FullPivLU<Eigen::MatrixXd> phi_lu(chi_jac * pc.k);
  if (!phi_lu.isInvertible())
    throw DegenerateMetric("section-orbit pairing singular, pseudoinverse undefined");
  pc.lam = phi_lu.solve(chi_jac);
  pc.n = Eigen::MatrixXd::Identity(pc.n_p, pc.n_p) - pc.k * pc.lam;
  pc.gamma = pc.k.transpose() * pc.g * pc.k;
  return pc;
}

Eigen::MatrixXd assemble(const Pieces& pc, const Eigen::MatrixXd& u_bar) {
  Eigen::MatrixXd b(pc.n_p, pc.n_p + pc.n_g);
  b.leftCols(pc.n_p) = pc.p_perp;
  b.rightCols(pc.n_g) = pc.k * u_bar;
  return b.transpose() * pc.g * b;
}

Eigen::MatrixXd pinv_from(const Pieces& pc, const Eigen::MatrixXd& u) {
  Eigen::MatrixXd t(pc.n_p + pc.n_g, pc.n_p);
  t.topRows(pc.n_p) = pc.n;
  t.bottomRows(pc.n_g) = u * pc.lam;
  return t * pc.g_llt.solve(t.transpose());
}

// Geodesic acceleration -Gamma(ydot, ydot) with the Christoffel contraction
// expanded directly from central differences of the block metric.
Eigen::VectorXd geo_acc(const ChartSystem& sys, const GroupChart& chart, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w) {
  const int np = sys.n_p, ng = sys.n_g(), nt = np + ng;
  const Eigen::VectorXd q = y.head(np);
  const Eigen::VectorXd a = y.tail(ng);
  const Pieces pc = pieces(sys, q);
  const GroupChartEval ch = chart.eval(a);
  const Eigen::MatrixXd pinv = pinv_from(pc, ch.u);

  const double hq = 1e-5 * sys.fd_scale;
  const double ha = 1e-5;
  Eigen::VectorXd grad_term = Eigen::VectorXd::Zero(nt);  // sum_A w^A (d_A g) w
  Eigen::VectorXd quad(nt);                               // w^T (d_D g) w
  for (int idx = 0; idx < nt; ++idx) {
    Eigen::MatrixXd gp, gm;
    double h;
    if (idx < np) {
      h = hq;
      Eigen::VectorXd qp = q, qm = q;
      qp[idx] += h;
      qm[idx] -= h;
      gp = assemble(pieces(sys, qp), ch.u_bar);
      gm = assemble(pieces(sys, qm), ch.u_bar);
    } else {
      h = ha;
      Eigen::VectorXd ap = a, am = a;
      ap[idx - np] += h;
      am[idx - np] -= h;
      gp = assemble(pc, chart.eval(ap).u_bar);
      gm = assemble(pc, chart.eval(am).u_bar);
    }
    const Eigen::MatrixXd dg = (gp - gm) / (2.0 * h);
    const Eigen::VectorXd dgw = dg * w;
    grad_term += w[idx] * dgw;
    quad[idx] = w.dot(dgw);
  }
  return pinv * (0.5 * quad - grad_term);
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Eigen::MatrixXd total_metric(const ChartSystem& sys, const GroupChart& chart,
                             const Eigen::VectorXd& q, const Eigen::VectorXd& a) {
  return assemble(pieces(sys, q), chart.eval(a).u_bar);
}

Eigen::MatrixXd total_metric_pseudoinverse(const ChartSystem& sys, const GroupChart& chart,
                                           const Eigen::VectorXd& q, const Eigen::VectorXd& a) {
  return pinv_from(pieces(sys, q), chart.eval(a).u);
}

double total_energy(const ChartSystem& sys, const GroupChart& chart, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& ydot) {
  const Eigen::MatrixXd g = total_metric(sys, chart, y.head(sys.n_p), y.tail(sys.n_g()));
  return 0.5 * ydot.dot(g * ydot);
}

TotalTrajectory geodesic_integrate(const ChartSystem& sys, const GroupChart& chart,
                                   const Eigen::VectorXd& y0, const Eigen::VectorXd& ydot0,
                                   double dt, int n_steps) {
  const int np = sys.n_p, nt = np + sys.n_g();
  if (y0.size() != nt || ydot0.size() != nt)
    throw DimensionMismatch("geodesic initial data must have length n_p + n_g");

  TotalTrajectory out;
  out.times.reserve(n_steps + 1);
  out.y.reserve(n_steps + 1);
  out.ydot.reserve(n_steps + 1);
  out.energy.reserve(n_steps + 1);

  Eigen::VectorXd y = y0, w = ydot0;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.y.push_back(y);
    out.ydot.push_back(w);
    out.energy.push_back(total_energy(sys, chart, y, w));
  };
  record(0.0);

  for (int step = 0; step < n_steps; ++step) {
    try {
      const Eigen::VectorXd k1y = w;
      const Eigen::VectorXd k1w = geo_acc(sys, chart, y, w);
      const Eigen::VectorXd k2y = w + 0.5 * dt * k1w;
      const Eigen::VectorXd k2w = geo_acc(sys, chart, y + 0.5 * dt * k1y, k2y);
      const Eigen::VectorXd k3y = w + 0.5 * dt * k2w;
      const Eigen::VectorXd k3w = geo_acc(sys, chart, y + 0.5 * dt * k2y, k3y);
      const Eigen::VectorXd k4y = w + dt * k3w;
      const Eigen::VectorXd k4w = geo_acc(sys, chart, y + dt * k3y, k4y);
      y += (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      w += (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

      y.head(np) = project_constraint(sys, y.head(np));
      w.head(np) = pieces(sys, y.head(np)).n * w.head(np);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "geodesic step failed at t = " << (step * dt) << ": " << e.what();
      throw StepFailure(msg.str());
    }
    record((step + 1) * dt);
  }
  return out;
}

TangentSplit decompose(const ChartSystem& sys, const GroupChart& chart, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& ydot) {
  const int np = sys.n_p, ng = sys.n_g(), nt = np + ng;
  if (y.size() != nt || ydot.size() != nt)
    throw DimensionMismatch("decompose expects length n_p + n_g");
  const Pieces pc = pieces(sys, y.head(np));
  const GroupChartEval ch = chart.eval(y.tail(ng));

  Eigen::LLT<Eigen::MatrixXd> gam_llt(pc.gamma);
  if (gam_llt.info() != Eigen::Success)
    throw DegenerateBasis("orbit metric not positive definite, frame undefined");
  const Eigen::MatrixXd conn = gam_llt.solve(pc.k.transpose() * pc.g);

  TangentSplit split;
  split.z_h = pc.n * ydot.head(np);
  const Eigen::VectorXd conn_h = ch.rho_bar * (conn * split.z_h);
  split.z_v = ch.v_bar * ydot.tail(ng) + conn_h;

  // reconstruction residual: H z_h + L z_v must reproduce ydot
  const Eigen::VectorXd adot_rec = ch.v * (split.z_v - conn_h);
  const double scale = std::max(1.0, std::max(max_abs(ydot.head(np)), max_abs(ydot.tail(ng))));
  const double resid = std::max(max_abs(split.z_h - ydot.head(np)), max_abs(adot_rec - ydot.tail(ng)));
  if (resid > 1e-8 * scale)
    throw DegenerateBasis("tangent vector has a component outside the frame span");

  split.v = split.z_h;
  split.p = pc.gamma * (ch.rho * split.z_v);
  return split;
}

GeodesicComparison compare_with_geodesic(const ChartSystem& sys, const WongState& s0, double dt,
                                         int n_steps, const VerticalTermWeights& vertical) {
  const int np = sys.n_p, ng = sys.n_g();
  GroupChart chart(sys.algebra);

  IntegrateOptions opts;
  opts.vertical = vertical;
  const Trajectory reduced = integrate(sys, s0, dt, n_steps, opts);

  const Pieces pc = pieces(sys, s0.q_star);
  Eigen::LLT<Eigen::MatrixXd> gam_llt(pc.gamma);
  if (gam_llt.info() != Eigen::Success)
    throw DegenerateBasis("orbit metric not positive definite at initial point");
  const Eigen::MatrixXd conn = gam_llt.solve(pc.k.transpose() * pc.g);

  Eigen::VectorXd y0(np + ng), yd0(np + ng);
  y0 << s0.q_star, Eigen::VectorXd::Zero(ng);
  yd0.head(np) = s0.v;
  yd0.tail(ng) = gam_llt.solve(s0.p) - conn * s0.v;
  const TotalTrajectory geo = geodesic_integrate(sys, chart, y0, yd0, dt, n_steps);

  GeodesicComparison rep;
  rep.dt = dt;
  rep.n_steps = n_steps;
  for (std::size_t i = 0; i < geo.y.size(); ++i) {
    const TangentSplit split = decompose(sys, chart, geo.y[i], geo.ydot[i]);
    const WongState& s = reduced.states[i];
    rep.dq = std::max(rep.dq, max_abs(geo.y[i].head(np) - s.q_star));
    rep.dv = std::max(rep.dv, max_abs(split.v - s.v));
    rep.dp = std::max(rep.dp, max_abs(split.p - s.p));
    rep.oracle_energy_drift =
        std::max(rep.oracle_energy_drift, std::abs(geo.energy[i] - geo.energy.front()));
  }
  return rep;
}

}  // namespace wong
