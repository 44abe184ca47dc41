#include <cmath>
#include <memory>
#include <string>

#include "wong/chart_system.hpp"
#include "wong/errors.hpp"
#include "wong/group_chart.hpp"

// The five builtin systems.  Each carries analytic derivative evaluators and a
// domain sampler that keeps the Faddeev-Popov matrix well conditioned, so the
// whole reduction pipeline can be exercised at random points without hitting
// the Gribov guard.

namespace wong {

namespace {

Eigen::Vector3d cross(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a.cross(b); }

double uni(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// ---------------------------------------------------------------- so2_halfplane
// Punctured plane with the rotation action; section is the positive x axis.
ChartSystem make_so2_halfplane() {
  ChartSystem sys;
  sys.name = "so2_halfplane";
  sys.n_p = 2;
  sys.algebra = make_u1();
  sys.flat_metric = true;

  sys.metric = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); };
  sys.metric_deriv = [](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2));
  };
  sys.killing = [](const Eigen::VectorXd& q) {
    Eigen::MatrixXd k(2, 1);
    k(0, 0) = -q[1];
    k(1, 0) = q[0];
    return k;
  };
  sys.killing_deriv = [](const Eigen::VectorXd&) {
    std::vector<Eigen::MatrixXd> dk(2, Eigen::MatrixXd::Zero(2, 1));
    dk[0](1, 0) = 1.0;   // d K^y / d x
    dk[1](0, 0) = -1.0;  // d K^x / d y
    return dk;
  };
  sys.constraint = [](const Eigen::VectorXd& q) {
    Eigen::VectorXd chi(1);
    chi[0] = q[1];
    return chi;
  };
  sys.constraint_jac = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd j(1, 2);
    j << 0.0, 1.0;
    return j;
  };
  sys.sample_domain = [](std::mt19937_64& rng) {
    Eigen::VectorXd q(2);
    q[0] = uni(rng, 0.5, 2.5);
    q[1] = uni(rng, -0.4, 0.4);
    return q;
  };
  return sys;
}

// -------------------------------------------------------------------- hopf_s3
// Unit three-sphere in the graph chart q -> (q0, q1, q2, w), w = sqrt(1-|q|^2),
// with the circle action generated by the ambient field (-x2, x1, -x4, x3).
// Section: chi = q1 = 0 near q0 > 0 (phase fixing).
ChartSystem make_hopf_s3() {
  ChartSystem sys;
  sys.name = "hopf_s3";
  sys.n_p = 3;
  sys.algebra = make_u1();
  sys.flat_metric = false;

  auto wsq = [](const Eigen::VectorXd& q) {
    double w2 = 1.0 - q.squaredNorm();
    if (w2 < 1e-6) throw EvaluationFailure("hopf_s3: point outside chart (|q| ~ 1)");
    return w2;
  };

  sys.metric = [wsq](const Eigen::VectorXd& q) {
    const double w2 = wsq(q);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
    g += q * q.transpose() / w2;
    return g;
  };
  sys.metric_deriv = [wsq](const Eigen::VectorXd& q) {
    const double w2 = wsq(q);
    std::vector<Eigen::MatrixXd> dg(3, Eigen::MatrixXd::Zero(3, 3));
    for (int d = 0; d < 3; ++d)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          dg[d](a, b) = ((a == d ? q[b] : 0.0) + (b == d ? q[a] : 0.0)) / w2 +
                        2.0 * q[a] * q[b] * q[d] / (w2 * w2);
    return dg;
  };
  sys.killing = [wsq](const Eigen::VectorXd& q) {
    const double w = std::sqrt(wsq(q));
    Eigen::MatrixXd k(3, 1);
    k(0, 0) = -q[1];
    k(1, 0) = q[0];
    k(2, 0) = -w;
    return k;
  };
  sys.killing_deriv = [wsq](const Eigen::VectorXd& q) {
    const double w = std::sqrt(wsq(q));
    std::vector<Eigen::MatrixXd> dk(3, Eigen::MatrixXd::Zero(3, 1));
    // d(-w)/dq_b = q_b / w
    dk[0](1, 0) = 1.0;
    dk[0](2, 0) = q[0] / w;
    dk[1](0, 0) = -1.0;
    dk[1](2, 0) = q[1] / w;
    dk[2](2, 0) = q[2] / w;
    return dk;
  };
  sys.constraint = [](const Eigen::VectorXd& q) {
    Eigen::VectorXd chi(1);
    chi[0] = q[1];
    return chi;
  };
  sys.constraint_jac = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd j(1, 3);
    j << 0.0, 1.0, 0.0;
    return j;
  };
  sys.sample_domain = [](std::mt19937_64& rng) {
    // keep q0 away from 0 (Faddeev-Popov = q0 for this section) and |q| < 0.85
    for (int tries = 0; tries < 100; ++tries) {
      Eigen::VectorXd q(3);
      q[0] = uni(rng, 0.35, 0.7);
      q[1] = uni(rng, -0.2, 0.2);
      q[2] = uni(rng, -0.35, 0.35);
      if (q.norm() < 0.85) return q;
    }
    throw EvaluationFailure("hopf_s3 sampler failed");
  };
  return sys;
}

// ------------------------------------------------------------- su2_twovector
// Two vectors in R^3 under the diagonal rotation action, K_mu = (x1 x e_mu,
// x2 x e_mu), which satisfies [K_a, K_b] = +eps^g_{ab} K_g.  Flat metric.
// Section: x1 along e3, x2 in the e2-e3 plane.
ChartSystem make_su2_twovector() {
  ChartSystem sys;
  sys.name = "su2_twovector";
  sys.n_p = 6;
  sys.algebra = make_su2();
  sys.flat_metric = true;

  sys.metric = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(6, 6); };
  sys.metric_deriv = [](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(6, Eigen::MatrixXd::Zero(6, 6));
  };
  sys.killing = [](const Eigen::VectorXd& q) {
    Eigen::Vector3d x1 = q.head<3>(), x2 = q.tail<3>();
    Eigen::MatrixXd k(6, 3);
    for (int mu = 0; mu < 3; ++mu) {
      k.col(mu).head<3>() = cross(x1, Eigen::Vector3d::Unit(mu));
      k.col(mu).tail<3>() = cross(x2, Eigen::Vector3d::Unit(mu));
    }
    return k;
  };
  sys.killing_deriv = [](const Eigen::VectorXd&) {
    // d(x x e_mu)/dx_j = e_j x e_mu, independent of the point
    std::vector<Eigen::MatrixXd> dk(6, Eigen::MatrixXd::Zero(6, 3));
    for (int j = 0; j < 3; ++j)
      for (int mu = 0; mu < 3; ++mu) {
        Eigen::Vector3d col = cross(Eigen::Vector3d::Unit(j), Eigen::Vector3d::Unit(mu));
        dk[j].col(mu).head<3>() = col;
        dk[3 + j].col(mu).tail<3>() = col;
      }
    return dk;
  };
  sys.constraint = [](const Eigen::VectorXd& q) {
    Eigen::VectorXd chi(3);
    chi << q[0], q[1], q[3];
    return chi;
  };
  sys.constraint_jac = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 6);
    j(0, 0) = j(1, 1) = j(2, 3) = 1.0;
    return j;
  };
  sys.sample_domain = [sys](std::mt19937_64& rng) {
    for (int tries = 0; tries < 200; ++tries) {
      Eigen::VectorXd q(6);
      q << uni(rng, -0.35, 0.35), uni(rng, -0.35, 0.35), uni(rng, 0.7, 1.3),
          uni(rng, -0.35, 0.35), uni(rng, 0.7, 1.3), uni(rng, 0.7, 1.3);
      Eigen::MatrixXd phi = sys.constraint_jac(q) * sys.killing(q);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
      if (svd.singularValues().minCoeff() > 0.2) return q;
    }
    throw EvaluationFailure("su2_twovector sampler failed");
  };
  return sys;
}

// ------------------------------------------------------------------ kk family
// Trivial bundle (torus base) x G with the right action on the group factor
// and a Kaluza-Klein metric built from a base potential W^alpha_i(x):
//   ds^2 = dx.dx + k(omega, omega),  omega = W dx + (dg) g^{-1},
// so in chart coordinates (x, theta):
//   G_xx = I + W^T k W,  G_xtheta = W^T k u_R,  G_thth = u_R^T k u_R.
// Killing fields of the right action are the left-invariant fields
// K = (0, v(theta)).  Section: theta = 0.
ChartSystem make_kk(const LieAlgebra& alg, const Eigen::MatrixXd& w0,
                    const Eigen::MatrixXd& w1x, const std::string& name) {
  const int d = 2;
  const int ng = alg.dim;
  ChartSystem sys;
  sys.name = name;
  sys.n_p = d + ng;
  sys.algebra = alg;
  sys.flat_metric = false;

  auto chart = std::make_shared<GroupChart>(alg);
  Eigen::MatrixXd kmat = alg.k;

  // W(x) = w0 + w1x * diag-free linear part: W^a_i(x) = w0(a,i) + sum_j w1x(a, i*d+j) x_j
  auto wfun = [w0, w1x, d, ng](const Eigen::VectorXd& x) {
    Eigen::MatrixXd w = w0;
    if (w1x.size() > 0)
      for (int a = 0; a < ng; ++a)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) w(a, i) += w1x(a, i * d + j) * x[j];
    return w;
  };

  sys.metric = [chart, kmat, wfun, d, ng](const Eigen::VectorXd& q) {
    const Eigen::MatrixXd w = wfun(q.head(d));
    const auto ge = chart->eval(q.tail(ng));
    Eigen::MatrixXd g(d + ng, d + ng);
    g.topLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d) + w.transpose() * kmat * w;
    g.topRightCorner(d, ng) = w.transpose() * kmat * ge.u_bar;
    g.bottomLeftCorner(ng, d) = g.topRightCorner(d, ng).transpose();
    g.bottomRightCorner(ng, ng) = ge.u_bar.transpose() * kmat * ge.u_bar;
    return g;
  };
  sys.metric_deriv = [chart, kmat, wfun, w1x, d, ng](const Eigen::VectorXd& q) {
    const Eigen::MatrixXd w = wfun(q.head(d));
    const auto ge = chart->eval(q.tail(ng), true);
    std::vector<Eigen::MatrixXd> dg(d + ng, Eigen::MatrixXd::Zero(d + ng, d + ng));
    // base derivatives through W
    for (int j = 0; j < d; ++j) {
      Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(ng, d);
      if (w1x.size() > 0)
        for (int a = 0; a < ng; ++a)
          for (int i = 0; i < d; ++i) dw(a, i) = w1x(a, i * d + j);
      if (dw.cwiseAbs().maxCoeff() == 0.0) continue;
      dg[j].topLeftCorner(d, d) =
          dw.transpose() * kmat * w + w.transpose() * kmat * dw;
      dg[j].topRightCorner(d, ng) = dw.transpose() * kmat * ge.u_bar;
      dg[j].bottomLeftCorner(ng, d) = dg[j].topRightCorner(d, ng).transpose();
    }
    // group derivatives through u_R
    for (int mu = 0; mu < ng; ++mu) {
      Eigen::MatrixXd& m = dg[d + mu];
      m.topRightCorner(d, ng) = w.transpose() * kmat * ge.d_u_bar[mu];
      m.bottomLeftCorner(ng, d) = m.topRightCorner(d, ng).transpose();
      m.bottomRightCorner(ng, ng) = ge.d_u_bar[mu].transpose() * kmat * ge.u_bar +
                                    ge.u_bar.transpose() * kmat * ge.d_u_bar[mu];
    }
    return dg;
  };
  sys.killing = [chart, d, ng](const Eigen::VectorXd& q) {
    const auto ge = chart->eval(q.tail(ng));
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d + ng, ng);
    k.bottomRows(ng) = ge.v;
    return k;
  };
  sys.killing_deriv = [chart, d, ng](const Eigen::VectorXd& q) {
    const auto ge = chart->eval(q.tail(ng), true);
    std::vector<Eigen::MatrixXd> dk(d + ng, Eigen::MatrixXd::Zero(d + ng, ng));
    for (int mu = 0; mu < ng; ++mu) dk[d + mu].bottomRows(ng) = ge.d_v[mu];
    return dk;
  };
  sys.constraint = [d, ng](const Eigen::VectorXd& q) { return Eigen::VectorXd(q.tail(ng)); };
  sys.constraint_jac = [d, ng](const Eigen::VectorXd&) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(ng, d + ng);
    j.rightCols(ng) = Eigen::MatrixXd::Identity(ng, ng);
    return j;
  };
  sys.sample_domain = [d, ng](std::mt19937_64& rng) {
    Eigen::VectorXd q(d + ng);
    for (int i = 0; i < d; ++i) q[i] = uni(rng, -1.0, 1.0);
    for (int m = 0; m < ng; ++m) q[d + m] = uni(rng, -0.45, 0.45);
    return q;
  };
  return sys;
}

}  // namespace

ChartSystem make_kk_u1(double b_field) {
  // symmetric gauge: W = (-B x2 / 2, B x1 / 2)
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(1, 2);
  Eigen::MatrixXd w1x = Eigen::MatrixXd::Zero(1, 4);
  w1x(0, 0 * 2 + 1) = -0.5 * b_field;  // W_1 depends on x2
  w1x(0, 1 * 2 + 0) = +0.5 * b_field;  // W_2 depends on x1
  return make_kk(make_u1(), w0, w1x, "kk_trivial_u1");
}

ChartSystem make_kk_su2(const Eigen::MatrixXd& potential) {
  if (potential.rows() != 3 || potential.cols() != 2)
    throw DimensionMismatch("kk_trivial_su2 potential must be 3x2");
  return make_kk(make_su2(), potential, Eigen::MatrixXd(), "kk_trivial_su2");
}

ChartSystem builtin(const std::string& name) {
  if (name == "so2_halfplane") return make_so2_halfplane();
  if (name == "hopf_s3") return make_hopf_s3();
  if (name == "su2_twovector") return make_su2_twovector();
  if (name == "kk_trivial_u1") return make_kk_u1(1.0);
  if (name == "kk_trivial_su2") {
    Eigen::MatrixXd w(3, 2);
    w << 0.3, -0.1, 0.2, 0.25, -0.15, 0.1;
    return make_kk_su2(w);
  }
  throw UnknownSystem(name);
}

}  // namespace wong
