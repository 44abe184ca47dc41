#include <cmath>

#include "doctest.h"
#include "wong/errors.hpp"
#include "wong/group_chart.hpp"

using namespace wong;

namespace {

double maxAbs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("expm_taylor on known exponentials") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  CHECK(maxAbs(expm_taylor(z) - Eigen::MatrixXd::Identity(2, 2)) == 0.0);

  const double t = 1.37;
  Eigen::MatrixXd gen(2, 2);
  gen << 0.0, -t, t, 0.0;
  Eigen::MatrixXd rot(2, 2);
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  CHECK(maxAbs(expm_taylor(gen) - rot) <= 1e-13);

  Eigen::MatrixXd one(1, 1);
  one << -3.2;
  CHECK(expm_taylor(one)(0, 0) == doctest::Approx(std::exp(-3.2)).epsilon(1e-13));
}

TEST_CASE("u1 chart is trivial") {
  GroupChart chart(make_u1());
  Eigen::VectorXd th(1);
  th << 0.8;
  auto ge = chart.eval(th, true);
  CHECK(ge.rho(0, 0) == 1.0);
  CHECK(ge.u(0, 0) == 1.0);
  CHECK(ge.u_bar(0, 0) == 1.0);
  CHECK(ge.v(0, 0) == 1.0);
  CHECK(ge.v_bar(0, 0) == 1.0);
  CHECK(maxAbs(ge.d_v[0]) == 0.0);
  CHECK(maxAbs(ge.d_u_bar[0]) == 0.0);
}

TEST_CASE("su2 chart identities") {
  auto alg = make_su2();
  GroupChart chart(alg);
  Eigen::VectorXd th(3);
  th << 0.4, -0.9, 0.55;
  auto ge = chart.eval(th, true);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);

  CHECK(maxAbs(ge.u_bar * ge.u - id) <= 1e-13);
  CHECK(maxAbs(ge.v_bar * ge.v - id) <= 1e-13);
  CHECK(maxAbs(ge.rho - ge.u_bar * ge.v) <= 1e-13);
  CHECK(maxAbs(ge.rho * ge.rho_bar - id) <= 1e-13);

  // rho = exp(ad theta) against the independent matrix exponential
  CHECK(maxAbs(ge.rho - expm_taylor(alg.adjoint_matrix(th))) <= 1e-12);

  // Ad-orthogonality with respect to k: rho^T k rho = k
  CHECK(maxAbs(ge.rho.transpose() * alg.k * ge.rho - alg.k) <= 1e-12);
}

TEST_CASE("so3 closed form for the exp-chart translation") {
  // For the epsilon basis ad^3 = -phi^2 ad, and the series sums to
  // u_R = I + (1 - cos phi)/phi^2 ad + (phi - sin phi)/phi^3 ad^2.
  auto alg = make_so3();
  GroupChart chart(alg);
  Eigen::VectorXd th(3);
  th << -0.3, 0.7, 1.1;
  const double phi = th.norm();
  Eigen::MatrixXd ad = alg.adjoint_matrix(th);
  Eigen::MatrixXd closed = Eigen::MatrixXd::Identity(3, 3) +
                           (1.0 - std::cos(phi)) / (phi * phi) * ad +
                           (phi - std::sin(phi)) / (phi * phi * phi) * ad * ad;
  auto ge = chart.eval(th);
  CHECK(maxAbs(ge.u_bar - closed) <= 1e-13);
  // u_L is the transpose-flip: ad -> -ad
  Eigen::MatrixXd closedL = Eigen::MatrixXd::Identity(3, 3) -
                            (1.0 - std::cos(phi)) / (phi * phi) * ad +
                            (phi - std::sin(phi)) / (phi * phi * phi) * ad * ad;
  CHECK(maxAbs(ge.v_bar - closedL) <= 1e-13);
}

TEST_CASE("chart derivatives match finite differences") {
  auto alg = make_su2();
  GroupChart chart(alg);
  Eigen::VectorXd th(3);
  th << 0.25, 0.6, -0.45;
  auto ge = chart.eval(th, true);
  const double h = 1e-6;
  for (int mu = 0; mu < 3; ++mu) {
    Eigen::VectorXd tp = th, tm = th;
    tp[mu] += h;
    tm[mu] -= h;
    auto gp = chart.eval(tp);
    auto gm = chart.eval(tm);
    CHECK(maxAbs((gp.rho - gm.rho) / (2 * h) - ge.d_rho[mu]) <= 1e-8);
    CHECK(maxAbs((gp.u_bar - gm.u_bar) / (2 * h) - ge.d_u_bar[mu]) <= 1e-8);
    CHECK(maxAbs((gp.v_bar - gm.v_bar) / (2 * h) - ge.d_v_bar[mu]) <= 1e-8);
    CHECK(maxAbs((gp.u - gm.u) / (2 * h) - ge.d_u[mu]) <= 1e-8);
    CHECK(maxAbs((gp.v - gm.v) / (2 * h) - ge.d_v[mu]) <= 1e-8);
  }
}

TEST_CASE("left-invariant fields differentiate rho into structure constants") {
  // L_alpha rho^g_b = c^m_{ab} rho^g_m, with L_alpha = v e_alpha in chart
  // coordinates.  Directional finite difference against the algebraic side.
  auto alg = make_su2();
  GroupChart chart(alg);
  Eigen::VectorXd th(3);
  th << 0.5, -0.2, 0.35;
  auto ge = chart.eval(th, true);
  for (int a = 0; a < 3; ++a) {
    Eigen::VectorXd dir = ge.v.col(a);
    Eigen::MatrixXd deriv = Eigen::MatrixXd::Zero(3, 3);
    for (int mu = 0; mu < 3; ++mu) deriv += ge.d_rho[mu] * dir[mu];
    Eigen::MatrixXd ca(3, 3);
    for (int m = 0; m < 3; ++m)
      for (int b = 0; b < 3; ++b) ca(m, b) = alg.c[m](a, b);
    CHECK(maxAbs(deriv - ge.rho * ca) <= 1e-12);
  }
}

TEST_CASE("trust radius guard") {
  GroupChart chart(make_su2(), 30, 4.0);
  Eigen::VectorXd far(3);
  far << 40.0, 0.0, 0.0;
  CHECK_THROWS_AS(chart.eval(far), EvaluationFailure);
}
