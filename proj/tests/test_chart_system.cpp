#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "wong/chart_system.hpp"
#include "wong/errors.hpp"

using namespace wong;

namespace {

double maxAbs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

const std::vector<std::string> kBuiltins = {
    "so2_halfplane", "hopf_s3", "su2_twovector", "kk_trivial_u1", "kk_trivial_su2"};

}  // namespace

TEST_CASE("builtin lookup") {
  for (const auto& name : kBuiltins) {
    auto sys = builtin(name);
    CHECK(sys.name == name);
    CHECK(sys.n_p > 0);
    CHECK(sys.metric);
    CHECK(sys.sample_domain);
  }
  CHECK_THROWS_AS(builtin("nope"), UnknownSystem);
}

TEST_CASE("analytic derivatives match finite differences") {
  std::mt19937_64 rng(2024);
  for (const auto& name : kBuiltins) {
    CAPTURE(name);
    auto sys = builtin(name);
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::VectorXd q = sys.sample_domain(rng);

      auto dg = sys.metric_deriv(q);
      auto dgFd = fd_matrix_derivative(sys.metric, q, sys.fd_scale);
      auto dk = sys.killing_deriv(q);
      auto dkFd = fd_matrix_derivative(sys.killing, q, sys.fd_scale);
      Eigen::MatrixXd j = sys.constraint_jac(q);
      Eigen::MatrixXd jFd = fd_vector_jacobian(sys.constraint, q, sys.fd_scale);

      for (int d = 0; d < sys.n_p; ++d) {
        CHECK(maxAbs(dg[d] - dgFd[d]) <= 2e-6);
        CHECK(maxAbs(dk[d] - dkFd[d]) <= 2e-6);
      }
      CHECK(maxAbs(j - jFd) <= 2e-6);
    }
  }
}

TEST_CASE("metric is symmetric positive definite on the sampled domain") {
  std::mt19937_64 rng(7);
  for (const auto& name : kBuiltins) {
    CAPTURE(name);
    auto sys = builtin(name);
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::VectorXd q = sys.sample_domain(rng);
      Eigen::MatrixXd g = sys.metric(q);
      CHECK(maxAbs(g - g.transpose()) <= 1e-14);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      CHECK(es.eigenvalues().minCoeff() > 1e-8);
    }
  }
}

TEST_CASE("killing equation and bracket relations hold") {
  std::mt19937_64 rng(99);
  for (const auto& name : kBuiltins) {
    CAPTURE(name);
    auto sys = builtin(name);
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::VectorXd q = sys.sample_domain(rng);
      CHECK(killing_residual(sys, q) <= 1e-8);
      CHECK(bracket_residual(sys, q) <= 1e-8);
    }
  }
}

TEST_CASE("finite-difference fallback reproduces the analytic evaluators") {
  auto sys = builtin("hopf_s3");
  auto fd = sys;
  use_fd_derivatives(fd);
  std::mt19937_64 rng(5);
  Eigen::VectorXd q = sys.sample_domain(rng);
  auto dg = sys.metric_deriv(q);
  auto dgFd = fd.metric_deriv(q);
  for (int d = 0; d < sys.n_p; ++d) CHECK(maxAbs(dg[d] - dgFd[d]) <= 1e-6);
  CHECK(killing_residual(fd, q) <= 1e-5);
  CHECK(bracket_residual(fd, q) <= 1e-5);
}

TEST_CASE("so2_halfplane frozen values") {
  auto sys = builtin("so2_halfplane");
  Eigen::VectorXd q(2);
  q << 2.0, 0.0;
  Eigen::MatrixXd k = sys.killing(q);
  CHECK(k(0, 0) == 0.0);
  CHECK(k(1, 0) == 2.0);
  CHECK(sys.constraint(q)[0] == 0.0);
  Eigen::MatrixXd phi = sys.constraint_jac(q) * k;
  CHECK(phi(0, 0) == 2.0);
}

TEST_CASE("hopf_s3 fiber has unit length") {
  // K^T G K = 1 identically for the round metric in the graph chart.
  auto sys = builtin("hopf_s3");
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 6; ++rep) {
    Eigen::VectorXd q = sys.sample_domain(rng);
    Eigen::MatrixXd k = sys.killing(q);
    Eigen::MatrixXd gamma = k.transpose() * sys.metric(q) * k;
    CHECK(gamma(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sys.metric(Eigen::Vector3d(0.8, 0.5, 0.4)), EvaluationFailure);
}

TEST_CASE("su2_twovector section point") {
  auto sys = builtin("su2_twovector");
  Eigen::VectorXd q(6);
  q << 0.0, 0.0, 1.0, 0.0, 1.0, 1.0;
  CHECK(sys.constraint(q).norm() == 0.0);
  Eigen::MatrixXd phi = sys.constraint_jac(q) * sys.killing(q);
  // rows pick (x1 x e_mu)_0, (x1 x e_mu)_1, (x2 x e_mu)_0
  Eigen::MatrixXd expected(3, 3);
  expected << 0, -1, 0, 1, 0, 0, 0, -1, 1;
  CHECK(maxAbs(phi - expected) <= 1e-15);
  CHECK(phi.determinant() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("kk_trivial_u1 frozen metric") {
  auto sys = make_kk_u1(1.0);
  Eigen::VectorXd q(3);
  q << 1.0, 2.0, 0.3;  // u(1): group block independent of theta
  Eigen::MatrixXd g = sys.metric(q);
  Eigen::MatrixXd expected(3, 3);
  // W = (-x2/2, x1/2) = (-1, 0.5)
  expected << 2.0, -0.5, -1.0, -0.5, 1.25, 0.5, -1.0, 0.5, 1.0;
  CHECK(maxAbs(g - expected) <= 1e-14);
}

TEST_CASE("kk_trivial_su2 orbit metric is the algebra metric") {
  // K^T G K = rho^T k rho = k by Ad-invariance, at every chart point.
  auto sys = builtin("kk_trivial_su2");
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd q = sys.sample_domain(rng);
    Eigen::MatrixXd k = sys.killing(q);
    Eigen::MatrixXd gamma = k.transpose() * sys.metric(q) * k;
    CHECK(maxAbs(gamma - sys.algebra.k) <= 1e-12);
  }
}

TEST_CASE("kk_trivial_su2 rejects bad potential shape") {
  CHECK_THROWS_AS(make_kk_su2(Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
}
