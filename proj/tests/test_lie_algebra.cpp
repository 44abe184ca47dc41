#include <nlohmann/json.hpp>

#include "doctest.h"
#include "wong/errors.hpp"
#include "wong/lie_algebra.hpp"

using namespace wong;

TEST_CASE("su2 structure and metric") {
  auto alg = make_su2();
  CHECK(alg.dim == 3);
  CHECK(!alg.abelian);

  auto rep = validate_structure(alg);
  CHECK(rep.max_antisymmetry <= 1e-14);
  CHECK(rep.max_jacobi <= 1e-14);
  CHECK(rep.max_ad_invariance <= 1e-14);
  CHECK(rep.semisimple);
  CHECK(rep.ok());

  // double contraction -c^t_{am} c^m_{bt} for the epsilon basis, by hand:
  // diagonal entries are 2, off-diagonal vanish.
  Eigen::MatrixXd expected = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  CHECK((alg.k - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((cartan_metric(alg, +1.0) - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((cartan_metric(alg, -1.0) + expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("so3 mirrors su2 in the epsilon basis") {
  auto a = make_so3();
  auto b = make_su2();
  REQUIRE(a.dim == b.dim);
  for (int g = 0; g < a.dim; ++g)
    CHECK((a.c[g] - b.c[g]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("u1 is abelian with unit metric by default") {
  auto alg = make_u1();
  CHECK(alg.dim == 1);
  CHECK(alg.abelian);
  CHECK(alg.c[0](0, 0) == 0.0);
  CHECK(alg.k(0, 0) == 1.0);
  auto rep = validate_structure(alg);
  CHECK(rep.abelian);
  CHECK(rep.ok());

  Eigen::MatrixXd k(1, 1);
  k << 2.5;
  auto scaled = make_u1(k);
  CHECK(scaled.k(0, 0) == 2.5);
  CHECK(scaled.k_inv(0, 0) == doctest::Approx(0.4));
}

TEST_CASE("bracket and adjoint agree") {
  auto alg = make_su2();
  Eigen::VectorXd x(3), y(3);
  x << 0.3, -1.2, 0.7;
  y << 1.1, 0.4, -0.2;
  Eigen::VectorXd viaAd = alg.adjoint_matrix(x) * y;
  Eigen::VectorXd viaC = alg.bracket(x, y);
  CHECK((viaAd - viaC).cwiseAbs().maxCoeff() <= 1e-15);
  // cross product in the epsilon basis
  Eigen::Vector3d xv = x, yv = y;
  CHECK((viaC - Eigen::VectorXd(xv.cross(yv))).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("validation flags a broken Jacobi identity") {
  // note: rescaling c^0_{12} alone would NOT break Jacobi (any diagonal
  // scaling of the epsilon brackets is still a Lie algebra); mixing e0 into
  // [e0, e1] does.
  auto alg = make_su2();
  alg.c[0](0, 1) += 0.05;
  alg.c[0](1, 0) -= 0.05;  // keep antisymmetry so only Jacobi trips
  auto rep = validate_structure(alg);
  CHECK(rep.max_antisymmetry <= 1e-14);
  CHECK(rep.max_jacobi > 1e-3);
  CHECK(!rep.ok());
}

TEST_CASE("validation flags non-invariant metric") {
  auto alg = make_su2();
  alg.k(0, 0) = 3.0;  // breaks ad-invariance (isotropy)
  auto rep = validate_structure(alg);
  CHECK(rep.max_ad_invariance > 1e-3);
  CHECK(!rep.ok());
}

TEST_CASE("algebra from json") {
  nlohmann::json j;
  j["name"] = "su2_json";
  j["dim"] = 3;
  // c[g][a][b] for the epsilon basis
  auto ref = make_su2();
  std::vector<std::vector<std::vector<double>>> c(3);
  for (int g = 0; g < 3; ++g) {
    c[g].resize(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) c[g][a].push_back(ref.c[g](a, b));
  }
  j["c"] = c;

  auto alg = algebra_from_json(j);
  CHECK(alg.name == "su2_json");
  CHECK(validate_structure(alg).ok());
  CHECK((alg.k - ref.k).cwiseAbs().maxCoeff() <= 1e-14);

  SUBCASE("explicit metric wins") {
    j["k"] = {{4.0, 0.0, 0.0}, {0.0, 4.0, 0.0}, {0.0, 0.0, 4.0}};
    auto custom = algebra_from_json(j);
    CHECK(custom.k(1, 1) == 4.0);
    CHECK(custom.k_inv(1, 1) == doctest::Approx(0.25));
  }
  SUBCASE("cartan_sign flips the default metric") {
    j["cartan_sign"] = -1;
    CHECK_THROWS_AS(algebra_from_json(j), ConfigError);  // not positive definite
  }
  SUBCASE("shape errors are rejected") {
    j["dim"] = 2;
    CHECK_THROWS_AS(algebra_from_json(j), Error);
  }
}

TEST_CASE("algebra_by_name") {
  CHECK(algebra_by_name("u1").abelian);
  CHECK(algebra_by_name("su2").dim == 3);
  CHECK(algebra_by_name("so3").dim == 3);
  CHECK_THROWS_AS(algebra_by_name("e8"), UnknownSystem);
}
