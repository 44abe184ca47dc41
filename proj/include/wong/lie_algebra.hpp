#ifndef WONG_LIE_ALGEBRA_HPP
#define WONG_LIE_ALGEBRA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace wong {

// Finite-dimensional real Lie algebra with a fixed basis.
//
// Index convention used throughout the library: structure constants are stored
// as c[gamma](alpha, beta) = c^gamma_{alpha beta}, i.e. [e_alpha, e_beta] =
// c^gamma_{alpha beta} e_gamma, antisymmetric in (alpha, beta).
struct LieAlgebra {
  std::string name;
  int dim = 0;
  std::vector<Eigen::MatrixXd> c;  // c[gamma](alpha, beta)
  Eigen::MatrixXd k;               // invariant metric on the algebra (SPD)
  Eigen::MatrixXd k_inv;
  bool abelian = false;

  // ad(xi) as a matrix: (ad xi)^gamma_beta = c^gamma_{alpha beta} xi^alpha.
  Eigen::MatrixXd adjoint_matrix(const Eigen::VectorXd& xi) const;

  // Bracket of coordinate vectors: [x, y]^gamma = c^gamma_{ab} x^a y^b.
  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

struct ValidationReport {
  double max_antisymmetry = 0.0;   // |c^g_{ab} + c^g_{ba}|
  double max_jacobi = 0.0;         // cyclic Jacobi residual
  double max_ad_invariance = 0.0;  // |c^s_{ma} k_{sb} + c^s_{mb} k_{as}|
  double killing_consistency = 0.0;  // ||k - (-tr ad ad)|| for semisimple, else 0
  bool semisimple = false;
  bool abelian = false;
  double tolerance = 1e-10;

  bool ok() const {
    return max_antisymmetry <= tolerance && max_jacobi <= tolerance &&
           max_ad_invariance <= tolerance && killing_consistency <= tolerance;
  }
};

// Structural checks: antisymmetry, Jacobi identity, ad-invariance of k, and
// (for semisimple algebras) agreement of k with the sign-fixed Cartan form.
ValidationReport validate_structure(const LieAlgebra& alg);

// -tr(ad ad), which is positive definite for compact semisimple algebras
// (su(2), so(3) -> 2 I).  `sign` = -1 gives the raw Cartan-Killing form.
Eigen::MatrixXd cartan_metric(const LieAlgebra& alg, double sign = +1.0);

// Builtins.
LieAlgebra make_u1(const Eigen::MatrixXd& k_user = Eigen::MatrixXd());
LieAlgebra make_su2();
LieAlgebra make_so3();
LieAlgebra algebra_by_name(const std::string& name);

// User-defined algebra from JSON:
//   { "name": str, "dim": n, "c": [[[c^g_{ab}]]] indexed [g][a][b],
//     "k": [[...]] (optional; required for non-semisimple),
//     "cartan_sign": +1|-1 (optional, default +1) }
// Throws ConfigError / DimensionMismatch on malformed input.
LieAlgebra algebra_from_json(const nlohmann::json& j);

}  // namespace wong

#endif
