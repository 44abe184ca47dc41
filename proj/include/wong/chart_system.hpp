#ifndef WONG_CHART_SYSTEM_HPP
#define WONG_CHART_SYSTEM_HPP

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wong/lie_algebra.hpp"

namespace wong {

// A principal-bundle chart description in dependent coordinates: n_p chart
// coordinates Q on the total space, a free isometric right action of the
// structure group with Killing fields K_mu, and a section cut out by
// chi(Q) = 0 (one constraint per group dimension).
//
// Matrix conventions (used by every module downstream):
//   metric(Q)          G(A,B)       = G_{AB}
//   metric_deriv(Q)    dG[D](A,B)   = d G_{AB} / d Q^D
//   killing(Q)         K(A,mu)      = K^A_mu
//   killing_deriv(Q)   dK[B](A,mu)  = d K^A_mu / d Q^B
//   constraint(Q)      chi(alpha)
//   constraint_jac(Q)  J(alpha,B)   = d chi^alpha / d Q^B
// All evaluators must be defined in a neighbourhood of the section, not just
// on it.
struct ChartSystem {
  std::string name;
  int n_p = 0;
  LieAlgebra algebra;
  bool flat_metric = false;  // true only if G is constant with G-antisymmetric
                             // Killing Jacobians (enables the specialized path)

  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> metric;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> metric_deriv;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> killing;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> killing_deriv;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraint;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> constraint_jac;

  // Draws a random point in the guarded chart domain (not necessarily on the
  // section).  Deterministic given the generator state.
  std::function<Eigen::VectorXd(std::mt19937_64&)> sample_domain;

  double fd_scale = 1.0;  // coordinate scale entering finite-difference steps

  // Structural rank deficiency of the Faddeev-Popov matrix chi_jac * K that
  // the chart guarantees at every point (0 for a transversal section).
  // Periodic-lattice charts have gauge directions tangent to the section at
  // any background; reduce() pseudo-inverts across exactly this many
  // vanishing singular values and treats further degeneracy as a horizon.
  int constraint_corank = 0;

  int n_g() const { return algebra.dim; }
};

// Central finite-difference helpers with step cbrt(eps)*max(1,|Q_i|)*scale.
// Used as fallbacks for systems defined without analytic derivatives and in
// cross-checks of the analytic ones.
std::vector<Eigen::MatrixXd> fd_matrix_derivative(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
    double scale = 1.0);
Eigen::MatrixXd fd_vector_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
    double scale = 1.0);

// Fills metric_deriv / killing_deriv / constraint_jac with finite-difference
// versions derived from the value evaluators (overwrites existing ones).
void use_fd_derivatives(ChartSystem& sys);

// Killing-equation residual at Q:
//   max_| K^C_mu dG_{AB}/dQ^C + G_{CB} dK^C_mu/dQ^A + G_{AC} dK^C_mu/dQ^B |.
double killing_residual(const ChartSystem& sys, const Eigen::VectorXd& q);

// Bracket consistency [K_a, K_b]^A - c^g_{ab} K^A_g, max abs entry.
double bracket_residual(const ChartSystem& sys, const Eigen::VectorXd& q);

// Builtin systems: "so2_halfplane", "hopf_s3", "su2_twovector",
// "kk_trivial_u1", "kk_trivial_su2".  Throws UnknownSystem otherwise.
ChartSystem builtin(const std::string& name);

// Parameterized builtin variants used by configs and tests.
ChartSystem make_kk_u1(double b_field);
ChartSystem make_kk_su2(const Eigen::MatrixXd& potential);  // n_g x d constant

}  // namespace wong

#endif
