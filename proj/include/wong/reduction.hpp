#ifndef WONG_REDUCTION_HPP
#define WONG_REDUCTION_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "wong/chart_system.hpp"

namespace wong {

// Pointwise reduction geometry at one configuration Q*.  Index conventions
// follow chart_system.hpp: matrices are (upper index = row, lower = col);
// derivative tensors are vectors over the derivative index.
struct ReductionData {
  // cached evaluator output
  Eigen::MatrixXd G, G_inv;         // n_p x n_p
  std::vector<Eigen::MatrixXd> dG;  // [D](A,B)
  Eigen::MatrixXd K;                // n_p x n_g
  std::vector<Eigen::MatrixXd> dK;  // [B](A,mu)
  Eigen::VectorXd chi;              // n_g
  Eigen::MatrixXd chi_jac;          // n_g x n_p

  // orbit metric and Faddeev-Popov matrix
  Eigen::MatrixXd gamma, gamma_inv;  // n_g x n_g
  Eigen::MatrixXd phi, phi_inv;      // n_g x n_g

  // projectors
  Eigen::MatrixXd p_perp;   // onto T(section) along G-normals of chi
  Eigen::MatrixXd n_proj;   // I - K phi^{-1} chi_jac
  Eigen::MatrixXd pi_proj;  // I - K A (horizontal projector)
  Eigen::MatrixXd lambda;   // phi^{-1} chi_jac  (n_g x n_p)

  // connection and curvature
  Eigen::MatrixXd mech_conn;              // A^nu_P = gamma^{-1} K^T G
  std::vector<Eigen::MatrixXd> dconn;     // [D](nu,P) = partial_D A
  std::vector<Eigen::MatrixXd> curvature; // [nu](E,P), antisymmetric in (E,P)

  // horizontal metric and its Christoffel symbols
  Eigen::MatrixXd h_metric;                    // G^H = Pi^T G Pi
  std::vector<Eigen::MatrixXd> dh_metric;      // [D](A,B) = partial_D G^H
  std::vector<Eigen::MatrixXd> h_christoffel;  // [B](C,D), symmetric in (C,D)

  // orbit metric derivatives
  std::vector<Eigen::MatrixXd> dgamma_coord;  // [D] partial_D gamma
  std::vector<Eigen::MatrixXd> dgamma;        // [E] covariant D_E gamma
  std::vector<Eigen::MatrixXd> dgamma_inv;    // [E] covariant D_E gamma^{-1}

  // Eq-style pseudoinverse upper block N G^{-1} N^T, used to raise the force
  // terms of the reduced equation while keeping the result section-tangent.
  Eigen::MatrixXd ghat;

  // structure functions of the nonholonomic (H, L) frame, diagnostics
  std::vector<Eigen::MatrixXd> struct_q;  // C^A_{CD}, [A](C,D)
  std::vector<Eigen::MatrixXd> struct_g;  // C^alpha_{CD}, [alpha](C,D)

  int n_p = 0, n_g = 0;
};

// Full pointwise computation.  Throws DegenerateMetric / DegenerateOrbit /
// GribovHorizon on the guarded inversions (condition number > cond_limit).
// With derivative_tables = false only the pointwise objects up to mech_conn
// are filled (dG and all derivative tables stay empty); that is what the
// flat-metric fast path needs and it avoids O(n_p^3) table assembly on large
// flattened systems.
ReductionData reduce(const ChartSystem& sys, const Eigen::VectorXd& q,
                     double cond_limit = 1e12, bool derivative_tables = true);

// Thin single-quantity entry points (each runs the needed part of reduce).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orbit_metric(const ChartSystem& sys,
                                                         const Eigen::VectorXd& q);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fp_matrix(const ChartSystem& sys,
                                                      const Eigen::VectorXd& q);

struct Projectors {
  Eigen::MatrixXd p_perp, n_proj, pi_proj, lambda;
};
Projectors projectors(const ChartSystem& sys, const Eigen::VectorXd& q);

Eigen::MatrixXd mechanical_connection(const ChartSystem& sys, const Eigen::VectorXd& q);
std::vector<Eigen::MatrixXd> curvature(const ChartSystem& sys, const Eigen::VectorXd& q);

std::pair<Eigen::MatrixXd, std::vector<Eigen::MatrixXd>> horizontal_metric_christoffels(
    const ChartSystem& sys, const Eigen::VectorXd& q);

// (D_E gamma, D_E gamma^{-1})
std::pair<std::vector<Eigen::MatrixXd>, std::vector<Eigen::MatrixXd>>
covariant_derivative_gamma(const ChartSystem& sys, const Eigen::VectorXd& q);

// Christoffel symbols of the block metric in the nonholonomic frame,
// evaluated at the group identity.  Block naming: q = chart index, g = group
// index; the first letter is the upper index, the trailing two the lower pair
// in printed order.
struct NonholonomicChristoffels {
  std::vector<Eigen::MatrixXd> q_qq;  // [D](A,B) = N^E_A HGamma^D_{BE}
  std::vector<Eigen::MatrixXd> g_qq;  // [mu](A,B) = -1/2 (N^T F[mu] N)(A,B)
  std::vector<Eigen::MatrixXd> q_gq;  // [P](alpha,B)
  std::vector<Eigen::MatrixXd> q_qg;  // [P](A,beta)
  std::vector<Eigen::MatrixXd> q_gg;  // [P](alpha,beta)
  std::vector<Eigen::MatrixXd> g_gq;  // [mu](alpha,B)
  std::vector<Eigen::MatrixXd> g_qg;  // [mu](A,beta)
  std::vector<Eigen::MatrixXd> g_gg;  // [mu](alpha,beta)
};
NonholonomicChristoffels nonholonomic_christoffels(const ChartSystem& sys,
                                                   const Eigen::VectorXd& q);

// Assembles the block metric and its pseudoinverse at the group identity and
// returns the max-abs deviation of (pseudoinverse * metric) from
// diag(P_perp, identity).
double pseudoinverse_check(const ChartSystem& sys, const Eigen::VectorXd& q);

}  // namespace wong

#endif
