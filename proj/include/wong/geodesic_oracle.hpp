#ifndef WONG_GEODESIC_ORACLE_HPP
#define WONG_GEODESIC_ORACLE_HPP

#include <Eigen/Dense>
#include <vector>

#include "wong/chart_system.hpp"
#include "wong/group_chart.hpp"
#include "wong/wong_integrator.hpp"

namespace wong {

// Brute-force ground truth for the reduced dynamics: integrate the plain
// coordinate geodesic of the block metric on the product chart (Q*, a), with
// Christoffel symbols obtained by central finite differences of the metric,
// then split tangents into horizontal / vertical parts and read off (v, p).
//
// Everything here is assembled directly from the system's value evaluators
// (metric, killing, constraint_jac); none of the analytic derivative formulas
// of the reduction module are reused, so agreement between the two
// integrations is a genuine cross-check.

// Block metric on the product chart, (n_p + n_g) square:
//   [ P_perp^T G P_perp      P_perp^T G K u_bar  ]
//   [       (sym)            u_bar^T gamma u_bar ]
// Symmetric positive-semidefinite of rank n_p; the kernel consists of
// off-section displacement directions that the chart does not use.
Eigen::MatrixXd total_metric(const ChartSystem& sys, const GroupChart& chart,
                             const Eigen::VectorXd& q, const Eigen::VectorXd& a);

// Reflexive pseudoinverse T G^{-1} T^T with T = [[N], [u Phi^{-1} chi_jac]].
// Satisfies pinv * total_metric = diag(P_perp, I) at every chart point.
Eigen::MatrixXd total_metric_pseudoinverse(const ChartSystem& sys, const GroupChart& chart,
                                           const Eigen::VectorXd& q, const Eigen::VectorXd& a);

// One half of ydot^T total_metric ydot; conserved along the geodesic.
double total_energy(const ChartSystem& sys, const GroupChart& chart, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& ydot);

struct TotalTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> y;     // q followed by a, length n_p + n_g
  std::vector<Eigen::VectorXd> ydot;  // same layout
  std::vector<double> energy;
};

// Fixed-step RK4 on the second-order geodesic equation with pseudoinverse
// index raising.  The q part is re-projected onto the section after every
// step and the q velocity swept back into the tangent space, mirroring the
// constraint maintenance of the reduced integrator.
// Throws StepFailure (wrapping the point evaluation error) on breakdown.
TotalTrajectory geodesic_integrate(const ChartSystem& sys, const GroupChart& chart,
                                   const Eigen::VectorXd& y0, const Eigen::VectorXd& ydot0,
                                   double dt, int n_steps);

// Components of a tangent vector in the nonholonomic frame
//   H_A = N^B_A (d/dQ^B - Atilde^alpha_B L_alpha),   L_alpha = v^mu_alpha d/da^mu
// with Atilde = rho_bar * mech_conn.  v equals z_h (so N v = v) and
// p = gamma * rho * z_v is the charge variable of the reduced equations.
struct TangentSplit {
  Eigen::VectorXd z_h;
  Eigen::VectorXd z_v;
  Eigen::VectorXd v;
  Eigen::VectorXd p;
};

// Throws DegenerateBasis when ydot cannot be represented in the frame (its q
// part has a component off the section tangent space beyond roundoff).
TangentSplit decompose(const ChartSystem& sys, const GroupChart& chart, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& ydot);

struct GeodesicComparison {
  double dq = 0.0;  // sup_t max-abs deviation of the section point
  double dv = 0.0;  //   "            "        horizontal velocity
  double dp = 0.0;  //   "            "        charge
  double oracle_energy_drift = 0.0;  // |E(t) - E(0)| along the geodesic side
  double dt = 0.0;
  int n_steps = 0;
};

// Integrates the same initial data both ways and reports sup deviations.
// The lift starts at a0 = e: adot0 = gamma^{-1} p0 - mech_conn v0.
// `vertical` is forwarded to the reduced side so variant charge equations can
// be compared against the same geodesic ground truth.
GeodesicComparison compare_with_geodesic(const ChartSystem& sys, const WongState& s0, double dt,
                                         int n_steps, const VerticalTermWeights& vertical = {});

}  // namespace wong

#endif
