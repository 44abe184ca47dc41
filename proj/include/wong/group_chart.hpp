#ifndef WONG_GROUP_CHART_HPP
#define WONG_GROUP_CHART_HPP

#include <Eigen/Dense>
#include <vector>

#include "wong/lie_algebra.hpp"

namespace wong {

// Exponential chart of the first kind on the structure group: a point is
// theta with g = exp(theta^alpha e_alpha).
//
// With ad = ad(theta), the auxiliary translation matrices are
//   u_L = (1 - e^{-ad})/ad   (g^{-1} dg = u_L dtheta)
//   u_R = (e^{ad} - 1)/ad    (dg g^{-1} = u_R dtheta)
// and the chart stores, following the convention fixed for this library,
//   u  = u_R^{-1},   u_bar = u_R,
//   v  = u_L^{-1},   v_bar = u_L,
//   rho = Ad(g) = e^{ad} = u_bar * v.
// Then u_bar*u = I, v_bar*v = I hold by construction, L_alpha = v^mu_alpha
// d/dtheta^mu are the left-invariant fields with [L_a, L_b] = +c^g_{ab} L_g,
// and L_alpha rho^g_b = c^m_{ab} rho^g_m (checked in tests by finite
// differences).
//
// Everything (including coordinate derivatives) is evaluated by truncated
// ad-power series with analytically differentiated terms; this is exact for
// u(1) and accurate to ~1e-15 for ||ad|| <= 2 at the default order.
struct GroupChartEval {
  Eigen::MatrixXd rho, rho_bar;
  Eigen::MatrixXd u, u_bar;
  Eigen::MatrixXd v, v_bar;
  // d/dtheta^mu, indexed by mu.  Filled only when requested.
  std::vector<Eigen::MatrixXd> d_rho, d_u_bar, d_v_bar, d_u, d_v;
};

class GroupChart {
 public:
  explicit GroupChart(LieAlgebra alg, int series_order = 30, double domain_radius = 4.0)
      : alg_(std::move(alg)), order_(series_order), domain_radius_(domain_radius) {}

  const LieAlgebra& algebra() const { return alg_; }
  int dim() const { return alg_.dim; }

  // Throws EvaluationFailure if ||ad(theta)|| exceeds the trust radius of the
  // truncated series or u_L / u_R lose invertibility.
  GroupChartEval eval(const Eigen::VectorXd& theta, bool with_derivatives = false) const;

 private:
  LieAlgebra alg_;
  int order_;
  double domain_radius_;
};

// Matrix exponential by scaling and squaring of the Taylor series.  Used for
// rho consistency checks; kept simple on purpose.
Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& m);

}  // namespace wong

#endif
