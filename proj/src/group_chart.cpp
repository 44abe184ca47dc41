#include "wong/group_chart.hpp"

#include <cmath>
#include <functional>

#include "wong/errors.hpp"

namespace wong {

namespace {

// S = sum_n coeff(n) M^n and dS_mu = sum_n coeff(n) sum_j M^j E_mu M^{n-1-j},
// for the generators E_mu = d(ad(theta))/dtheta^mu.
void ad_series(const Eigen::MatrixXd& m, const std::vector<Eigen::MatrixXd>* gens,
               const std::function<double(int)>& coeff, int order, Eigen::MatrixXd* sum,
               std::vector<Eigen::MatrixXd>* dsum) {
  const int n = (int)m.rows();
  std::vector<Eigen::MatrixXd> pow(order + 1);
  pow[0] = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i <= order; ++i) pow[i] = pow[i - 1] * m;

  *sum = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i <= order; ++i) *sum += coeff(i) * pow[i];

  if (gens) {
    dsum->assign(gens->size(), Eigen::MatrixXd::Zero(n, n));
    // d(M^i) = d(M^{i-1}) M + M^{i-1} E turns the naive sum over split
    // positions into two products per order.
    for (size_t mu = 0; mu < gens->size(); ++mu) {
      Eigen::MatrixXd dpow = Eigen::MatrixXd::Zero(n, n);
      for (int i = 1; i <= order; ++i) {
        dpow = dpow * m + pow[i - 1] * (*gens)[mu];
        (*dsum)[mu] += coeff(i) * dpow;
      }
    }
  }
}

double inv_fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return 1.0 / f;
}

}  // namespace

GroupChartEval GroupChart::eval(const Eigen::VectorXd& theta, bool with_derivatives) const {
  if (theta.size() != alg_.dim) throw DimensionMismatch("GroupChart::eval theta size");
  const int n = alg_.dim;
  GroupChartEval out;

  Eigen::MatrixXd ad = alg_.adjoint_matrix(theta);
  if (ad.norm() > domain_radius_)
    throw EvaluationFailure("group chart point outside series trust radius");

  std::vector<Eigen::MatrixXd> gens;
  if (with_derivatives) {
    gens.reserve(n);
    for (int mu = 0; mu < n; ++mu)
      gens.push_back(alg_.adjoint_matrix(Eigen::VectorXd::Unit(n, mu)));
  }
  const std::vector<Eigen::MatrixXd>* gp = with_derivatives ? &gens : nullptr;

  // rho = exp(ad), u_R = sum ad^n/(n+1)!, u_L = sum (-ad)^n/(n+1)!.
  std::vector<Eigen::MatrixXd> d_rho, d_ur, d_ul;
  Eigen::MatrixXd rho, ur, ul;
  ad_series(ad, gp, [](int i) { return inv_fact(i); }, order_, &rho, &d_rho);
  ad_series(ad, gp, [](int i) { return inv_fact(i + 1); }, order_, &ur, &d_ur);
  ad_series(ad, gp, [](int i) { return (i % 2 ? -1.0 : 1.0) * inv_fact(i + 1); }, order_, &ul,
            &d_ul);

  Eigen::FullPivLU<Eigen::MatrixXd> lu_r(ur), lu_l(ul), lu_rho(rho);
  if (!lu_r.isInvertible() || !lu_l.isInvertible())
    throw EvaluationFailure("translation matrix singular (chart domain exceeded)");

  out.rho = rho;
  out.rho_bar = lu_rho.inverse();
  out.u_bar = ur;
  out.u = lu_r.inverse();
  out.v_bar = ul;
  out.v = lu_l.inverse();

  if (with_derivatives) {
    out.d_rho = d_rho;
    out.d_u_bar = d_ur;
    out.d_v_bar = d_ul;
    out.d_u.resize(n);
    out.d_v.resize(n);
    for (int mu = 0; mu < n; ++mu) {
      out.d_u[mu] = -out.u * d_ur[mu] * out.u;
      out.d_v[mu] = -out.v * d_ul[mu] * out.v;
    }
  }
  return out;
}

Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& m) {
  const int n = (int)m.rows();
  int s = 0;
  double nrm = m.norm();
  while (nrm > 0.5) {
    nrm /= 2.0;
    ++s;
  }
  Eigen::MatrixXd a = m / std::pow(2.0, s);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int i = 1; i <= 24; ++i) {
    term = term * a / double(i);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace wong
