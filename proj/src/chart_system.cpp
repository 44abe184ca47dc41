#include "wong/chart_system.hpp"

#include <cmath>
#include <limits>

#include "wong/errors.hpp"

namespace wong {

namespace {
double fd_step(double qi, double scale) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::abs(qi)) * scale;
}
}  // namespace

std::vector<Eigen::MatrixXd> fd_matrix_derivative(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
    double scale) {
  std::vector<Eigen::MatrixXd> out(q.size());
  Eigen::VectorXd qp = q, qm = q;
  for (int i = 0; i < q.size(); ++i) {
    const double h = fd_step(q[i], scale);
    qp[i] = q[i] + h;
    qm[i] = q[i] - h;
    out[i] = (f(qp) - f(qm)) / (2.0 * h);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  return out;
}

Eigen::MatrixXd fd_vector_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
    double scale) {
  Eigen::VectorXd f0 = f(q);
  Eigen::MatrixXd jac(f0.size(), q.size());
  Eigen::VectorXd qp = q, qm = q;
  for (int i = 0; i < q.size(); ++i) {
    const double h = fd_step(q[i], scale);
    qp[i] = q[i] + h;
    qm[i] = q[i] - h;
    jac.col(i) = (f(qp) - f(qm)) / (2.0 * h);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  return jac;
}

void use_fd_derivatives(ChartSystem& sys) {
  const double scale = sys.fd_scale;
  auto metric = sys.metric;
  auto killing = sys.killing;
  auto constraint = sys.constraint;
  sys.metric_deriv = [metric, scale](const Eigen::VectorXd& q) {
    return fd_matrix_derivative(metric, q, scale);
  };
  sys.killing_deriv = [killing, scale](const Eigen::VectorXd& q) {
    return fd_matrix_derivative(killing, q, scale);
  };
  sys.constraint_jac = [constraint, scale](const Eigen::VectorXd& q) {
    return fd_vector_jacobian(constraint, q, scale);
  };
}

double killing_residual(const ChartSystem& sys, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd g = sys.metric(q);
  const Eigen::MatrixXd kk = sys.killing(q);
  const auto dg = sys.metric_deriv(q);
  const auto dk = sys.killing_deriv(q);
  const int np = sys.n_p, ng = sys.n_g();

  double worst = 0.0;
  for (int mu = 0; mu < ng; ++mu) {
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < np; ++b) {
        double r = 0.0;
        for (int cc = 0; cc < np; ++cc)
          r += kk(cc, mu) * dg[cc](a, b) + g(cc, b) * dk[a](cc, mu) + g(a, cc) * dk[b](cc, mu);
        worst = std::max(worst, std::abs(r));
      }
  }
  return worst;
}

double bracket_residual(const ChartSystem& sys, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd kk = sys.killing(q);
  const auto dk = sys.killing_deriv(q);
  const int np = sys.n_p, ng = sys.n_g();

  double worst = 0.0;
  for (int al = 0; al < ng; ++al)
    for (int be = 0; be < ng; ++be) {
      Eigen::VectorXd lie = Eigen::VectorXd::Zero(np);
      for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b)
          lie[a] += kk(b, al) * dk[b](a, be) - kk(b, be) * dk[b](a, al);
      for (int g = 0; g < ng; ++g) lie -= sys.algebra.c[g](al, be) * kk.col(g);
      worst = std::max(worst, lie.cwiseAbs().maxCoeff());
    }
  return worst;
}

}  // namespace wong
