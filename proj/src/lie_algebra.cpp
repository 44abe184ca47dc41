#include "wong/lie_algebra.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "wong/errors.hpp"

namespace wong {

Eigen::MatrixXd LieAlgebra::adjoint_matrix(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim) throw DimensionMismatch("adjoint_matrix: xi size");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int g = 0; g < dim; ++g)
    for (int b = 0; b < dim; ++b)
      for (int a = 0; a < dim; ++a) m(g, b) += c[g](a, b) * xi[a];
  return m;
}

Eigen::VectorXd LieAlgebra::bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (x.size() != dim || y.size() != dim) throw DimensionMismatch("bracket: operand size");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (int g = 0; g < dim; ++g) out[g] = x.dot(c[g] * y);
  return out;
}

Eigen::MatrixXd cartan_metric(const LieAlgebra& alg, double sign) {
  const int n = alg.dim;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  // tr(ad_a ad_b) = c^t_{a m} c^m_{b t}
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int t = 0; t < n; ++t)
        for (int m = 0; m < n; ++m) s += alg.c[t](a, m) * alg.c[m](b, t);
      k(a, b) = -sign * s;  // sign=+1 stores the positive-definite convention
    }
  return k;
}

ValidationReport validate_structure(const LieAlgebra& alg) {
  ValidationReport rep;
  rep.abelian = alg.abelian;
  const int n = alg.dim;

  for (int g = 0; g < n; ++g)
    rep.max_antisymmetry =
        std::max(rep.max_antisymmetry,
                 (alg.c[g] + alg.c[g].transpose()).cwiseAbs().maxCoeff());

  // Jacobi: c^s_{ab} c^t_{sg} + c^s_{bg} c^t_{sa} + c^s_{ga} c^t_{sb} = 0.
  for (int t = 0; t < n; ++t)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int g = 0; g < n; ++g) {
          double s = 0.0;
          for (int m = 0; m < n; ++m)
            s += alg.c[m](a, b) * alg.c[t](m, g) + alg.c[m](b, g) * alg.c[t](m, a) +
                 alg.c[m](g, a) * alg.c[t](m, b);
          rep.max_jacobi = std::max(rep.max_jacobi, std::abs(s));
        }

  // ad-invariance of k: c^s_{ma} k_{sb} + c^s_{mb} k_{as} = 0.
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int t = 0; t < n; ++t) s += alg.c[t](m, a) * alg.k(t, b) + alg.c[t](m, b) * alg.k(a, t);
        rep.max_ad_invariance = std::max(rep.max_ad_invariance, std::abs(s));
      }

  Eigen::MatrixXd ck = cartan_metric(alg);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ck);
  rep.semisimple = lu.isInvertible();
  if (rep.semisimple) rep.killing_consistency = (alg.k - ck).cwiseAbs().maxCoeff();
  return rep;
}

namespace {

LieAlgebra finish(LieAlgebra alg) {
  alg.abelian = true;
  for (const auto& m : alg.c)
    if (m.cwiseAbs().maxCoeff() > 0.0) alg.abelian = false;
  if (alg.k.size() == 0) {
    if (alg.abelian) {
      alg.k = Eigen::MatrixXd::Identity(alg.dim, alg.dim);
    } else {
      alg.k = cartan_metric(alg);
    }
  }
  if ((alg.k - alg.k.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("algebra metric k must be symmetric: " + alg.name);
  Eigen::LLT<Eigen::MatrixXd> llt(alg.k);
  if (llt.info() != Eigen::Success)
    throw ConfigError("algebra metric k must be positive definite: " + alg.name);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(alg.k);
  if (!lu.isInvertible()) throw ConfigError("algebra metric k is singular: " + alg.name);
  alg.k_inv = lu.inverse();
  return alg;
}

LieAlgebra epsilon_algebra(const std::string& name) {
  LieAlgebra alg;
  alg.name = name;
  alg.dim = 3;
  alg.c.assign(3, Eigen::MatrixXd::Zero(3, 3));
  // c^g_{ab} = epsilon_{gab}
  alg.c[0](1, 2) = 1.0; alg.c[0](2, 1) = -1.0;
  alg.c[1](2, 0) = 1.0; alg.c[1](0, 2) = -1.0;
  alg.c[2](0, 1) = 1.0; alg.c[2](1, 0) = -1.0;
  return finish(std::move(alg));
}

}  // namespace

LieAlgebra make_u1(const Eigen::MatrixXd& k_user) {
  LieAlgebra alg;
  alg.name = "u1";
  alg.dim = 1;
  alg.c.assign(1, Eigen::MatrixXd::Zero(1, 1));
  if (k_user.size() > 0) alg.k = k_user;
  return finish(std::move(alg));
}

LieAlgebra make_su2() { return epsilon_algebra("su2"); }
LieAlgebra make_so3() { return epsilon_algebra("so3"); }

LieAlgebra algebra_by_name(const std::string& name) {
  if (name == "u1") return make_u1();
  if (name == "su2") return make_su2();
  if (name == "so3") return make_so3();
  throw UnknownSystem("algebra: " + name);
}

LieAlgebra algebra_from_json(const nlohmann::json& j) {
  LieAlgebra alg;
  try {
    alg.name = j.value("name", "user");
    if (!j.contains("dim") || !j.contains("c")) throw ConfigError("algebra json needs dim and c");
    alg.dim = j.at("dim").get<int>();
    if (alg.dim <= 0) throw ConfigError("algebra dim must be positive");
    const auto& cj = j.at("c");
    if ((int)cj.size() != alg.dim) throw DimensionMismatch("algebra c: outer size");
    alg.c.assign(alg.dim, Eigen::MatrixXd::Zero(alg.dim, alg.dim));
    for (int g = 0; g < alg.dim; ++g) {
      if ((int)cj[g].size() != alg.dim) throw DimensionMismatch("algebra c: row size");
      for (int a = 0; a < alg.dim; ++a) {
        if ((int)cj[g][a].size() != alg.dim) throw DimensionMismatch("algebra c: col size");
        for (int b = 0; b < alg.dim; ++b) alg.c[g](a, b) = cj[g][a][b].get<double>();
      }
    }
    if (j.contains("k")) {
      alg.k = Eigen::MatrixXd::Zero(alg.dim, alg.dim);
      for (int a = 0; a < alg.dim; ++a)
        for (int b = 0; b < alg.dim; ++b) alg.k(a, b) = j.at("k")[a][b].get<double>();
    }
    double sign = j.value("cartan_sign", +1.0);
    if (alg.k.size() == 0 && sign != +1.0) {
      LieAlgebra tmp = alg;
      tmp.abelian = false;
      alg.k = cartan_metric(tmp, sign);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("algebra json: ") + e.what());
  }
  return finish(std::move(alg));
}

}  // namespace wong
