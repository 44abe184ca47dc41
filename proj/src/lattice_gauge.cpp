#include "wong/lattice_gauge.hpp"

#include <cmath>
#include <sstream>

#include "wong/errors.hpp"

namespace wong {
namespace {

void check_gauge(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& f,
                 const char* who) {
  if (f.size() != lat.gauge_size(alg.dim))
    throw ShapeMismatch(std::string(who) + ": gauge field has wrong length");
}

void check_alg(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& f,
               const char* who) {
  if (f.size() != lat.alg_size(alg.dim))
    throw ShapeMismatch(std::string(who) + ": algebra field has wrong length");
}

}  // namespace

Lattice::Lattice(int d_, int extent_, double spacing_) : d(d_), extent(extent_), spacing(spacing_) {
  if (d < 1 || d > 3) throw ConfigError("lattice dimension must be 1, 2 or 3");
  if (extent < 2) throw ConfigError("lattice extent must be at least 2");
  if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
}

int Lattice::sites() const {
  int n = 1;
  for (int k = 0; k < d; ++k) n *= extent;
  return n;
}

int Lattice::shift(int s, int dir, int step) const {
  int stride = 1;
  for (int k = 0; k < dir; ++k) stride *= extent;
  int coord = (s / stride) % extent;
  int next = (coord + step % extent + extent) % extent;
  return s + (next - coord) * stride;
}

double Lattice::volume_weight() const { return std::pow(spacing, d); }

int Lattice::stencil_corank(int n_g) const {
  // one parity pattern per subset of even-extent directions; with uniform
  // extent that is 2^d for even L and just the constants for odd L
  int patterns = 1;
  for (int k = 0; k < d; ++k)
    if (extent % 2 == 0) patterns *= 2;
  return patterns * n_g;
}

Eigen::VectorXd divergence(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a) {
  check_gauge(lat, alg, a, "divergence");
  const int ng = alg.dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lat.alg_size(ng));
  const double inv2h = 0.5 / lat.spacing;
  for (int s = 0; s < lat.sites(); ++s)
    for (int i = 0; i < lat.d; ++i) {
      const int sp = lat.shift(s, i, +1), sm = lat.shift(s, i, -1);
      for (int mu = 0; mu < ng; ++mu)
        out[lat.alg_index(s, mu, ng)] +=
            inv2h * (a[lat.gauge_index(sp, i, mu, ng)] - a[lat.gauge_index(sm, i, mu, ng)]);
    }
  return out;
}

Eigen::VectorXd gradient(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& eps) {
  check_alg(lat, alg, eps, "gradient");
  const int ng = alg.dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lat.gauge_size(ng));
  const double inv2h = 0.5 / lat.spacing;
  for (int s = 0; s < lat.sites(); ++s)
    for (int i = 0; i < lat.d; ++i) {
      const int sp = lat.shift(s, i, +1), sm = lat.shift(s, i, -1);
      for (int mu = 0; mu < ng; ++mu)
        out[lat.gauge_index(s, i, mu, ng)] =
            inv2h * (eps[lat.alg_index(sp, mu, ng)] - eps[lat.alg_index(sm, mu, ng)]);
    }
  return out;
}

Eigen::VectorXd covariant_derivative(const Lattice& lat, const LieAlgebra& alg,
                                     const Eigen::VectorXd& a, const Eigen::VectorXd& eps) {
  check_gauge(lat, alg, a, "covariant_derivative");
  check_alg(lat, alg, eps, "covariant_derivative");
  const int ng = alg.dim;
  Eigen::VectorXd out = gradient(lat, alg, eps);
  if (alg.abelian) return out;
  for (int s = 0; s < lat.sites(); ++s)
    for (int i = 0; i < lat.d; ++i)
      for (int mu = 0; mu < ng; ++mu) {
        double acc = 0.0;
        for (int nu = 0; nu < ng; ++nu)
          for (int be = 0; be < ng; ++be)
            acc += alg.c[mu](nu, be) * a[lat.gauge_index(s, i, nu, ng)] *
                   eps[lat.alg_index(s, be, ng)];
        out[lat.gauge_index(s, i, mu, ng)] += acc;
      }
  return out;
}

Eigen::VectorXd covariant_adjoint(const Lattice& lat, const LieAlgebra& alg,
                                  const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
  check_gauge(lat, alg, a, "covariant_adjoint");
  check_gauge(lat, alg, eta, "covariant_adjoint");
  const int ng = alg.dim;
  Eigen::VectorXd out = -divergence(lat, alg, eta);
  if (alg.abelian) return out;
  for (int s = 0; s < lat.sites(); ++s)
    for (int lam = 0; lam < ng; ++lam) {
      double acc = 0.0;
      for (int i = 0; i < lat.d; ++i)
        for (int nu = 0; nu < ng; ++nu)
          for (int be = 0; be < ng; ++be)
            acc += alg.c[lam](nu, be) * a[lat.gauge_index(s, i, nu, ng)] *
                   eta[lat.gauge_index(s, i, be, ng)];
      out[lat.alg_index(s, lam, ng)] -= acc;
    }
  return out;
}

Eigen::VectorXd fp_apply(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& eps) {
  return divergence(lat, alg, covariant_derivative(lat, alg, a, eps));
}

Eigen::VectorXd orbit_apply(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& eps) {
  Eigen::VectorXd dd = covariant_adjoint(lat, alg, a, covariant_derivative(lat, alg, a, eps));
  const int ng = alg.dim;
  Eigen::VectorXd out(lat.alg_size(ng));
  for (int s = 0; s < lat.sites(); ++s)
    out.segment(s * ng, ng) = alg.k * dd.segment(s * ng, ng);
  return out;
}

std::vector<Eigen::VectorXd> kernel_modes(const Lattice& lat, const LieAlgebra& alg,
                                          const Eigen::VectorXd& a, double tol) {
  const int ng = alg.dim;
  const int ns = lat.sites();
  std::vector<Eigen::VectorXd> modes;
  const double norm = 1.0 / std::sqrt(static_cast<double>(ns));
  for (int mask = 0; mask < (1 << lat.d); ++mask) {
    // sign pattern prod_{k in mask} (-1)^{x_k}
    Eigen::VectorXd pattern(ns);
    for (int s = 0; s < ns; ++s) {
      int sign = 1, rest = s;
      for (int k = 0; k < lat.d; ++k) {
        int coord = rest % lat.extent;
        rest /= lat.extent;
        if ((mask >> k) & 1 && coord % 2 == 1) sign = -sign;
      }
      pattern[s] = sign * norm;
    }
    for (int mu = 0; mu < ng; ++mu) {
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(lat.alg_size(ng));
      for (int s = 0; s < ns; ++s) cand[lat.alg_index(s, mu, ng)] = pattern[s];
      if (orbit_apply(lat, alg, a, cand).cwiseAbs().maxCoeff() <= tol) modes.push_back(cand);
    }
  }
  return modes;
}

Eigen::VectorXd green_solve(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& rhs, bool project) {
  check_alg(lat, alg, rhs, "green_solve");
  const auto modes = kernel_modes(lat, alg, a);
  Eigen::VectorXd b = rhs;
  const double bscale = std::max(1.0, rhs.norm());
  for (const auto& m : modes) {
    const double comp = m.dot(b);
    if (!project && std::abs(comp) > 1e-10 * bscale)
      throw KernelComponent("green_solve: rhs has zero-mode content and projection is off");
    b -= comp * m;
  }

  const double bnorm = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (bnorm == 0.0) return x;

  // plain CG; the operator is symmetric positive definite on the complement
  // of the projected-out kernel
  Eigen::VectorXd r = b, p = b;
  double rs = r.squaredNorm();
  const int maxit = 20 * static_cast<int>(b.size()) + 200;
  for (int it = 0; it < maxit && std::sqrt(rs) > 1e-12 * bnorm; ++it) {
    Eigen::VectorXd ap = orbit_apply(lat, alg, a, p);
    const double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  if (std::sqrt(rs) > 1e-10 * bnorm)
    throw SolverStalled("green_solve: conjugate gradient did not reach tolerance");
  for (const auto& m : modes) x -= m.dot(x) * m;
  return x;
}

Eigen::VectorXd coulomb_connection_apply(const Lattice& lat, const LieAlgebra& alg,
                                         const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
  check_gauge(lat, alg, eta, "coulomb_connection_apply");
  Eigen::VectorXd dd = covariant_adjoint(lat, alg, a, eta);
  const int ng = alg.dim;
  Eigen::VectorXd rhs(lat.alg_size(ng));
  for (int s = 0; s < lat.sites(); ++s)
    rhs.segment(s * ng, ng) = alg.k * dd.segment(s * ng, ng);
  return green_solve(lat, alg, a, rhs);
}

FpSolver fp_solver(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                   double cond_limit) {
  const int n = lat.alg_size(alg.dim);
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    basis[j] = 1.0;
    m.col(j) = fp_apply(lat, alg, a, basis);
    basis[j] = 0.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const int rank = n - lat.stencil_corank(alg.dim);
  const double smax = sv.size() ? sv[0] : 0.0;
  if (rank > 0) {
    if (rank < n && sv[rank] > 1e-10 * std::max(1.0, smax))
      throw EvaluationFailure("gauge-fixing operator has more rank than the stencil allows");
    if (sv[rank - 1] <= 0.0 || smax / sv[rank - 1] > cond_limit)
      throw GribovHorizon("gauge-fixing operator near singular on the lattice");
  }
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < rank; ++i) inv[i] = 1.0 / sv[i];
  FpSolver out;
  out.pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

Eigen::VectorXd tangent_project(const Lattice& lat, const LieAlgebra& alg,
                                const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
  check_gauge(lat, alg, eta, "tangent_project");
  const Eigen::VectorXd chi = divergence(lat, alg, eta);
  // Fields that are divergence-free at roundoff skip the Faddeev-Popov solve.
  // Besides saving work, this keeps the projection usable for abelian fields,
  // whose gauge-fixing operator is singular but where linear evolution
  // preserves tangency exactly.
  if (chi.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, eta.lpNorm<Eigen::Infinity>()))
    return eta;
  const FpSolver fp = fp_solver(lat, alg, a);
  return eta - covariant_derivative(lat, alg, a, fp.solve(chi));
}

LieAlgebra product_algebra(const Lattice& lat, const LieAlgebra& alg) {
  const int ng = alg.dim, ns = lat.sites(), dim = ng * ns;
  LieAlgebra prod;
  std::ostringstream name;
  name << alg.name << "_sites" << ns;
  prod.name = name.str();
  prod.dim = dim;
  prod.abelian = alg.abelian;
  prod.c.assign(dim, Eigen::MatrixXd::Zero(dim, dim));
  for (int s = 0; s < ns; ++s)
    for (int g = 0; g < ng; ++g)
      for (int a1 = 0; a1 < ng; ++a1)
        for (int b1 = 0; b1 < ng; ++b1)
          prod.c[s * ng + g](s * ng + a1, s * ng + b1) = alg.c[g](a1, b1);
  prod.k = Eigen::MatrixXd::Zero(dim, dim);
  prod.k_inv = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < ns; ++s) {
    prod.k.block(s * ng, s * ng, ng, ng) = alg.k;
    prod.k_inv.block(s * ng, s * ng, ng, ng) = alg.k_inv;
  }
  return prod;
}

ChartSystem to_chart_system(const Lattice& lat, const LieAlgebra& alg) {
  const int ng = alg.dim;
  const int np = lat.gauge_size(ng);
  if (np > 1000) throw TooLarge("lattice too large to materialize as a chart system");

  ChartSystem sys;
  std::ostringstream name;
  name << "lattice_" << alg.name << "_d" << lat.d << "_L" << lat.extent;
  sys.name = name.str();
  sys.n_p = np;
  sys.algebra = product_algebra(lat, alg);
  sys.flat_metric = true;
  sys.fd_scale = 1.0;
  sys.constraint_corank = lat.stencil_corank(ng);

  const double hd = lat.volume_weight();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(np, np);
  for (int s = 0; s < lat.sites(); ++s)
    for (int i = 0; i < lat.d; ++i)
      for (int mu = 0; mu < ng; ++mu)
        for (int nu = 0; nu < ng; ++nu)
          g(lat.gauge_index(s, i, mu, ng), lat.gauge_index(s, i, nu, ng)) = hd * alg.k(mu, nu);
  sys.metric = [g](const Eigen::VectorXd&) { return g; };
  sys.metric_deriv = [np](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(np, Eigen::MatrixXd::Zero(np, np));
  };

  const Lattice lt = lat;
  const LieAlgebra base = alg;
  const int ngt = lt.alg_size(ng);

  sys.killing = [lt, base, np, ngt](const Eigen::VectorXd& a) {
    const int ng_ = base.dim;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(np, ngt);
    const double inv2h = 0.5 / lt.spacing;
    for (int y = 0; y < lt.sites(); ++y)
      for (int al = 0; al < ng_; ++al) {
        const int col = lt.alg_index(y, al, ng_);
        for (int i = 0; i < lt.d; ++i) {
          k(lt.gauge_index(lt.shift(y, i, -1), i, al, ng_), col) += inv2h;
          k(lt.gauge_index(lt.shift(y, i, +1), i, al, ng_), col) -= inv2h;
        }
        if (!base.abelian)
          for (int i = 0; i < lt.d; ++i)
            for (int mu = 0; mu < ng_; ++mu) {
              double acc = 0.0;
              for (int nu = 0; nu < ng_; ++nu)
                acc += base.c[mu](nu, al) * a[lt.gauge_index(y, i, nu, ng_)];
              k(lt.gauge_index(y, i, mu, ng_), col) += acc;
            }
      }
    return k;
  };

  sys.killing_deriv = [lt, base, np, ngt](const Eigen::VectorXd&) {
    const int ng_ = base.dim;
    std::vector<Eigen::MatrixXd> dk(np, Eigen::MatrixXd::Zero(np, ngt));
    if (base.abelian) return dk;
    for (int z = 0; z < lt.sites(); ++z)
      for (int j = 0; j < lt.d; ++j)
        for (int be = 0; be < ng_; ++be) {
          Eigen::MatrixXd& m = dk[lt.gauge_index(z, j, be, ng_)];
          for (int mu = 0; mu < ng_; ++mu)
            for (int al = 0; al < ng_; ++al)
              m(lt.gauge_index(z, j, mu, ng_), lt.alg_index(z, al, ng_)) = base.c[mu](be, al);
        }
    return dk;
  };

  sys.constraint = [lt, base](const Eigen::VectorXd& a) { return divergence(lt, base, a); };

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(ngt, np);
  {
    const double inv2h = 0.5 / lt.spacing;
    for (int x = 0; x < lt.sites(); ++x)
      for (int i = 0; i < lt.d; ++i)
        for (int mu = 0; mu < ng; ++mu) {
          jac(lt.alg_index(x, mu, ng), lt.gauge_index(lt.shift(x, i, +1), i, mu, ng)) += inv2h;
          jac(lt.alg_index(x, mu, ng), lt.gauge_index(lt.shift(x, i, -1), i, mu, ng)) -= inv2h;
        }
  }
  sys.constraint_jac = [jac](const Eigen::VectorXd&) { return jac; };

  sys.sample_domain = [np](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-0.4, 0.4);
    Eigen::VectorXd a(np);
    for (int i = 0; i < np; ++i) a[i] = dist(rng);
    return a;
  };
  return sys;
}

}  // namespace wong
