#include "wong/ym_wong.hpp"

#include <cmath>
#include <stdexcept>

#include "wong/errors.hpp"

namespace wong {

namespace {

// Pointwise structure-constant contractions.  Gauge fields carry an upper
// algebra index per (site, direction), algebra fields one index per site.

// out^mu_i(x) = c^mu_{beta alpha} eta^beta_i(x) z^alpha(x)
Eigen::VectorXd cgv(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& eta,
                    const Eigen::VectorXd& z) {
  const int ng = alg.dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(eta.size());
  for (int x = 0; x < lat.sites(); ++x) {
    const Eigen::MatrixXd ad_z =
        alg.adjoint_matrix(z.segment(x * ng, ng));  // (ad z)^mu_beta = c^mu_{beta'...}
    for (int i = 0; i < lat.d; ++i) {
      const int base = (x * lat.d + i) * ng;
      // c^mu_{beta alpha} eta^beta z^alpha = -(ad z eta)^mu
      out.segment(base, ng) = -ad_z * eta.segment(base, ng);
    }
  }
  return out;
}

// out_alpha(x) = c^mu_{beta alpha} eta^beta_i(x) k_{mu lam} xi^lam_i(x), summed over i
Eigen::VectorXd cgc(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& eta,
                    const Eigen::VectorXd& xi) {
  const int ng = alg.dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lat.alg_size(ng));
  for (int x = 0; x < lat.sites(); ++x) {
    for (int i = 0; i < lat.d; ++i) {
      const int base = (x * lat.d + i) * ng;
      const Eigen::VectorXd kxi = alg.k * xi.segment(base, ng);
      // (ad eta)^mu_alpha k xi, lowered on the free index
      out.segment(x * ng, ng) +=
          alg.adjoint_matrix(eta.segment(base, ng)).transpose() * kxi;
    }
  }
  return out;
}

// sitewise bracket of two algebra fields
Eigen::VectorXd site_bracket(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y) {
  const int ng = alg.dim;
  Eigen::VectorXd out(x.size());
  for (int s = 0; s < lat.sites(); ++s)
    out.segment(s * ng, ng) = alg.bracket(x.segment(s * ng, ng), y.segment(s * ng, ng));
  return out;
}

// sitewise (ad x)' q with q lower-index: out_nu = c^sig_{mu nu} x^mu q_sig
Eigen::VectorXd site_ad_transpose(const Lattice& lat, const LieAlgebra& alg,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& q) {
  const int ng = alg.dim;
  Eigen::VectorXd out(q.size());
  for (int s = 0; s < lat.sites(); ++s)
    out.segment(s * ng, ng) =
        alg.adjoint_matrix(x.segment(s * ng, ng)).transpose() * q.segment(s * ng, ng);
  return out;
}

// sitewise sum_sig q_sig (c[sig] x)_mu, both free indices lower
Eigen::VectorXd site_pair_first(const Lattice& lat, const LieAlgebra& alg,
                                const Eigen::VectorXd& q, const Eigen::VectorXd& x) {
  const int ng = alg.dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(q.size());
  for (int s = 0; s < lat.sites(); ++s) {
    for (int sig = 0; sig < ng; ++sig)
      out.segment(s * ng, ng) += q[s * ng + sig] * (alg.c[sig] * x.segment(s * ng, ng));
  }
  return out;
}

double vol_weight(const Lattice& lat) { return lat.volume_weight(); }

// orbit metric and its inverse as maps; gamma = h^d k D'D
Eigen::VectorXd gamma_apply(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& z) {
  return vol_weight(lat) * orbit_apply(lat, alg, a, z);
}

Eigen::VectorXd gamma_inv_apply(const Lattice& lat, const LieAlgebra& alg,
                                const Eigen::VectorXd& a, const Eigen::VectorXd& q) {
  return green_solve(lat, alg, a, q) / vol_weight(lat);
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> ym_wong_rhs(const Lattice& lat,
                                                        const LieAlgebra& alg, const YmState& s,
                                                        const VerticalTermWeights& vertical,
                                                        YmBreakdown* breakdown) {
  const int ng = alg.dim;
  if (s.a.size() != lat.gauge_size(ng) || s.adot.size() != lat.gauge_size(ng) ||
      s.p.size() != lat.alg_size(ng))
    throw ShapeMismatch("ym_wong_rhs: state sizes do not match lattice");

  const double scale = std::max(1.0, s.a.lpNorm<Eigen::Infinity>());
  if (divergence(lat, alg, s.a).lpNorm<Eigen::Infinity>() > 1e-6 * scale)
    throw ConstraintViolated("ym_wong_rhs: gauge field is not transverse");
  const double vscale = std::max(1.0, s.adot.lpNorm<Eigen::Infinity>());
  if (divergence(lat, alg, s.adot).lpNorm<Eigen::Infinity>() > 1e-6 * vscale)
    throw ConstraintViolated("ym_wong_rhs: velocity is not divergence-free");

  const Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(lat.gauge_size(ng));
  const Eigen::VectorXd zero_a = Eigen::VectorXd::Zero(lat.alg_size(ng));

  if (alg.abelian) {
    // every term carries at least one structure constant
    if (breakdown) {
      breakdown->christoffel = {zero_g, zero_g};
      breakdown->curvature = {zero_g, zero_g, zero_g, zero_g, zero_g, zero_g};
      breakdown->dgamma = {zero_g, zero_g};
    }
    return {zero_g, zero_a};
  }

  const Eigen::VectorXd w = coulomb_connection_apply(lat, alg, s.a, s.adot);
  const Eigen::VectorXd phat = gamma_inv_apply(lat, alg, s.a, s.p);
  const Eigen::VectorXd d_w = covariant_derivative(lat, alg, s.a, w);
  const Eigen::VectorXd d_phat = covariant_derivative(lat, alg, s.a, phat);

  auto lift = [&](const Eigen::VectorXd& q) {
    return covariant_derivative(lat, alg, s.a, gamma_inv_apply(lat, alg, s.a, q));
  };

  std::array<Eigen::VectorXd, 2> hg;
  hg[0] = 2.0 * cgv(lat, alg, s.adot, w);
  hg[1] = -cgv(lat, alg, d_w, w);

  std::array<Eigen::VectorXd, 6> ft;
  ft[0] = -2.0 * lift(vol_weight(lat) * cgc(lat, alg, d_phat, s.adot));
  ft[1] = -lift(site_pair_first(lat, alg, gamma_apply(lat, alg, s.a, w), phat));
  ft[2] = -2.0 * cgv(lat, alg, s.adot, phat);
  ft[3] = 2.0 * cgv(lat, alg, d_phat, w);
  ft[4] = covariant_derivative(lat, alg, s.a, site_bracket(lat, alg, w, phat));
  ft[5] = -lift(site_ad_transpose(lat, alg, w, s.p));

  std::array<Eigen::VectorXd, 2> dg;
  dg[0] = -cgv(lat, alg, d_phat, phat);
  dg[1] = -lift(site_pair_first(lat, alg, s.p, phat));

  if (breakdown) {
    breakdown->christoffel = hg;
    breakdown->curvature = ft;
    breakdown->dgamma = dg;
  }

  Eigen::VectorXd raw = hg[0] + hg[1] + dg[0] + dg[1];
  for (const auto& t : ft) raw += t;
  Eigen::VectorXd addot = tangent_project(lat, alg, s.a, raw);

  Eigen::VectorXd pdot = zero_a;
  if (vertical.classic != 0.0) pdot += vertical.classic * site_ad_transpose(lat, alg, w, s.p);
  if (vertical.rotation != 0.0) pdot -= vertical.rotation * site_ad_transpose(lat, alg, phat, s.p);
  if (vertical.gamma_coupling != 0.0)
    pdot += vertical.gamma_coupling *
            gamma_apply(lat, alg, s.a, site_bracket(lat, alg, w, phat));

  return {std::move(addot), std::move(pdot)};
}

double ym_energy(const Lattice& lat, const LieAlgebra& alg, const YmState& s) {
  const int ng = alg.dim;
  // horizontal kinetic part: the vertical component D(A adot) carries the
  // charge energy, which the p-term already counts
  Eigen::VectorXd h_vel = s.adot;
  if (!alg.abelian) {
    const Eigen::VectorXd w = coulomb_connection_apply(lat, alg, s.a, s.adot);
    h_vel -= covariant_derivative(lat, alg, s.a, w);
  }
  double kin = 0.0;
  for (int x = 0; x < lat.sites(); ++x)
    for (int i = 0; i < lat.d; ++i) {
      const auto seg = h_vel.segment((x * lat.d + i) * ng, ng);
      kin += seg.dot(alg.k * seg);
    }
  kin *= 0.5 * vol_weight(lat);
  const Eigen::VectorXd phat = gamma_inv_apply(lat, alg, s.a, s.p);
  return kin + 0.5 * s.p.dot(phat);
}

YmTrajectory ym_integrate(const Lattice& lat, const LieAlgebra& alg, const YmState& s0, double dt,
                          int n_steps, const YmIntegrateOptions& opts) {
  if (!(dt > 0.0) || n_steps < 0) throw ConfigError("ym_integrate: bad dt or step count");

  YmTrajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);

  const int ng = alg.dim;
  auto record = [&](double t, const YmState& s) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.energy.push_back(ym_energy(lat, alg, s));
    traj.coulomb_residual.push_back(divergence(lat, alg, s.a).lpNorm<Eigen::Infinity>());
    double pk = 0.0;
    for (int x = 0; x < lat.sites(); ++x) {
      const auto seg = s.p.segment(x * ng, ng);
      pk += seg.dot(alg.k_inv * seg);
    }
    traj.p_knorm.push_back(std::sqrt(pk));
  };

  YmState s = s0;
  record(0.0, s);

  for (int step = 0; step < n_steps; ++step) {
    try {
      auto rhs = [&](const YmState& y) { return ym_wong_rhs(lat, alg, y, opts.vertical); };
      auto advance = [&](const YmState& y, double h, const YmState& k) {
        YmState out;
        out.a = y.a + h * k.a;
        out.adot = y.adot + h * k.adot;
        out.p = y.p + h * k.p;
        return out;
      };
      auto eval = [&](const YmState& y) {
        auto [da, dp] = rhs(y);
        YmState k;
        k.a = y.adot;
        k.adot = std::move(da);
        k.p = std::move(dp);
        return k;
      };

      const YmState k1 = eval(s);
      const YmState k2 = eval(advance(s, 0.5 * dt, k1));
      const YmState k3 = eval(advance(s, 0.5 * dt, k2));
      const YmState k4 = eval(advance(s, dt, k3));

      s.a += (dt / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
      s.adot += (dt / 6.0) * (k1.adot + 2.0 * k2.adot + 2.0 * k3.adot + k4.adot);
      s.p += (dt / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);

      if (opts.project) {
        // Newton step on the linear constraint div A = 0 is exact; skip the
        // Faddeev-Popov solve when the residual is already at roundoff.
        const Eigen::VectorXd chi = divergence(lat, alg, s.a);
        if (chi.lpNorm<Eigen::Infinity>() > 1e-12) {
          const FpSolver fp = fp_solver(lat, alg, s.a);
          s.a -= covariant_derivative(lat, alg, s.a, fp.solve(chi));
        }
        s.adot = tangent_project(lat, alg, s.a, s.adot);
      }
    } catch (const Error& err) {
      throw StepFailure("ym step failed at t = " + std::to_string(traj.times.back()) + ": " +
                        err.what());
    }
    record((step + 1) * dt, s);
  }
  return traj;
}

}  // namespace wong
