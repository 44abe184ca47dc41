#ifndef WONG_YM_WONG_HPP
#define WONG_YM_WONG_HPP

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "wong/lattice_gauge.hpp"
#include "wong/wong_integrator.hpp"

namespace wong {

// Reduced Yang-Mills dynamics in Coulomb gauge on the lattice, assembled
// purely from the field operators (divergence, covariant derivative, Green
// solves).  Term for term this is the field-theoretic form of the flat-system
// equations in wong_integrator; the bridge through to_chart_system is the
// test that the two agree.

struct YmState {
  Eigen::VectorXd a;     // transverse gauge field A*
  Eigen::VectorXd adot;  // its velocity, divergence-free
  Eigen::VectorXd p;     // charge density, lower algebra index
};

// Raw per-term contributions before the final tangency projection, same
// grouping as FlatBreakdown: two velocity-velocity pieces, six curvature
// pieces, two covariant-orbit-metric pieces.  All gauge-field shaped.
struct YmBreakdown {
  std::array<Eigen::VectorXd, 2> christoffel;
  std::array<Eigen::VectorXd, 6> curvature;
  std::array<Eigen::VectorXd, 2> dgamma;
};

// Time derivative (addot, pdot) of a lattice state.  The charge equation uses
// the same weight set as the finite-dimensional integrator, with the same
// defaults.  Throws ConstraintViolated when the state is off-section or the
// velocity is not divergence-free beyond 1e-6.
std::pair<Eigen::VectorXd, Eigen::VectorXd> ym_wong_rhs(const Lattice& lat,
                                                        const LieAlgebra& alg, const YmState& s,
                                                        const VerticalTermWeights& vertical = {},
                                                        YmBreakdown* breakdown = nullptr);

// Energy of the reduced motion: the k-weighted square of the horizontal part
// of adot (the D(A adot) component carries charge energy that the p term
// already counts) plus 1/2 p gamma^{-1} p.  p must lie in the range of the
// orbit metric (p = gamma zeta).
double ym_energy(const Lattice& lat, const LieAlgebra& alg, const YmState& s);

struct YmIntegrateOptions {
  bool project = true;  // re-enforce the Coulomb constraint after every step
  VerticalTermWeights vertical{};
};

struct YmTrajectory {
  std::vector<double> times;
  std::vector<YmState> states;
  std::vector<double> energy;
  std::vector<double> coulomb_residual;  // max |div A*|
  std::vector<double> p_knorm;           // sqrt(sum_x p' k^{-1} p)
};

// Fixed-step RK4.  Throws StepFailure wrapping the first failing evaluation.
YmTrajectory ym_integrate(const Lattice& lat, const LieAlgebra& alg, const YmState& s0, double dt,
                          int n_steps, const YmIntegrateOptions& opts = {});

}  // namespace wong

#endif
