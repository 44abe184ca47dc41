#pragma once

// Reduced dynamics: right-hand sides of the horizontal and vertical Wong
// equations, the term-expanded flat-metric path, and fixed/adaptive RK
// integration with on-section projection.

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "wong/chart_system.hpp"
#include "wong/reduction.hpp"

namespace wong {

struct WongState {
  Eigen::VectorXd q_star;  // dependent coordinates, chi(q_star) = 0 on-section
  Eigen::VectorXd v;       // section-tangent velocity
  Eigen::VectorXd p;       // vertical momentum, one entry per algebra generator
};

struct StateDerivative {
  Eigen::VectorXd dq;
  Eigen::VectorXd dv;
  Eigen::VectorXd dp;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<WongState> states;
  // recorded per sample, same length as times
  std::vector<double> energy;
  std::vector<double> chi_residual;
  std::vector<double> p_knorm;      // k-norm of p, monitored only
  std::vector<double> p_gammanorm;  // gamma^{-1}-norm of p (the vertical energy)
};

// Scale factors for the individual flat-path terms. All 1.0 reproduces the
// equations of motion; tests flip signs to prove each term is load-bearing.
struct FlatTermWeights {
  std::array<double, 6> curvature{1, 1, 1, 1, 1, 1};
  std::array<double, 2> christoffel{1, 1};
  std::array<double, 2> dgamma{1, 1};
};

// Term weights for the vertical momentum equation
//   dp = classic * ad(A v)' p  -  rotation * ad(gamma^{-1} p)' p
//      + gamma_coupling * gamma [A v, gamma^{-1} p].
// The defaults are the energy-conserving equations of motion. `rotation`
// can be zeroed for A/B diagnostics against the brute-force geodesic.
// `gamma_coupling` is an alternative velocity-coupling sometimes written in
// place of the classic term's partner; it violates exact energy conservation
// whenever gamma is position-dependent and is kept only so tests can
// demonstrate that failure.
struct VerticalTermWeights {
  double classic = 1.0;
  double rotation = 1.0;
  double gamma_coupling = 0.0;
};

// Raw per-term contributions to dv before the final tangential projection:
// dv = N * (sum of all entries).
struct FlatBreakdown {
  std::array<Eigen::VectorXd, 6> curvature;
  std::array<Eigen::VectorXd, 2> christoffel;
  std::array<Eigen::VectorXd, 2> dgamma;
};

// General-path right-hand side. The force covectors are raised with
// N G^{-1} N' which lands the result tangent to the section; the horizontal
// Christoffel table from `reduce` supplies the quadratic velocity term.
StateDerivative wong_rhs(const ChartSystem& sys, const WongState& s,
                         const VerticalTermWeights& vertical = {});

// Flat-metric path: the same RHS assembled from the expanded curvature terms
// (six of them), the flat horizontal Christoffel pair and the covariant
// derivative pair, each individually weighted and optionally reported.
// Throws NotFlat when the system's metric is position-dependent.
StateDerivative wong_rhs_flat(const ChartSystem& sys, const WongState& s,
                              const FlatTermWeights& weights = {},
                              FlatBreakdown* breakdown = nullptr,
                              const VerticalTermWeights& vertical = {});

struct IntegrateOptions {
  bool project = true;      // post-step Newton projection onto chi = 0
  bool adaptive = false;    // embedded 4(5) pair instead of fixed-step RK4
  double adaptive_tol = 1e-10;
  bool flat_path = false;   // evaluate the RHS through wong_rhs_flat
  VerticalTermWeights vertical{};
  double projection_tol = 1e-12;
  int max_projection_iters = 25;
};

// Fixed-step RK4 (or adaptive 4(5)) for n_steps of size dt. Adaptive mode
// covers the same total time span and records every accepted step.
Trajectory integrate(const ChartSystem& sys, const WongState& s0, double dt,
                     int n_steps, const IntegrateOptions& opts = {});

// Newton projection onto the section along the least-squares constraint
// direction. Throws ProjectionDiverged if |chi| fails to reach tol.
Eigen::VectorXd project_constraint(const ChartSystem& sys,
                                   const Eigen::VectorXd& q,
                                   double tol = 1e-12, int max_iters = 25);

// 1/2 v' G^H v + 1/2 p' gamma^{-1} p, conserved along the exact flow.
double energy(const ChartSystem& sys, const WongState& s);

}  // namespace wong
