#ifndef WONG_LATTICE_GAUGE_HPP
#define WONG_LATTICE_GAUGE_HPP

#include <Eigen/Dense>
#include <vector>

#include "wong/chart_system.hpp"
#include "wong/lie_algebra.hpp"

namespace wong {

// Coulomb-gauge Yang-Mills discretized on a periodic site lattice with
// central differences (fields on sites, not links).  A gauge field A^mu_i(x)
// is stored flat with index (x*d + i)*n_g + mu, an algebra field eps^mu(x)
// with index x*n_g + mu; sites are flattened x = sum_k x_k extent^k.  That
// layout is also the coordinate order of the bridge ChartSystem.
struct Lattice {
  int d = 2;          // spatial dimension
  int extent = 2;     // sites per dimension
  double spacing = 1.0;

  Lattice() = default;
  Lattice(int d_, int extent_, double spacing_ = 1.0);

  int sites() const;
  int gauge_size(int n_g) const { return sites() * d * n_g; }
  int alg_size(int n_g) const { return sites() * n_g; }

  // periodic neighbour of flattened site s in +-1 steps along dir
  int shift(int s, int dir, int step) const;

  int gauge_index(int site, int dir, int mu, int n_g) const {
    return (site * d + dir) * n_g + mu;
  }
  int alg_index(int site, int mu, int n_g) const { return site * n_g + mu; }

  double volume_weight() const;  // spacing^d, the measure of one site

  // Dimension of the space of algebra fields annihilated by the central
  // difference: parity sign patterns (periodic only for even extent) tensor
  // the algebra.  This is the guaranteed rank deficiency of the gauge-fixing
  // operator div(D .) at every background, because those patterns weight its
  // rows to zero.
  int stencil_corank(int n_g) const;
};

// -------------------------------------------------------------- operators
// All operators take flat vectors in the layout above; sizes are checked and
// ShapeMismatch thrown on disagreement.

// central-difference divergence per site and algebra direction
Eigen::VectorXd divergence(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a);

// central-difference gradient of an algebra field
Eigen::VectorXd gradient(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& eps);

// covariant Killing operator (D eps)^mu_i = grad_i eps^mu + c^mu_{nb} A^n_i eps^b
Eigen::VectorXd covariant_derivative(const Lattice& lat, const LieAlgebra& alg,
                                     const Eigen::VectorXd& a, const Eigen::VectorXd& eps);

// adjoint of D in the k-weighted inner products:
// (D' eta)^l = -div eta^l - c^l_{nb} A^n_i eta^{b i}
Eigen::VectorXd covariant_adjoint(const Lattice& lat, const LieAlgebra& alg,
                                  const Eigen::VectorXd& a, const Eigen::VectorXd& eta);

// gauge-fixing operator div(D eps): the pairing of constraint and orbit
Eigen::VectorXd fp_apply(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& eps);

// k-lowered orbit operator (k D'D eps)_mu; plain-symmetric positive
// semidefinite, the per-volume density of the orbit metric
Eigen::VectorXd orbit_apply(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& eps);

// Zero modes of orbit_apply among the central-difference sign patterns
// prod_{k in S} (-1)^{x_k} tensor algebra basis (the only kernel the periodic
// stencil produces at A = 0; detection is by operator application so modes
// lifted by a nonabelian background drop out automatically).  Orthonormal in
// the plain inner product.
std::vector<Eigen::VectorXd> kernel_modes(const Lattice& lat, const LieAlgebra& alg,
                                          const Eigen::VectorXd& a, double tol = 1e-8);

// Conjugate-gradient solve of orbit_apply(omega) = rhs to relative residual
// <= 1e-10 (target 1e-12).  With project = true the detected kernel is
// removed from rhs and solution (the chosen boundary condition); with
// project = false a rhs with kernel content throws KernelComponent.
// Throws SolverStalled when CG fails to converge.
Eigen::VectorXd green_solve(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& rhs, bool project = true);

// gauge connection applied to a gauge field: green_solve of (k D' eta);
// reproduces generators, coulomb_connection_apply(A, D eps) = eps modulo
// kernel modes
Eigen::VectorXd coulomb_connection_apply(const Lattice& lat, const LieAlgebra& alg,
                                         const Eigen::VectorXd& a, const Eigen::VectorXd& eta);

// Dense gauge-fixing matrix (div D on the algebra-field basis), inverted on
// the complement of its structural kernel (see Lattice::stencil_corank; the
// same parity patterns that kill the rows also leave a kernel on the solve
// side, and divergences are automatically compatible with both).  Throws
// GribovHorizon when the retained block is near-singular and
// EvaluationFailure when the rank drops below the structural count.
struct FpSolver {
  Eigen::MatrixXd pinv;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return pinv * rhs; }
};
FpSolver fp_solver(const Lattice& lat, const LieAlgebra& alg, const Eigen::VectorXd& a,
                   double cond_limit = 1e12);

// eta - D fp^{-1} div eta: removes the constraint-visible component along the
// orbit directions; acts as identity on divergence-free fields
Eigen::VectorXd tangent_project(const Lattice& lat, const LieAlgebra& alg,
                                const Eigen::VectorXd& a, const Eigen::VectorXd& eta);

// ---------------------------------------------------------------- bridge
// Materializes the lattice theory as a finite-dimensional ChartSystem: flat
// metric h^d k tensor identity, Killing columns D(delta e_mu), divergence
// constraint, product algebra with pointwise structure constants.  Throws
// TooLarge above n_p = 1000.
ChartSystem to_chart_system(const Lattice& lat, const LieAlgebra& alg);

// product algebra of dim n_g * sites used by the bridge (exposed for tests)
LieAlgebra product_algebra(const Lattice& lat, const LieAlgebra& alg);

}  // namespace wong

#endif
