#ifndef WONG_ERRORS_HPP
#define WONG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wong {

// Base class for every error this library throws on purpose.  Anything else
// escaping is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define WONG_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
  }

WONG_DEFINE_ERROR(DimensionMismatch);  // tensor shape disagreements
WONG_DEFINE_ERROR(EvaluationFailure);  // evaluator returned non-finite values
WONG_DEFINE_ERROR(UnknownSystem);      // builtin name not registered
WONG_DEFINE_ERROR(DegenerateOrbit);    // orbit metric condition number too large
WONG_DEFINE_ERROR(GribovHorizon);      // Faddeev-Popov matrix numerically singular
WONG_DEFINE_ERROR(NotFlat);            // flat-path op called on a curved system
WONG_DEFINE_ERROR(StepFailure);        // integrator step produced non-finite state
WONG_DEFINE_ERROR(ProjectionDiverged); // constraint projection left its basin
WONG_DEFINE_ERROR(ShapeMismatch);      // lattice field shape disagreements
WONG_DEFINE_ERROR(SolverStalled);      // iterative solver hit max iterations
WONG_DEFINE_ERROR(KernelComponent);    // rhs has a component in the operator kernel
WONG_DEFINE_ERROR(TooLarge);           // dense bridge requested beyond size cap
WONG_DEFINE_ERROR(ConstraintViolated); // state violates the section constraint
WONG_DEFINE_ERROR(ConfigError);        // bad config file or CLI arguments
WONG_DEFINE_ERROR(DegenerateBasis);    // nonholonomic basis solve lost rank
WONG_DEFINE_ERROR(DegenerateMetric);   // total metric pseudoinverse inconsistent

#undef WONG_DEFINE_ERROR

}  // namespace wong

#endif
