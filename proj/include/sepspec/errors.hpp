#ifndef SEPSPEC_ERRORS_HPP
#define SEPSPEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sepspec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or size of an input does not match the model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid or incomplete configuration (missing sampler, bad config file, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Lag outside [0, n) (or [1, n) where a positive lag is required).
class InvalidLagError : public Error {
 public:
  using Error::Error;
};

// Resolvent integral with a pole on the support of the measure.
class SingularIntegralError : public Error {
 public:
  using Error::Error;
};

// Fixed-point solve did not converge; message carries the residual trace.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Converged point violates the admissible solution set.
class SpuriousRootError : public Error {
 public:
  using Error::Error;
};

// Contour integrand too close to a singularity of the kernel.
class NearSingularError : public Error {
 public:
  using Error::Error;
};

// g1 or g2 coincide between the two contour variables.
class CoincidenceError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (CSV cells, file contents).
class DataError : public Error {
 public:
  using Error::Error;
};

// Parameter combination outside the theory's validity range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

}  // namespace sepspec

#endif
