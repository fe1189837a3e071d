#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace osfde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& where, std::size_t expected, std::size_t got)
      : Error(where + ": expected length " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The first entry of the inverse's first column was not positive, so the
/// Gohberg-Semencul representation cannot be formed.
class NonPositivePivot : public Error {
 public:
  explicit NonPositivePivot(double v1)
      : Error("Gohberg-Semencul pivot v1 = " + std::to_string(v1) + " is not positive"), v1_(v1) {}
  double v1() const noexcept { return v1_; }

 private:
  double v1_;
};

class InnerSolverDivergence : public Error {
 public:
  using Error::Error;
};

class NonPositiveDiffusion : public Error {
 public:
  NonPositiveDiffusion(std::size_t node, double value)
      : Error("diffusion coefficient at node " + std::to_string(node) + " is " +
              std::to_string(value) + " (must be > 0)") {}
};

/// Outer Krylov solve failed during time stepping.
class GmresDivergence : public Error {
 public:
  GmresDivergence(std::size_t step, double rel_residual)
      : Error("GMRES did not converge at time step " + std::to_string(step) +
              " (relative residual " + std::to_string(rel_residual) + ")"),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class SizeGuardExceeded : public Error {
 public:
  SizeGuardExceeded(const std::string& what, std::size_t size, std::size_t limit)
      : Error(what + ": size " + std::to_string(size) + " exceeds dense limit " +
              std::to_string(limit)) {}
};

class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

class MissingExactSolution : public Error {
 public:
  MissingExactSolution() : Error("problem has no exact solution; errors cannot be computed") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace osfde
