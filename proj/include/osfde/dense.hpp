#pragma once

#include "osfde/types.hpp"

#include <Eigen/LU>

namespace osfde {

/// Pivoted LU factorization kept for repeated solves with one matrix.
class DenseLu {
 public:
  /// Throws SingularMatrix when a pivot is negligible relative to the largest.
  explicit DenseLu(const Matrix& a);

  Vector solve(const Vector& b) const;
  Eigen::Index size() const noexcept { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

/// Direct solve A x = b by partial-pivoting LU.
Vector plu_solve(const Matrix& a, const Vector& b);

}  // namespace osfde
