#include "osfde/dense.hpp"

#include "osfde/error.hpp"

#include <limits>

namespace osfde {

DenseLu::DenseLu(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("plu: square matrix", static_cast<std::size_t>(a.rows()),
                            static_cast<std::size_t>(a.cols()));
  }
  lu_.compute(a);
  const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
  const double biggest = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  const double smallest = diag.size() > 0 ? diag.minCoeff() : 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  if (!(smallest > eps * static_cast<double>(a.rows()) * biggest)) {
    throw SingularMatrix("plu: matrix is numerically singular (pivot ratio " +
                         std::to_string(biggest > 0.0 ? smallest / biggest : 0.0) + ")");
  }
}

Vector DenseLu::solve(const Vector& b) const {
  if (b.size() != lu_.rows()) {
    throw DimensionMismatch("plu solve", static_cast<std::size_t>(lu_.rows()),
                            static_cast<std::size_t>(b.size()));
  }
  return lu_.solve(b);
}

Vector plu_solve(const Matrix& a, const Vector& b) { return DenseLu(a).solve(b); }

}  // namespace osfde
