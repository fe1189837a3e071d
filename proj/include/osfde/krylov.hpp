#pragma once

#include "osfde/types.hpp"

#include <cstddef>
#include <vector>

namespace osfde {

/// Denominator of the relative residual used for stopping.
enum class ResidualReference {
  initial_residual,  ///< ||b - A x0||
  rhs,               ///< ||b||
};

struct GmresOptions {
  /// Stop once the estimated ||r_k|| / reference falls to this value.
  double rel_tol = 1e-7;
  ResidualReference reference = ResidualReference::initial_residual;
  std::size_t max_iter = 500;
  /// Record max |<v_i, v_j>| (i != j) over the Arnoldi basis. O(k^2 n).
  bool track_orthogonality = false;
};

struct GmresResult {
  Vector solution;
  std::size_t iterations = 0;
  /// Recurrence estimates of ||r_k||_2, k = 0..iterations (absolute).
  std::vector<double> residual_history;
  /// ||b - A x|| / reference recomputed from the returned iterate.
  double true_rel_residual = 0.0;
  bool converged = false;
  double orthogonality_loss = 0.0;

  double estimated_rel_residual() const {
    if (residual_history.empty() || residual_history.front() == 0.0) return 0.0;
    return residual_history.back() / residual_history.front();
  }
};

/// Full (unrestarted) GMRES with right preconditioning, A M^{-1} y = b,
/// x = x0 + M^{-1} V y. The preconditioned directions are stored, so a
/// preconditioner that varies between applications is also admissible.
/// Modified Gram-Schmidt; one A-apply plus one M^{-1}-apply per iteration.
/// Hitting max_iter returns the best iterate with converged = false.
GmresResult gmres(const LinearMap& apply_a, const LinearMap& apply_minv, const Vector& b,
                  const Vector& x0, const GmresOptions& opts = {});

}  // namespace osfde
