#include "osfde/krylov.hpp"

#include "osfde/error.hpp"

#include <algorithm>
#include <cmath>

namespace osfde {

GmresResult gmres(const LinearMap& apply_a, const LinearMap& apply_minv, const Vector& b,
                  const Vector& x0, const GmresOptions& opts) {
  if (!(opts.rel_tol > 0.0)) throw InvalidArgument("gmres: rel_tol must be positive");
  const auto n = b.size();
  if (x0.size() != n) throw DimensionMismatch("gmres initial guess", n, x0.size());

  GmresResult result;
  const Vector r0 = b - apply_a(x0);
  const double beta = r0.norm();
  result.residual_history.push_back(beta);
  if (beta == 0.0) {
    result.solution = x0;
    result.converged = true;
    return result;
  }

  const std::size_t cap = std::max<std::size_t>(opts.max_iter, 1);
  std::vector<Vector> basis;
  std::vector<Vector> directions;
  basis.reserve(std::min<std::size_t>(cap + 1, 64));
  basis.push_back(r0 / beta);

  // Column k of the Hessenberg matrix holds k + 2 entries.
  std::vector<std::vector<double>> hess;
  std::vector<double> cs, sn;
  std::vector<double> g{beta};

  std::size_t k = 0;
  double scale = beta;
  if (opts.reference == ResidualReference::rhs && b.norm() > 0.0) scale = b.norm();
  const double target = opts.rel_tol * scale;
  if (beta <= target) {
    result.solution = x0;
    result.converged = true;
    result.true_rel_residual = beta / scale;
    return result;
  }
  while (k < cap) {
    directions.push_back(apply_minv(basis[k]));
    Vector w = apply_a(directions[k]);
    if (w.size() != n) throw DimensionMismatch("gmres operator output", n, w.size());

    auto& col = hess.emplace_back(k + 2, 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      col[i] = w.dot(basis[i]);
      w -= col[i] * basis[i];
    }
    const double hnext = w.norm();
    col[k + 1] = hnext;

    for (std::size_t i = 0; i < k; ++i) {
      const double a = col[i];
      const double c = col[i + 1];
      col[i] = cs[i] * a + sn[i] * c;
      col[i + 1] = -sn[i] * a + cs[i] * c;
    }
    const double rho = std::hypot(col[k], col[k + 1]);
    cs.push_back(rho == 0.0 ? 1.0 : col[k] / rho);
    sn.push_back(rho == 0.0 ? 0.0 : col[k + 1] / rho);
    col[k] = rho;
    col[k + 1] = 0.0;
    g.push_back(-sn[k] * g[k]);
    g[k] = cs[k] * g[k];

    const double resid = std::abs(g[k + 1]);
    result.residual_history.push_back(resid);
    ++k;

    const bool breakdown = hnext <= 1e-14 * beta;
    if (resid <= target || breakdown) break;
    basis.push_back(w / hnext);
  }

  // Back substitution on the k x k triangular factor.
  std::vector<double> y(k, 0.0);
  for (std::size_t ir = k; ir-- > 0;) {
    double sum = g[ir];
    for (std::size_t j = ir + 1; j < k; ++j) {
      sum -= hess[j][ir] * y[j];
    }
    const double diag = hess[ir][ir];
    y[ir] = diag == 0.0 ? 0.0 : sum / diag;
  }
  result.solution = x0;
  for (std::size_t j = 0; j < k; ++j) result.solution += y[j] * directions[j];
  result.iterations = k;

  result.true_rel_residual = (b - apply_a(result.solution)).norm() / scale;
  const double estimate = result.residual_history.back() / scale;
  result.converged = estimate <= opts.rel_tol && result.true_rel_residual <= 10.0 * opts.rel_tol;

  if (opts.track_orthogonality) {
    double loss = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) loss = std::max(loss, std::abs(basis[i].dot(basis[j])));
    }
    result.orthogonality_loss = loss;
  }
  return result;
}

}  // namespace osfde
