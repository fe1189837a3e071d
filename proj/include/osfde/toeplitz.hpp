#pragma once

#include "osfde/fft.hpp"
#include "osfde/krylov.hpp"
#include "osfde/types.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace osfde {

/// Circulant matrix C[i][j] = c[(i - j) mod m], applied through its DFT
/// eigenvalues.
class CirculantOperator {
 public:
  explicit CirculantOperator(std::vector<double> first_col);

  std::size_t size() const noexcept { return first_col_.size(); }
  const std::vector<double>& first_col() const noexcept { return first_col_; }
  const std::vector<fft::Complex>& eigenvalues() const noexcept { return eigenvalues_; }
  double spectral_radius() const noexcept { return radius_; }

  Vector apply(const Vector& x) const;
  /// C^{-1} x. Throws SingularMatrix if an eigenvalue vanishes.
  Vector solve(const Vector& x) const;
  Matrix dense() const;

 private:
  std::vector<double> first_col_;
  std::vector<fft::Complex> eigenvalues_;
  double radius_ = 0.0;
};

/// Skew-circulant matrix: S[i][j] = c[i - j] for i >= j and -c[m + i - j]
/// otherwise. Diagonalized by the DFT after scaling by omega^k, omega = e^{i pi/m}.
class SkewCirculantOperator {
 public:
  explicit SkewCirculantOperator(std::vector<double> first_col);

  std::size_t size() const noexcept { return first_col_.size(); }
  const std::vector<double>& first_col() const noexcept { return first_col_; }
  /// omega^k, k = 0..m-1
  const std::vector<fft::Complex>& twiddles() const noexcept { return twiddle_; }
  /// Eigenvalues in the twiddled DFT basis.
  const std::vector<fft::Complex>& eigenvalues() const noexcept { return eigenvalues_; }
  double spectral_radius() const noexcept { return radius_; }

  Vector apply(const Vector& x) const;
  Matrix dense() const;

 private:
  std::vector<double> first_col_;
  std::vector<fft::Complex> twiddle_;
  std::vector<fft::Complex> eigenvalues_;
  double radius_ = 0.0;
};

/// Nonsymmetric Toeplitz matrix T[i][j] = col[i - j] (i >= j), row[j - i]
/// (j > i). Matvecs embed T in a circulant whose order is the smallest power
/// of two >= 2m - 1.
class ToeplitzOperator {
 public:
  ToeplitzOperator(std::vector<double> first_col, std::vector<double> first_row);

  static ToeplitzOperator identity(std::size_t m);

  std::size_t size() const noexcept { return first_col_.size(); }
  const std::vector<double>& first_col() const noexcept { return first_col_; }
  const std::vector<double>& first_row() const noexcept { return first_row_; }

  /// shift * I + scale * T
  ToeplitzOperator affine(double shift, double scale) const;

  Vector apply(const Vector& x) const;
  /// (T x, T y) through one complex transform pair.
  std::pair<Vector, Vector> apply_pair(const Vector& x, const Vector& y) const;
  Matrix dense() const;

  /// Strang circulant: keeps the central diagonals |k| <= m/2 and wraps them.
  CirculantOperator strang_circulant() const;

 private:
  std::vector<double> first_col_;
  std::vector<double> first_row_;
  std::vector<fft::Complex> embedding_eigenvalues_;
  double embedding_radius_ = 0.0;

  std::vector<fft::Complex> apply_complex(std::vector<fft::Complex> buf) const;
};

/// Gohberg-Semencul representation of a Toeplitz inverse,
///   P^{-1} = (S1 C1 - S2 C2) / (2 v1),
/// where v = P^{-1} e_1 and vt = P^{-1} e_m; S1, S2 are skew-circulant with
/// first columns v and (-vt_m, vt_1, ..., vt_{m-1}); C1, C2 are circulant with
/// first columns (vt_m, vt_1, ..., vt_{m-1}) and v.
class GsInverse {
 public:
  /// Throws NonPositivePivot when v[0] <= 0.
  GsInverse(std::vector<double> v, std::vector<double> v_tilde);

  std::size_t size() const noexcept { return v_.size(); }
  const std::vector<double>& v() const noexcept { return v_; }
  const std::vector<double>& v_tilde() const noexcept { return v_tilde_; }
  double v1() const noexcept { return v_.front(); }

  Vector apply(const Vector& y) const;
  /// (P^{-1} x, P^{-1} y) through one complex evaluation.
  std::pair<Vector, Vector> apply_pair(const Vector& x, const Vector& y) const;

 private:
  std::vector<double> v_;
  std::vector<double> v_tilde_;
  SkewCirculantOperator s1_;
  SkewCirculantOperator s2_;
  CirculantOperator c1_;
  CirculantOperator c2_;

  std::vector<fft::Complex> apply_complex(std::vector<fft::Complex> y) const;
};

struct ToeplitzSolveOptions {
  double tol = 1e-12;
  std::size_t max_iter = 500;
};

/// Solves T x = b by GMRES right-preconditioned with the Strang circulant.
/// Throws InnerSolverDivergence if the tolerance is not reached.
Vector toeplitz_solve(const ToeplitzOperator& t, const Vector& b, double tol = 1e-12,
                      std::size_t max_iter = 500);

/// Same as toeplitz_solve, also returning the iteration count.
GmresResult toeplitz_solve_report(const ToeplitzOperator& t, const Vector& b, double tol,
                                  std::size_t max_iter);

/// Builds the Gohberg-Semencul inverse of P from the two setup solves
/// P v = e_1, P vt = e_m, each to relative residual tol.
GsInverse gs_build(const ToeplitzOperator& p, double tol = 1e-12);

inline Vector gs_apply(const GsInverse& inv, const Vector& y) { return inv.apply(y); }
inline Vector toeplitz_matvec(const ToeplitzOperator& t, const Vector& x) { return t.apply(x); }

}  // namespace osfde
