#pragma once

#include "osfde/kernel_wsgd.hpp"
#include "osfde/scheme1d.hpp"
#include "osfde/toeplitz.hpp"
#include "osfde/types.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace osfde {

/// Tensor grid on [x_left, x_right] x [y_left, y_right] with m1 x m2 interior
/// nodes. Unknowns are stored y-major: index(i, j) = i + j * m1 (0-based).
struct Grid2D {
  double x_left = 0.0;
  double x_right = 1.0;
  double y_left = 0.0;
  double y_right = 1.0;
  std::size_t m1 = 1;
  std::size_t m2 = 1;

  Grid2D(double xl, double xr, double yl, double yr, std::size_t nx, std::size_t ny);
  double h1() const noexcept { return (x_right - x_left) / static_cast<double>(m1 + 1); }
  double h2() const noexcept { return (y_right - y_left) / static_cast<double>(m2 + 1); }
  /// x_i, i = 0..m1+1
  double x(std::size_t i) const noexcept { return x_left + static_cast<double>(i) * h1(); }
  /// y_j, j = 0..m2+1
  double y(std::size_t j) const noexcept { return y_left + static_cast<double>(j) * h2(); }
  std::size_t size() const noexcept { return m1 * m2; }
  /// Interior node (i, j), 1-based, to its position in the unknown vector.
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return (i - 1) + (j - 1) * m1; }
};

using Coefficient2D = std::function<double(double, double)>;
using Source2D = std::function<double(double, double, double)>;

struct Problem2D {
  std::string name;
  double x_left = 0.0;
  double x_right = 1.0;
  double y_left = 0.0;
  double y_right = 1.0;
  double horizon = 1.0;
  FractionalOrder alpha{1.5};
  FractionalOrder beta{1.5};
  Coefficient2D d;
  Coefficient2D e;
  Source2D f;
  Coefficient2D phi;
  std::optional<Source2D> exact;
};

/// d = x^2 + y^2 + 20, e = sin(pi (x+4)/24) + sin(pi (y+4)/24) on [0, 2]^2,
/// T = 1, exact u = x^4 (2-x)^4 y^4 (2-y)^4 t^3.
Problem2D example2(FractionalOrder alpha, FractionalOrder beta);
/// Homogeneous problem with unit coefficients; the solution is zero.
Problem2D zero_problem_2d(FractionalOrder alpha, FractionalOrder beta);

/// y-major (i fastest) to x-major (j fastest) reordering.
Vector xy_permute(const Vector& u, std::size_t m1, std::size_t m2);
/// Inverse of xy_permute.
Vector xy_unpermute(const Vector& u, std::size_t m1, std::size_t m2);

/// (I_{m2} (x) T) u: T applied to each contiguous block of length T.size().
Vector apply_block_diagonal(const ToeplitzOperator& t, const Vector& u);
/// (T (x) I_{m1}) u for y-major u of length m1 * T.size().
Vector apply_kron_left(const ToeplitzOperator& t, const Vector& u, std::size_t m1);

/// A = I + D Bx + E By with Bx = -eta_x (I (x) G_alpha), By = -eta_y (G_beta (x) I).
class SystemOperator2D {
 public:
  SystemOperator2D(ToeplitzOperator g_alpha, ToeplitzOperator g_beta, Vector diag_d, Vector diag_e,
                   double eta_x, double eta_y);

  std::size_t m1() const noexcept { return g_alpha_.size(); }
  std::size_t m2() const noexcept { return g_beta_.size(); }
  std::size_t size() const noexcept { return m1() * m2(); }
  double eta_x() const noexcept { return eta_x_; }
  double eta_y() const noexcept { return eta_y_; }
  const ToeplitzOperator& g_alpha() const noexcept { return g_alpha_; }
  const ToeplitzOperator& g_beta() const noexcept { return g_beta_; }
  const Vector& diag_d() const noexcept { return diag_d_; }
  const Vector& diag_e() const noexcept { return diag_e_; }

  Vector apply_lhs(const Vector& u) const;  ///< (I + D Bx + E By) u
  Vector apply_rhs(const Vector& u) const;  ///< (I - D Bx - E By) u
  /// Dense I + sign (D Bx + E By).
  Matrix dense(double sign = 1.0) const;

 private:
  /// (D Bx + E By) u
  Vector coupling(const Vector& u) const;

  ToeplitzOperator g_alpha_;
  ToeplitzOperator g_beta_;
  Vector diag_d_;
  Vector diag_e_;
  double eta_x_;
  double eta_y_;
};

/// Samples D and E at the interior nodes; eta_x = tau / (2 h1^alpha), eta_y = tau / (2 h2^beta).
SystemOperator2D assemble_system_2d(const Problem2D& problem, const Grid2D& grid, double tau);

inline Vector apply_system_2d(const SystemOperator2D& op, const Vector& u) { return op.apply_lhs(u); }

/// Which Toeplitz blocks the block Jacobi smoothers invert.
enum class SmootherBlocks {
  /// Tx = I + d_mean Bx, Ty = I + e_mean By.
  one_sided,
  /// The exact block diagonal of P in each ordering: Tx also carries the
  /// diagonal of e_mean By, and Ty the diagonal of d_mean Bx.
  block_diagonal,
};

struct MultigridOptions {
  SmootherBlocks smoother = SmootherBlocks::block_diagonal;
  std::size_t pre_smooth = 1;
  std::size_t post_smooth = 1;
  /// Levels with at most this many unknowns are solved by plain GMRES.
  std::size_t coarse_size = 49;
  double coarse_tol = 1e-10;
  std::size_t max_levels = 16;
  double gs_tol = 1e-12;
};

/// Multigrid approximation of P^{-1} for P = I + d_mean Bx + e_mean By.
/// Coarse levels rediscretize P with doubled mesh widths; both mesh counts
/// must be odd to coarsen. Smoothers are block Jacobi sweeps with
/// Tx = I + d_mean Bx (pre) and Ty = I + e_mean By (post), whose Toeplitz
/// blocks are inverted through Gohberg-Semencul representations.
class Precond2D {
 public:
  Precond2D(FractionalOrder alpha, FractionalOrder beta, double d_mean, double e_mean,
            std::size_t m1, std::size_t m2, double h1, double h2, double tau,
            MultigridOptions opts = {});

  std::size_t levels() const noexcept { return levels_.size(); }
  std::size_t size() const noexcept;
  double d_mean() const noexcept { return d_mean_; }
  double e_mean() const noexcept { return e_mean_; }
  std::size_t level_m1(std::size_t level) const { return levels_.at(level).m1; }
  std::size_t level_m2(std::size_t level) const { return levels_.at(level).m2; }

  /// P x on the finest level.
  Vector apply_p(const Vector& x) const { return apply_p(0, x); }
  /// Tx^{-1} r and Ty^{-1} r on the finest level.
  Vector solve_tx(const Vector& r) const { return solve_tx(0, r); }
  Vector solve_ty(const Vector& r) const { return solve_ty(0, r); }
  /// One V-cycle from a zero initial guess.
  Vector vcycle(const Vector& z) const;

 private:
  struct Level {
    std::size_t m1 = 0;
    std::size_t m2 = 0;
    double eta_x = 0.0;
    double eta_y = 0.0;
    ToeplitzOperator g_alpha;
    ToeplitzOperator g_beta;
    GsInverse tx_block;  ///< (I - d_mean eta_x G_alpha)^{-1}
    GsInverse ty_block;  ///< (I - e_mean eta_y G_beta)^{-1}
  };

  Vector apply_p(std::size_t level, const Vector& x) const;
  Vector solve_tx(std::size_t level, const Vector& r) const;
  Vector solve_ty(std::size_t level, const Vector& r) const;
  Vector cycle(std::size_t level, const Vector& z) const;
  Vector coarse_solve(std::size_t level, const Vector& z) const;

  double d_mean_;
  double e_mean_;
  MultigridOptions opts_;
  std::vector<Level> levels_;
};

inline Vector vcycle_apply(const Precond2D& precond, const Vector& z) { return precond.vcycle(z); }

/// 1D piecewise-linear interpolation from m_coarse to 2 m_coarse + 1 nodes
/// (homogeneous boundary values).
Vector prolong_1d(const Vector& coarse);
/// Bilinear interpolation of a y-major coarse grid function.
Vector prolong_2d(const Vector& coarse, std::size_t m1_coarse, std::size_t m2_coarse);
/// Transpose of prolong_2d scaled by 1/4.
Vector restrict_2d(const Vector& fine, std::size_t m1_fine, std::size_t m2_fine);

struct SolveOptions2D : SolveOptions {
  MultigridOptions multigrid{};
  /// Diagonal of a certified Q; when set (and tau <= 1) the energy estimate
  /// is checked in the norm h1 h2 v^T Q v.
  std::optional<Vector> energy_q;
};

/// Advances A u^n = (I - D Bx - E By) u^{n-1} + tau f^{n-1/2}, n = 1..N.
/// E(h, tau) uses ||e||^2 = h1 h2 e^T e.
AdvanceResult advance_2d(const Problem2D& problem, const Grid2D& grid, const TimeGrid& tgrid,
                         const SolveOptions2D& opts = {});

/// Nodal samples of d and e; throws NonPositiveDiffusion if either is negative.
std::pair<Vector, Vector> sample_coefficients(const Problem2D& problem, const Grid2D& grid);

}  // namespace osfde
