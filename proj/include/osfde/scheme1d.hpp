#pragma once

#include "osfde/kernel_wsgd.hpp"
#include "osfde/krylov.hpp"
#include "osfde/toeplitz.hpp"
#include "osfde/types.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace osfde {

struct Grid1D {
  double x_left = 0.0;
  double x_right = 1.0;
  std::size_t m = 1;  ///< interior nodes

  Grid1D(double left, double right, std::size_t interior);
  double h() const noexcept { return (x_right - x_left) / static_cast<double>(m + 1); }
  /// x_i = x_left + i h, i = 0..m+1; interior nodes are 1..m.
  double node(std::size_t i) const noexcept { return x_left + static_cast<double>(i) * h(); }
  std::vector<double> interior_nodes() const;
};

struct TimeGrid {
  double horizon = 1.0;
  std::size_t steps = 1;

  TimeGrid(double t_final, std::size_t n);
  double tau() const noexcept { return horizon / static_cast<double>(steps); }
  double time(std::size_t n) const noexcept { return static_cast<double>(n) * tau(); }
  /// t_{n-1/2}
  double half_step(std::size_t n) const noexcept { return (static_cast<double>(n) - 0.5) * tau(); }
};

using Coefficient1D = std::function<double(double)>;
using Source1D = std::function<double(double, double)>;

struct Problem1D {
  std::string name;
  double x_left = 0.0;
  double x_right = 1.0;
  double horizon = 1.0;
  Coefficient1D d;
  Source1D f;
  Coefficient1D phi;
  std::optional<Source1D> exact;
};

/// d(x) = cos(pi x / 2) + 0.1 on [0, 1], T = 1, exact u = 2^6 x^3 (1-x)^3 t^3.
Problem1D example1(FractionalOrder alpha);
/// Homogeneous problem whose solution is identically zero.
Problem1D zero_problem_1d();

enum class SolverKind { pgmres_t, plu };
std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

/// Lower-Hessenberg Toeplitz matrix of WSGD weights: first column
/// (w_1, ..., w_M), first row (w_1, w_0, 0, ..., 0).
ToeplitzOperator assemble_galpha(FractionalOrder alpha, std::size_t m);

/// A = I - eta D G (sign = -1) or its Crank-Nicolson mate B = I + eta D G.
class SystemOperator1D {
 public:
  SystemOperator1D(ToeplitzOperator kernel, std::vector<double> diag_d, double eta);

  std::size_t size() const noexcept { return diag_d_.size(); }
  double eta() const noexcept { return eta_; }
  const ToeplitzOperator& kernel() const noexcept { return kernel_; }
  const std::vector<double>& diag_d() const noexcept { return diag_d_; }

  Vector apply_lhs(const Vector& u) const;  ///< (I - eta D G) u
  Vector apply_rhs(const Vector& u) const;  ///< (I + eta D G) u

 private:
  Vector scaled_kernel(const Vector& u) const;  ///< eta D G u

  ToeplitzOperator kernel_;
  std::vector<double> diag_d_;
  double eta_;
};

struct StepMatrices1D {
  SystemOperator1D system;
  double d_mean;
  /// P = I - eta d_mean G.
  ToeplitzOperator preconditioner_matrix;
  GsInverse preconditioner;

  LinearMap lhs() const;
  LinearMap rhs() const;
  LinearMap precond() const;
};

/// Samples d at the interior nodes; throws NonPositiveDiffusion if any
/// sample is <= 0.
std::vector<double> sample_diffusion(const Problem1D& problem, const Grid1D& grid);

StepMatrices1D step_matrices(const Problem1D& problem, const Grid1D& grid, const TimeGrid& tgrid,
                             FractionalOrder alpha, double gs_tol = 1e-12);

struct SolveOptions {
  SolverKind solver = SolverKind::pgmres_t;
  /// Time-step solves measure the residual against ||b||, so a warm start
  /// counts toward convergence.
  GmresOptions gmres{.reference = ResidualReference::rhs};
  /// Start each step's Krylov solve from u^{n-1} (true) or from zero.
  bool warm_start = true;
  bool store_history = false;
  /// Check the discrete energy estimate at every step (only meaningful for tau <= 1).
  bool check_stability = true;
  double stability_slack = 1e-10;
};

struct PhaseTimes {
  double setup_s = 0.0;
  double solve_s = 0.0;
  double total_s = 0.0;
};

struct SolveReport {
  std::vector<std::size_t> iterations;
  std::vector<std::vector<double>> residual_histories;
  /// E(h, tau) = max_n ||e^n|| when the exact solution is known.
  std::optional<double> error;
  PhaseTimes times;
  /// Number of steps at which the energy estimate failed.
  std::size_t stability_violations = 0;
  /// max_n ||u^n||^2 / bound_n over the checked steps.
  double worst_stability_ratio = 0.0;
  bool stability_checked = false;

  double mean_iterations() const;
};

struct AdvanceResult {
  Vector final_state;
  std::vector<Vector> history;  ///< u^0..u^N when requested
  SolveReport report;
};

/// Advances A u^n = B u^{n-1} + tau f^{n-1/2}, n = 1..N, from u^0 = phi.
/// Throws GmresDivergence (with the step index) if a Krylov solve fails.
AdvanceResult advance(const Problem1D& problem, const Grid1D& grid, const TimeGrid& tgrid,
                      FractionalOrder alpha, const SolveOptions& opts = {});

/// log2(E_coarse / E_fine); successive entries of errors refine by a factor 2.
std::vector<std::optional<double>> convergence_rates(const std::vector<double>& errors);

struct ErrorRateRow {
  double h;
  double tau;
  double error;
  std::optional<double> rate;
};

/// Builds the (h, tau, E, rate) table from reports on a nested ladder where
/// exactly one of h or tau halves between consecutive entries.
std::vector<ErrorRateRow> error_and_rates(const std::vector<double>& h,
                                          const std::vector<double>& tau,
                                          const std::vector<SolveReport>& reports);

}  // namespace osfde
