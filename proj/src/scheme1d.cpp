#include "osfde/scheme1d.hpp"

#include "energy_monitor.hpp"
#include "osfde/dense.hpp"
#include "osfde/error.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace osfde {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double binomial(int n, int k) {
  return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
}

}  // namespace

Grid1D::Grid1D(double left, double right, std::size_t interior)
    : x_left(left), x_right(right), m(interior) {
  if (interior < 1) throw InvalidArgument("Grid1D: need at least one interior node");
  if (!(right > left)) throw InvalidArgument("Grid1D: x_right must exceed x_left");
}

std::vector<double> Grid1D::interior_nodes() const {
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = node(i + 1);
  return x;
}

TimeGrid::TimeGrid(double t_final, std::size_t n) : horizon(t_final), steps(n) {
  if (n < 1) throw InvalidArgument("TimeGrid: need at least one step");
  if (!(t_final > 0.0)) throw InvalidArgument("TimeGrid: horizon must be positive");
}

Problem1D example1(FractionalOrder alpha) {
  const double a = alpha.value();
  Problem1D p;
  p.name = "example1";
  p.x_left = 0.0;
  p.x_right = 1.0;
  p.horizon = 1.0;
  p.d = [](double x) { return std::cos(std::numbers::pi * x / 2.0) + 0.1; };
  p.phi = [](double) { return 0.0; };
  p.exact = [](double x, double t) { return 64.0 * std::pow(x * (1.0 - x), 3) * t * t * t; };
  // Riemann-Liouville derivative of x^3 (1-x)^3 expanded term by term.
  std::array<double, 4> coef{};
  for (int k = 3; k <= 6; ++k) {
    const double sign = (k - 1) % 2 == 0 ? 1.0 : -1.0;  // (-1)^{k-1}
    coef[k - 3] = binomial(3, k - 3) * std::tgamma(k + 1.0) / (sign * std::tgamma(k + 1.0 - a));
  }
  p.f = [a, coef, d = p.d](double x, double t) {
    double frac = 0.0;
    double power = std::pow(x, 3.0 - a);
    for (double c : coef) {
      frac += c * power;
      power *= x;
    }
    return 192.0 * std::pow(x * (1.0 - x), 3) * t * t - 64.0 * t * t * t * d(x) * frac;
  };
  return p;
}

Problem1D zero_problem_1d() {
  Problem1D p;
  p.name = "zero1d";
  p.d = [](double) { return 1.0; };
  p.f = [](double, double) { return 0.0; };
  p.phi = [](double) { return 0.0; };
  p.exact = [](double, double) { return 0.0; };
  return p;
}

std::string to_string(SolverKind kind) {
  return kind == SolverKind::plu ? "plu" : "pgmres-t";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "pgmres-t") return SolverKind::pgmres_t;
  if (name == "plu") return SolverKind::plu;
  throw InvalidArgument("unknown solver '" + name + "' (expected pgmres-t or plu)");
}

ToeplitzOperator assemble_galpha(FractionalOrder alpha, std::size_t m) {
  if (m < 1) throw InvalidArgument("assemble_galpha: M must be >= 1");
  const auto kernel = wsgd_weights(alpha, m);
  std::vector<double> col(kernel.w.begin() + 1, kernel.w.end());
  std::vector<double> row(m, 0.0);
  row[0] = kernel.w[1];
  if (m > 1) row[1] = kernel.w[0];
  return ToeplitzOperator(std::move(col), std::move(row));
}

// ------------------------------------------------------------ operators

SystemOperator1D::SystemOperator1D(ToeplitzOperator kernel, std::vector<double> diag_d, double eta)
    : kernel_(std::move(kernel)), diag_d_(std::move(diag_d)), eta_(eta) {
  if (diag_d_.size() != kernel_.size()) {
    throw DimensionMismatch("SystemOperator1D diagonal", kernel_.size(), diag_d_.size());
  }
}

Vector SystemOperator1D::scaled_kernel(const Vector& u) const {
  Vector gu = kernel_.apply(u);
  for (Eigen::Index i = 0; i < gu.size(); ++i) gu[i] *= eta_ * diag_d_[static_cast<std::size_t>(i)];
  return gu;
}

Vector SystemOperator1D::apply_lhs(const Vector& u) const { return u - scaled_kernel(u); }
Vector SystemOperator1D::apply_rhs(const Vector& u) const { return u + scaled_kernel(u); }

LinearMap StepMatrices1D::lhs() const {
  return [this](const Vector& u) { return system.apply_lhs(u); };
}
LinearMap StepMatrices1D::rhs() const {
  return [this](const Vector& u) { return system.apply_rhs(u); };
}
LinearMap StepMatrices1D::precond() const {
  return [this](const Vector& u) { return preconditioner.apply(u); };
}

std::vector<double> sample_diffusion(const Problem1D& problem, const Grid1D& grid) {
  std::vector<double> d(grid.m);
  for (std::size_t i = 0; i < grid.m; ++i) {
    d[i] = problem.d(grid.node(i + 1));
    if (!(d[i] > 0.0)) throw NonPositiveDiffusion(i + 1, d[i]);
  }
  return d;
}

StepMatrices1D step_matrices(const Problem1D& problem, const Grid1D& grid, const TimeGrid& tgrid,
                             FractionalOrder alpha, double gs_tol) {
  auto d = sample_diffusion(problem, grid);
  const double d_mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  const double eta = tgrid.tau() / (2.0 * std::pow(grid.h(), alpha.value()));
  auto galpha = assemble_galpha(alpha, grid.m);
  auto p = galpha.affine(1.0, -eta * d_mean);
  auto inverse = gs_build(p, gs_tol);
  return StepMatrices1D{SystemOperator1D(std::move(galpha), std::move(d), eta), d_mean, std::move(p),
                        std::move(inverse)};
}

// ------------------------------------------------------------- stepping

double SolveReport::mean_iterations() const {
  if (iterations.empty()) return 0.0;
  const double total = std::accumulate(iterations.begin(), iterations.end(), 0.0);
  return total / static_cast<double>(iterations.size());
}

AdvanceResult advance(const Problem1D& problem, const Grid1D& grid, const TimeGrid& tgrid,
                      FractionalOrder alpha, const SolveOptions& opts) {
  const auto t_start = Clock::now();
  const auto m = static_cast<Eigen::Index>(grid.m);
  const auto nodes = grid.interior_nodes();
  const double h = grid.h();
  const double tau = tgrid.tau();

  AdvanceResult out;
  SolveReport& report = out.report;

  auto step = step_matrices(problem, grid, tgrid, alpha);
  std::optional<DenseLu> lu;
  Matrix dense_rhs;
  if (opts.solver == SolverKind::plu) {
    const Matrix g = step.system.kernel().dense();
    const Vector dvec = Eigen::Map<const Vector>(step.system.diag_d().data(), m);
    const Matrix dg = step.system.eta() * (dvec.asDiagonal() * g);
    lu.emplace(Matrix::Identity(m, m) - dg);
    dense_rhs = Matrix::Identity(m, m) + dg;
  }
  report.times.setup_s = seconds_since(t_start);

  auto sample = [&](const auto& fn, double t) {
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = fn(nodes[static_cast<std::size_t>(i)], t);
    return v;
  };

  Vector u(m);
  for (Eigen::Index i = 0; i < m; ++i) u[i] = problem.phi(nodes[static_cast<std::size_t>(i)]);

  const bool have_exact = problem.exact.has_value();
  double max_err = 0.0;
  auto track_error = [&](const Vector& un, double t) {
    if (!have_exact) return;
    const Vector e = sample(*problem.exact, t) - un;
    max_err = std::max(max_err, std::sqrt(h * e.squaredNorm()));
  };
  track_error(u, 0.0);

  Vector weights(m);
  for (Eigen::Index i = 0; i < m; ++i) weights[i] = h / step.system.diag_d()[static_cast<std::size_t>(i)];
  detail::EnergyMonitor energy(weights, tgrid.horizon, opts.stability_slack);
  const bool check = opts.check_stability && tau <= 1.0;
  energy.start(u);

  if (opts.store_history) out.history.push_back(u);
  report.iterations.reserve(tgrid.steps);

  const auto solve_start = Clock::now();
  const auto lhs = step.lhs();
  const auto precond = step.precond();
  for (std::size_t n = 1; n <= tgrid.steps; ++n) {
    const Vector f_half = sample(problem.f, tgrid.half_step(n));
    Vector next;
    if (lu) {
      next = lu->solve(dense_rhs * u + tau * f_half);
      report.iterations.push_back(0);
    } else {
      const Vector b = step.system.apply_rhs(u) + tau * f_half;
      const Vector x0 = opts.warm_start ? u : Vector::Zero(m);
      auto res = gmres(lhs, precond, b, x0, opts.gmres);
      if (!res.converged) throw GmresDivergence(n, res.true_rel_residual);
      report.iterations.push_back(res.iterations);
      report.residual_histories.push_back(std::move(res.residual_history));
      next = std::move(res.solution);
    }
    u = std::move(next);
    if (check) energy.step(u, f_half);
    track_error(u, tgrid.time(n));
    if (opts.store_history) out.history.push_back(u);
  }
  report.times.solve_s = seconds_since(solve_start);
  report.times.total_s = seconds_since(t_start);

  if (have_exact) report.error = max_err;
  report.stability_checked = check;
  report.stability_violations = energy.violations();
  report.worst_stability_ratio = energy.worst_ratio();
  out.final_state = std::move(u);
  return out;
}

// ------------------------------------------------------- errors and rates

std::vector<std::optional<double>> convergence_rates(const std::vector<double>& errors) {
  std::vector<std::optional<double>> rates(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] > 0.0 && errors[i - 1] > 0.0) rates[i] = std::log2(errors[i - 1] / errors[i]);
  }
  return rates;
}

std::vector<ErrorRateRow> error_and_rates(const std::vector<double>& h, const std::vector<double>& tau,
                                          const std::vector<SolveReport>& reports) {
  if (h.size() != reports.size() || tau.size() != reports.size()) {
    throw DimensionMismatch("error_and_rates", reports.size(), std::min(h.size(), tau.size()));
  }
  auto halves = [](double coarse, double fine) { return std::abs(coarse - 2.0 * fine) <= 1e-12 * coarse; };
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); };

  std::vector<ErrorRateRow> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].error) throw MissingExactSolution();
    ErrorRateRow row{h[i], tau[i], *reports[i].error, std::nullopt};
    if (i > 0) {
      const bool refine_h = halves(h[i - 1], h[i]) && same(tau[i - 1], tau[i]);
      const bool refine_t = halves(tau[i - 1], tau[i]) && same(h[i - 1], h[i]);
      if ((refine_h || refine_t) && row.error > 0.0 && rows.back().error > 0.0) {
        row.rate = std::log2(rows.back().error / row.error);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace osfde
