#include "osfde/scheme2d.hpp"

#include "energy_monitor.hpp"
#include "osfde/dense.hpp"
#include "osfde/error.hpp"
#include "osfde/krylov.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

namespace osfde {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double binomial(int n, int k) {
  return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
}

// Riemann-Liouville derivative of order a of s^4 (2-s)^4 on [0, 2], expanded
// in powers s^{k-a}, k = 4..8.
class QuarticBumpDerivative {
 public:
  explicit QuarticBumpDerivative(double a) : a_(a) {
    for (int k = 4; k <= 8; ++k) {
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      coef_[k - 4] = binomial(4, k - 4) * std::pow(2.0, 8 - k) * std::tgamma(k + 1.0) /
                     (sign * std::tgamma(k + 1.0 - a));
    }
  }

  double operator()(double s) const {
    const double base = std::pow(s, 4.0 - a_);
    double sum = 0.0;
    double power = 1.0;
    for (double c : coef_) {
      sum += c * power;
      power *= s;
    }
    return base * sum;
  }

 private:
  double a_;
  std::array<double, 5> coef_{};
};

double quartic_bump(double s) { return std::pow(s * (2.0 - s), 4); }

// (shift I - eta * mean * G)^{-1} for one Toeplitz factor.
GsInverse block_inverse(const ToeplitzOperator& g, double shift, double eta, double mean, double gs_tol) {
  return gs_build(g.affine(shift, -eta * mean), gs_tol);
}

// Applies op to every contiguous block of length m, two blocks per call.
template <typename Op>
Vector apply_blockwise(const Op& op, Eigen::Index m, const Vector& u) {
  Vector out(u.size());
  Eigen::Index start = 0;
  for (; start + 2 * m <= u.size(); start += 2 * m) {
    auto [a, b] = op.apply_pair(u.segment(start, m), u.segment(start + m, m));
    out.segment(start, m) = a;
    out.segment(start + m, m) = b;
  }
  if (start < u.size()) out.segment(start, m) = op.apply(u.segment(start, m));
  return out;
}

Vector apply_gs_blocks(const GsInverse& inv, const Vector& u) {
  return apply_blockwise(inv, static_cast<Eigen::Index>(inv.size()), u);
}

}  // namespace

Grid2D::Grid2D(double xl, double xr, double yl, double yr, std::size_t nx, std::size_t ny)
    : x_left(xl), x_right(xr), y_left(yl), y_right(yr), m1(nx), m2(ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("Grid2D: need at least one interior node per direction");
  if (!(xr > xl) || !(yr > yl)) throw InvalidArgument("Grid2D: empty domain");
}

Problem2D example2(FractionalOrder alpha, FractionalOrder beta) {
  Problem2D p;
  p.name = "example2";
  p.x_left = 0.0;
  p.x_right = 2.0;
  p.y_left = 0.0;
  p.y_right = 2.0;
  p.horizon = 1.0;
  p.alpha = alpha;
  p.beta = beta;
  p.d = [](double x, double y) { return x * x + y * y + 20.0; };
  p.e = [](double x, double y) {
    return std::sin(std::numbers::pi * (x + 4.0) / 24.0) + std::sin(std::numbers::pi * (y + 4.0) / 24.0);
  };
  p.phi = [](double, double) { return 0.0; };
  p.exact = [](double x, double y, double t) { return quartic_bump(x) * quartic_bump(y) * t * t * t; };
  p.f = [dx = QuarticBumpDerivative(alpha.value()), dy = QuarticBumpDerivative(beta.value()), d = p.d,
         e = p.e](double x, double y, double t) {
    const double t3 = t * t * t;
    return 3.0 * quartic_bump(x) * quartic_bump(y) * t * t - t3 * quartic_bump(y) * d(x, y) * dx(x) -
           t3 * quartic_bump(x) * e(x, y) * dy(y);
  };
  return p;
}

Problem2D zero_problem_2d(FractionalOrder alpha, FractionalOrder beta) {
  Problem2D p;
  p.name = "zero2d";
  p.alpha = alpha;
  p.beta = beta;
  p.d = [](double, double) { return 1.0; };
  p.e = [](double, double) { return 1.0; };
  p.f = [](double, double, double) { return 0.0; };
  p.phi = [](double, double) { return 0.0; };
  p.exact = [](double, double, double) { return 0.0; };
  return p;
}

// ------------------------------------------------------- structured pieces

Vector xy_permute(const Vector& u, std::size_t m1, std::size_t m2) {
  if (static_cast<std::size_t>(u.size()) != m1 * m2) throw DimensionMismatch("xy_permute", m1 * m2, u.size());
  Vector out(u.size());
  for (std::size_t j = 0; j < m2; ++j) {
    for (std::size_t i = 0; i < m1; ++i) out[static_cast<Eigen::Index>(j + i * m2)] = u[static_cast<Eigen::Index>(i + j * m1)];
  }
  return out;
}

Vector xy_unpermute(const Vector& u, std::size_t m1, std::size_t m2) {
  if (static_cast<std::size_t>(u.size()) != m1 * m2) throw DimensionMismatch("xy_unpermute", m1 * m2, u.size());
  Vector out(u.size());
  for (std::size_t j = 0; j < m2; ++j) {
    for (std::size_t i = 0; i < m1; ++i) out[static_cast<Eigen::Index>(i + j * m1)] = u[static_cast<Eigen::Index>(j + i * m2)];
  }
  return out;
}

Vector apply_block_diagonal(const ToeplitzOperator& t, const Vector& u) {
  const auto m = static_cast<Eigen::Index>(t.size());
  if (u.size() % m != 0) throw DimensionMismatch("block-diagonal apply", t.size(), u.size());
  return apply_blockwise(t, m, u);
}

Vector apply_kron_left(const ToeplitzOperator& t, const Vector& u, std::size_t m1) {
  const std::size_t m2 = t.size();
  if (static_cast<std::size_t>(u.size()) != m1 * m2) throw DimensionMismatch("kron apply", m1 * m2, u.size());
  return xy_unpermute(apply_block_diagonal(t, xy_permute(u, m1, m2)), m1, m2);
}

// --------------------------------------------------------- system operator

SystemOperator2D::SystemOperator2D(ToeplitzOperator g_alpha, ToeplitzOperator g_beta, Vector diag_d,
                                   Vector diag_e, double eta_x, double eta_y)
    : g_alpha_(std::move(g_alpha)),
      g_beta_(std::move(g_beta)),
      diag_d_(std::move(diag_d)),
      diag_e_(std::move(diag_e)),
      eta_x_(eta_x),
      eta_y_(eta_y) {
  const std::size_t n = size();
  if (static_cast<std::size_t>(diag_d_.size()) != n) throw DimensionMismatch("SystemOperator2D D", n, diag_d_.size());
  if (static_cast<std::size_t>(diag_e_.size()) != n) throw DimensionMismatch("SystemOperator2D E", n, diag_e_.size());
}

Vector SystemOperator2D::coupling(const Vector& u) const {
  if (static_cast<std::size_t>(u.size()) != size()) throw DimensionMismatch("apply_system_2d", size(), u.size());
  const Vector gx = apply_block_diagonal(g_alpha_, u);
  const Vector gy = apply_kron_left(g_beta_, u, m1());
  return -(eta_x_ * diag_d_.cwiseProduct(gx) + eta_y_ * diag_e_.cwiseProduct(gy));
}

Vector SystemOperator2D::apply_lhs(const Vector& u) const { return u + coupling(u); }
Vector SystemOperator2D::apply_rhs(const Vector& u) const { return u - coupling(u); }

Matrix SystemOperator2D::dense(double sign) const {
  const auto n1 = static_cast<Eigen::Index>(m1());
  const auto n2 = static_cast<Eigen::Index>(m2());
  const Matrix ga = g_alpha_.dense();
  const Matrix gb = g_beta_.dense();
  Matrix a = Matrix::Identity(n1 * n2, n1 * n2);
  for (Eigen::Index j = 0; j < n2; ++j) {
    for (Eigen::Index i = 0; i < n1; ++i) {
      const Eigen::Index row = i + j * n1;
      const double cx = -sign * eta_x_ * diag_d_[row];
      const double cy = -sign * eta_y_ * diag_e_[row];
      for (Eigen::Index k = 0; k < n1; ++k) a(row, k + j * n1) += cx * ga(i, k);
      for (Eigen::Index k = 0; k < n2; ++k) a(row, i + k * n1) += cy * gb(j, k);
    }
  }
  return a;
}

std::pair<Vector, Vector> sample_coefficients(const Problem2D& problem, const Grid2D& grid) {
  Vector d(static_cast<Eigen::Index>(grid.size()));
  Vector e(d.size());
  for (std::size_t j = 1; j <= grid.m2; ++j) {
    for (std::size_t i = 1; i <= grid.m1; ++i) {
      const auto k = grid.index(i, j);
      const auto row = static_cast<Eigen::Index>(k);
      d[row] = problem.d(grid.x(i), grid.y(j));
      e[row] = problem.e(grid.x(i), grid.y(j));
      if (!(d[row] >= 0.0)) throw NonPositiveDiffusion(k + 1, d[row]);
      if (!(e[row] >= 0.0)) throw NonPositiveDiffusion(k + 1, e[row]);
    }
  }
  return {std::move(d), std::move(e)};
}

SystemOperator2D assemble_system_2d(const Problem2D& problem, const Grid2D& grid, double tau) {
  auto [d, e] = sample_coefficients(problem, grid);
  const double eta_x = tau / (2.0 * std::pow(grid.h1(), problem.alpha.value()));
  const double eta_y = tau / (2.0 * std::pow(grid.h2(), problem.beta.value()));
  return SystemOperator2D(assemble_galpha(problem.alpha, grid.m1), assemble_galpha(problem.beta, grid.m2),
                          std::move(d), std::move(e), eta_x, eta_y);
}

// -------------------------------------------------------------- multigrid

Vector prolong_1d(const Vector& coarse) {
  const Eigen::Index mc = coarse.size();
  Vector fine = Vector::Zero(2 * mc + 1);
  for (Eigen::Index k = 0; k < mc; ++k) {
    fine[2 * k + 1] = coarse[k];
    fine[2 * k] += 0.5 * coarse[k];
    fine[2 * k + 2] += 0.5 * coarse[k];
  }
  return fine;
}

Vector prolong_2d(const Vector& coarse, std::size_t m1_coarse, std::size_t m2_coarse) {
  if (static_cast<std::size_t>(coarse.size()) != m1_coarse * m2_coarse) {
    throw DimensionMismatch("prolong_2d", m1_coarse * m2_coarse, coarse.size());
  }
  const auto c1 = static_cast<Eigen::Index>(m1_coarse);
  const auto c2 = static_cast<Eigen::Index>(m2_coarse);
  const Eigen::Index f1 = 2 * c1 + 1;
  const Eigen::Index f2 = 2 * c2 + 1;
  // Interpolate along x within each coarse row, then along y.
  Matrix rows(f1, c2);
  for (Eigen::Index j = 0; j < c2; ++j) rows.col(j) = prolong_1d(coarse.segment(j * c1, c1));
  Matrix fine(f1, f2);
  for (Eigen::Index i = 0; i < f1; ++i) fine.row(i) = prolong_1d(rows.row(i).transpose()).transpose();
  return Eigen::Map<const Vector>(fine.data(), f1 * f2);
}

Vector restrict_2d(const Vector& fine, std::size_t m1_fine, std::size_t m2_fine) {
  if (static_cast<std::size_t>(fine.size()) != m1_fine * m2_fine) {
    throw DimensionMismatch("restrict_2d", m1_fine * m2_fine, fine.size());
  }
  if (m1_fine % 2 == 0 || m2_fine % 2 == 0 || m1_fine < 3 || m2_fine < 3) {
    throw InvalidArgument("restrict_2d: fine sizes must be odd and >= 3");
  }
  const auto f1 = static_cast<Eigen::Index>(m1_fine);
  const auto f2 = static_cast<Eigen::Index>(m2_fine);
  const Eigen::Index c1 = (f1 - 1) / 2;
  const Eigen::Index c2 = (f2 - 1) / 2;
  const Eigen::Map<const Matrix> grid(fine.data(), f1, f2);
  // Full weighting [1 2 1]/4 per direction is the transpose of linear interpolation / 2.
  Matrix half(c1, f2);
  for (Eigen::Index k = 0; k < c1; ++k) {
    half.row(k) = 0.5 * grid.row(2 * k) + grid.row(2 * k + 1) + 0.5 * grid.row(2 * k + 2);
  }
  Matrix coarse(c1, c2);
  for (Eigen::Index k = 0; k < c2; ++k) {
    coarse.col(k) = 0.5 * half.col(2 * k) + half.col(2 * k + 1) + 0.5 * half.col(2 * k + 2);
  }
  coarse *= 0.25;
  return Eigen::Map<const Vector>(coarse.data(), c1 * c2);
}

Precond2D::Precond2D(FractionalOrder alpha, FractionalOrder beta, double d_mean, double e_mean,
                     std::size_t m1, std::size_t m2, double h1, double h2, double tau,
                     MultigridOptions opts)
    : d_mean_(d_mean), e_mean_(e_mean), opts_(opts) {
  if (m1 < 1 || m2 < 1) throw InvalidArgument("Precond2D: empty grid");
  if (opts_.max_levels < 1) throw InvalidArgument("Precond2D: max_levels must be >= 1");
  while (true) {
    const double eta_x = tau / (2.0 * std::pow(h1, alpha.value()));
    const double eta_y = tau / (2.0 * std::pow(h2, beta.value()));
    auto ga = assemble_galpha(alpha, m1);
    auto gb = assemble_galpha(beta, m2);
    double shift_x = 1.0;
    double shift_y = 1.0;
    if (opts_.smoother == SmootherBlocks::block_diagonal) {
      shift_x -= e_mean_ * eta_y * gb.first_col()[0];
      shift_y -= d_mean_ * eta_x * ga.first_col()[0];
    }
    auto tx = block_inverse(ga, shift_x, eta_x, d_mean_, opts_.gs_tol);
    auto ty = block_inverse(gb, shift_y, eta_y, e_mean_, opts_.gs_tol);
    levels_.push_back(Level{m1, m2, eta_x, eta_y, std::move(ga), std::move(gb), std::move(tx), std::move(ty)});

    const bool can_coarsen = m1 % 2 == 1 && m2 % 2 == 1 && m1 >= 3 && m2 >= 3;
    if (m1 * m2 <= opts_.coarse_size || !can_coarsen || levels_.size() >= opts_.max_levels) break;
    m1 = (m1 - 1) / 2;
    m2 = (m2 - 1) / 2;
    h1 *= 2.0;
    h2 *= 2.0;
  }
}

std::size_t Precond2D::size() const noexcept { return levels_.front().m1 * levels_.front().m2; }

Vector Precond2D::apply_p(std::size_t level, const Vector& x) const {
  const Level& lv = levels_[level];
  const Vector gx = apply_block_diagonal(lv.g_alpha, x);
  const Vector gy = apply_kron_left(lv.g_beta, x, lv.m1);
  return x - (d_mean_ * lv.eta_x) * gx - (e_mean_ * lv.eta_y) * gy;
}

Vector Precond2D::solve_tx(std::size_t level, const Vector& r) const {
  return apply_gs_blocks(levels_[level].tx_block, r);
}

Vector Precond2D::solve_ty(std::size_t level, const Vector& r) const {
  const Level& lv = levels_[level];
  return xy_unpermute(apply_gs_blocks(lv.ty_block, xy_permute(r, lv.m1, lv.m2)), lv.m1, lv.m2);
}

Vector Precond2D::coarse_solve(std::size_t level, const Vector& z) const {
  GmresOptions go;
  go.rel_tol = opts_.coarse_tol;
  go.max_iter = std::max<std::size_t>(z.size(), 1);
  auto res = gmres([this, level](const Vector& v) { return apply_p(level, v); }, identity_map(), z,
                   Vector::Zero(z.size()), go);
  return res.solution;
}

Vector Precond2D::cycle(std::size_t level, const Vector& z) const {
  const Level& lv = levels_[level];
  const bool coarsest = level + 1 == levels_.size();
  if (coarsest && lv.m1 * lv.m2 <= opts_.coarse_size) return coarse_solve(level, z);

  Vector x = Vector::Zero(z.size());
  for (std::size_t s = 0; s < opts_.pre_smooth; ++s) x += solve_tx(level, z - apply_p(level, x));
  if (!coarsest) {
    const Level& next = levels_[level + 1];
    const Vector rc = restrict_2d(z - apply_p(level, x), lv.m1, lv.m2);
    x += prolong_2d(cycle(level + 1, rc), next.m1, next.m2);
  }
  for (std::size_t s = 0; s < opts_.post_smooth; ++s) x += solve_ty(level, z - apply_p(level, x));
  return x;
}

Vector Precond2D::vcycle(const Vector& z) const {
  if (static_cast<std::size_t>(z.size()) != size()) throw DimensionMismatch("vcycle", size(), z.size());
  return cycle(0, z);
}

// ---------------------------------------------------------------- stepping

AdvanceResult advance_2d(const Problem2D& problem, const Grid2D& grid, const TimeGrid& tgrid,
                         const SolveOptions2D& opts) {
  const auto t_start = Clock::now();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double tau = tgrid.tau();
  const double cell = grid.h1() * grid.h2();

  AdvanceResult out;
  SolveReport& report = out.report;

  const auto system = assemble_system_2d(problem, grid, tau);
  std::optional<DenseLu> lu;
  std::optional<Precond2D> precond;
  if (opts.solver == SolverKind::plu) {
    lu.emplace(system.dense(1.0));
  } else {
    precond.emplace(problem.alpha, problem.beta, system.diag_d().mean(), system.diag_e().mean(), grid.m1,
                    grid.m2, grid.h1(), grid.h2(), tau, opts.multigrid);
  }
  report.times.setup_s = seconds_since(t_start);

  auto sample = [&](const auto& fn, auto... t) {
    Vector v(n);
    for (std::size_t j = 1; j <= grid.m2; ++j) {
      for (std::size_t i = 1; i <= grid.m1; ++i) {
        v[static_cast<Eigen::Index>(grid.index(i, j))] = fn(grid.x(i), grid.y(j), t...);
      }
    }
    return v;
  };

  Vector u = sample(problem.phi);

  const bool have_exact = problem.exact.has_value();
  double max_err = 0.0;
  auto track_error = [&](const Vector& un, double t) {
    if (!have_exact) return;
    const Vector e = sample(*problem.exact, t) - un;
    max_err = std::max(max_err, std::sqrt(cell * e.squaredNorm()));
  };
  track_error(u, 0.0);

  const bool check = opts.check_stability && opts.energy_q.has_value() && tau <= 1.0;
  Vector weights = Vector::Constant(n, cell);
  if (opts.energy_q) {
    if (opts.energy_q->size() != n) throw DimensionMismatch("energy Q diagonal", grid.size(), opts.energy_q->size());
    weights = cell * *opts.energy_q;
  }
  detail::EnergyMonitor energy(weights, tgrid.horizon, opts.stability_slack);
  energy.start(u);

  if (opts.store_history) out.history.push_back(u);
  report.iterations.reserve(tgrid.steps);

  const auto solve_start = Clock::now();
  const LinearMap lhs = [&system](const Vector& v) { return system.apply_lhs(v); };
  const LinearMap minv = [&precond](const Vector& v) { return precond->vcycle(v); };
  for (std::size_t step = 1; step <= tgrid.steps; ++step) {
    const Vector f_half = sample(problem.f, tgrid.half_step(step));
    const Vector b = system.apply_rhs(u) + tau * f_half;
    if (lu) {
      u = lu->solve(b);
      report.iterations.push_back(0);
    } else {
      const Vector x0 = opts.warm_start ? u : Vector::Zero(n);
      auto res = gmres(lhs, minv, b, x0, opts.gmres);
      if (!res.converged) throw GmresDivergence(step, res.true_rel_residual);
      report.iterations.push_back(res.iterations);
      report.residual_histories.push_back(std::move(res.residual_history));
      u = std::move(res.solution);
    }
    if (check) energy.step(u, f_half);
    track_error(u, tgrid.time(step));
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

}  // namespace osfde
