#include "osfde/analysis.hpp"
#include "osfde/kernel_wsgd.hpp"
#include "osfde/scheme1d.hpp"
#include "osfde/scheme2d.hpp"
#include "osfde/toeplitz.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace osfde;

namespace {

// Tolerances pinned for every criterion.
constexpr double kReferenceRelTol = 0.03;
constexpr double kRate1DLow = 1.95;
constexpr double kRate1DHigh = 2.25;
constexpr double kRate2DLow = 1.95;
constexpr double kRate2DHigh = 2.15;
constexpr double kSolverAgreementRel = 1e-6;
constexpr double kIter1DMax = 8.0;
constexpr double kIter1DGrowth = 3.0;
constexpr double kIter2DMax = 12.0;
constexpr double kNegDefMargin = -1e-12;
constexpr double kRatioTol = 1e-6;
constexpr double kPencilSlack = 1e-10;
constexpr double kSpectrumSlack = 1e-8;
constexpr double kGsTol = 1e-9;
constexpr double kMatvecTol = 1e-12;
constexpr double kOracleTol = 1e-8;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("%s %2d %-26s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void note(const std::string& line) { std::printf("       %s\n", line.c_str()); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::mt19937_64 rng(2024);

Vector random_vector(Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ------------------------------------------------------------- stability

struct StabilityLedger {
  std::size_t solves = 0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t uncertified_2d = 0;
  double worst = 0.0;

  void record(const SolveReport& r, bool has_norm = true) {
    ++solves;
    if (!has_norm) {
      ++uncertified_2d;
      return;
    }
    if (!r.stability_checked) return;
    ++checked;
    violations += r.stability_violations;
    worst = std::max(worst, r.worst_stability_ratio);
  }
} stability;

// ------------------------------------------------------------- example 1

struct Run1D {
  double error;
  double iters;
};

std::map<std::tuple<double, int, int>, Run1D> cache_1d;

Run1D example1_run(double a, int h_exp, SolverKind kind) {
  const auto key = std::make_tuple(a, h_exp, static_cast<int>(kind));
  if (auto it = cache_1d.find(key); it != cache_1d.end()) return it->second;
  const FractionalOrder alpha(a);
  const Grid1D grid(0.0, 1.0, (std::size_t{1} << -h_exp) - 1);
  SolveOptions opts;
  opts.solver = kind;
  const auto res = advance(example1(alpha), grid, TimeGrid(1.0, 1024), alpha, opts);
  stability.record(res.report);
  const Run1D out{*res.report.error, res.report.mean_iterations()};
  cache_1d[key] = out;
  return out;
}

// ------------------------------------------------------------- example 2

struct Run2D {
  double error;
  double iters;
  double seconds;
};

std::map<std::tuple<double, double, int, int>, Run2D> cache_2d;

// Diagonal Q certified for the spatial operator on this grid, if any candidate qualifies.
std::optional<MembershipCertificate> certified_q(const Problem2D& p, const Grid2D& grid) {
  if (grid.size() > kDenseLimit) return std::nullopt;
  const auto [d, e] = sample_coefficients(p, grid);
  const std::vector<std::pair<std::string, Vector>> candidates{
      {"identity", q_identity(grid.size())}, {"d_inverse", q_inverse(d)}, {"e_inverse", q_inverse(e)}};
  for (const auto& [name, q] : candidates) {
    auto cert = certify_Q(p.alpha, p.beta, d, e, grid.m1, grid.m2, grid.h1(), grid.h2(), q, name);
    if (cert.in_set) return cert;
  }
  return std::nullopt;
}

Run2D example2_run(double a, double b, int h_exp, SolverKind kind = SolverKind::pgmres_t) {
  const auto key = std::make_tuple(a, b, h_exp, static_cast<int>(kind));
  if (auto it = cache_2d.find(key); it != cache_2d.end()) return it->second;
  const auto p = example2(FractionalOrder(a), FractionalOrder(b));
  const std::size_t m = (std::size_t{2} << -h_exp) - 1;
  const Grid2D grid(0.0, 2.0, 0.0, 2.0, m, m);
  SolveOptions2D opts;
  opts.solver = kind;
  const auto cert = certified_q(p, grid);
  if (cert) opts.energy_q = cert->q;
  const auto res = advance_2d(p, grid, TimeGrid(1.0, 128), opts);
  stability.record(res.report, cert.has_value());
  const Run2D out{*res.report.error, res.report.mean_iterations(), res.report.times.total_s};
  cache_2d[key] = out;
  return out;
}

const std::vector<std::pair<double, double>> kExampleTwoPairs{{1.01, 1.09}, {1.5, 1.3}, {1.5, 1.6}, {1.5, 1.9},
                                                          {1.2, 1.2},   {1.5, 1.5}, {1.8, 1.8}};

// ------------------------------------------------------------- criteria

Outcome error_table_1d() {
  Outcome o;
  struct Ref {
    double alpha;
    double e8;
    double e9;
  };
  const Ref refs[] = {{1.2, 3.49e-5, 8.60e-6}, {1.5, 3.18e-5, 7.81e-6}, {1.8, 2.50e-5, 6.12e-6}};
  double worst_table = 0.0;
  double worst_agree = 0.0;
  for (const auto& r : refs) {
    const auto p8 = example1_run(r.alpha, -8, SolverKind::plu);
    const auto p9 = example1_run(r.alpha, -9, SolverKind::plu);
    const auto g8 = example1_run(r.alpha, -8, SolverKind::pgmres_t);
    const auto g9 = example1_run(r.alpha, -9, SolverKind::pgmres_t);
    const double rate = std::log2(p8.error / p9.error);
    worst_table = std::max({worst_table, rel(p8.error, r.e8), rel(p9.error, r.e9)});
    const double agree = std::max(rel(g8.error, p8.error), rel(g9.error, p9.error));
    worst_agree = std::max(worst_agree, agree);
    note(fmt("alpha=%.1f", r.alpha) + fmt(" PLU E=%.4e", p8.error) + fmt(", %.4e", p9.error) +
         fmt(" rate %.3f", rate) + fmt(" | PGMRES-T E=%.4e", g8.error) + fmt(", %.4e", g9.error) +
         fmt(" | rel diff %.2e", agree));
    o.require(rel(p8.error, r.e8) <= kReferenceRelTol && rel(p9.error, r.e9) <= kReferenceRelTol,
              fmt("alpha=%.1f error off reference", r.alpha));
    o.require(rate >= kRate1DLow && rate <= kRate1DHigh, fmt("alpha=%.1f rate out of range", r.alpha));
  }
  o.require(worst_agree <= kSolverAgreementRel,
            fmt("PGMRES-T vs PLU errors differ by %.2e relative (limit 1e-6)", worst_agree));
  if (o.pass) o.detail = fmt("max rel dev %.3f", worst_table) + fmt(", solver agreement %.1e", worst_agree);
  return o;
}

Outcome error_table_2d() {
  Outcome o;
  struct Ref {
    double a, b, e4, e5;
  };
  const Ref refs[] = {{1.5, 1.5, 3.00e-3, 7.40e-4}, {1.8, 1.8, 2.30e-3, 5.71e-4}};
  double worst = 0.0;
  for (const auto& r : refs) {
    const auto c = example2_run(r.a, r.b, -4);
    const auto f = example2_run(r.a, r.b, -5);
    const double rate = std::log2(c.error / f.error);
    worst = std::max({worst, rel(c.error, r.e4), rel(f.error, r.e5)});
    note(fmt("(%.1f,", r.a) + fmt("%.1f)", r.b) + fmt(" E=%.4e", c.error) + fmt(", %.4e", f.error) +
         fmt(" rate %.3f", rate));
    o.require(rel(c.error, r.e4) <= kReferenceRelTol && rel(f.error, r.e5) <= kReferenceRelTol,
              fmt("(%.1f) error off reference", r.a));
    o.require(rate >= kRate2DLow && rate <= kRate2DHigh, fmt("(%.1f) rate out of range", r.a));
  }
  if (o.pass) o.detail = fmt("max rel dev %.3f", worst);
  return o;
}

Outcome preconditioner_iterations() {
  Outcome o;
  double worst_1d = 0.0;
  double worst_growth = 0.0;
  for (double a : {1.2, 1.5, 1.8}) {
    std::vector<double> its;
    for (int h = -6; h >= -10; --h) its.push_back(example1_run(a, h, SolverKind::pgmres_t).iters);
    const auto [lo, hi] = std::minmax_element(its.begin(), its.end());
    worst_1d = std::max(worst_1d, *hi);
    worst_growth = std::max(worst_growth, *hi - *lo);
    std::string line = fmt("1D alpha=%.1f iters", a);
    for (double v : its) line += fmt(" %.2f", v);
    note(line);
  }
  o.require(worst_1d <= kIter1DMax, fmt("1D mean iterations reach %.2f", worst_1d));
  o.require(worst_growth <= kIter1DGrowth, fmt("1D growth %.2f", worst_growth));

  double worst_2d = 0.0;
  for (const auto& [a, b] : kExampleTwoPairs) {
    std::string line = fmt("2D (%.2f,", a) + fmt("%.2f) iters", b);
    for (int h = -4; h >= -6; --h) {
      const double it = example2_run(a, b, h).iters;
      worst_2d = std::max(worst_2d, it);
      line += fmt(" %.2f", it);
    }
    note(line);
  }
  o.require(worst_2d <= kIter2DMax, fmt("2D mean iterations reach %.2f", worst_2d));
  if (o.pass)
    o.detail = fmt("1D max %.2f", worst_1d) + fmt(" growth %.2f", worst_growth) + fmt(", 2D max %.2f", worst_2d);
  return o;
}

Outcome negative_definite() {
  Outcome o;
  double worst = -1e300;
  for (int k = 1; k <= 19; ++k) {
    const FractionalOrder a(1.0 + 0.05 * k);
    for (std::size_t m = 2; m <= 512; m *= 2) {
      const double lmax = check_negative_definite(a, m);
      worst = std::max(worst, lmax);
      o.require(lmax < kNegDefMargin, fmt("alpha=%.2f", a.value()) + " M=" + std::to_string(m));
    }
  }
  o.detail = fmt("largest lambda_max %.3e", worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome symbol_ratio() {
  Outcome o;
  double worst = 0.0;
  for (int k = 1; k <= 9; ++k) {
    const FractionalOrder a(1.0 + 0.1 * k);
    const double err = std::abs(symbol_ratio_min(a, 100000) - std::abs(std::cos(a.value() * std::numbers::pi / 2)));
    worst = std::max(worst, err);
    o.require(err <= kRatioTol, fmt("alpha=%.1f", a.value()));
  }
  o.detail = fmt("max deviation %.2e", worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

std::vector<double> sample_unit(std::size_t m, const std::function<double(double)>& fn) {
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = fn(static_cast<double>(i + 1) / static_cast<double>(m + 1));
  return out;
}

Outcome field_of_values() {
  Outcome o;
  const auto concave = sample_unit(128, [](double x) { return std::cos(std::numbers::pi * x / 2) + 0.1; });
  const auto convex = sample_unit(128, [](double x) { return x * x + 0.5; });
  double margin = 1e300;
  for (double a : {1.2, 1.5, 1.8}) {
    for (const auto& [d, shape] : {std::pair{concave, Shape::concave}, std::pair{convex, Shape::convex}}) {
      const auto rec = field_of_values_bounds(d, FractionalOrder(a), shape);
      margin = std::min({margin, rec.pencil_min - rec.lower, rec.upper - rec.pencil_max});
      o.require(rec.pencil_within(kPencilSlack) && rec.worst_random_violation <= kPencilSlack,
                fmt("alpha=%.1f ", a) + to_string(shape));
    }
  }
  o.detail = fmt("min distance to bound %.3e", margin) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome condition_bounds_1d() {
  Outcome o;
  const auto d = sample_unit(64, [](double x) { return 1.0 + 0.05 * std::sin(std::numbers::pi * x); });
  const auto r = theoretical_bounds(d, FractionalOrder(1.5));
  o.require(r.flags.all(), "assumptions fail: " + r.flags.failures());
  for (double eta : {1.0 / 16, 1.0, 16.0}) {
    const Vector s = precond_spectrum(FractionalOrder(1.5), d, eta);
    const double lo = s.minCoeff() * s.minCoeff();
    const double hi = s.maxCoeff() * s.maxCoeff();
    note(fmt("eta=%g", eta) + fmt(" sigma^2 in [%.5f,", lo) + fmt(" %.5f]", hi) + fmt(" bound [%.5f,", r.s_check) +
         fmt(" %.5f]", r.s_hat));
    o.require(lo >= r.s_check * (1 - kSpectrumSlack) && hi <= r.s_hat * (1 + kSpectrumSlack), fmt("eta=%g", eta));
  }
  if (o.pass) o.detail = "all spectra inside the bound interval";
  return o;
}

Outcome condition_bounds_2d() {
  Outcome o;
  const std::size_t m = 15;
  Matrix a(m, m);
  Vector d(m * m), e(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const double x = (i + 1.0) / 16.0, y = (j + 1.0) / 16.0;
      a(i, j) = 21.0 + 0.1 * (std::sin(std::numbers::pi * x) + std::sin(std::numbers::pi * y));
      d[i + j * m] = 2.0 * a(i, j);
      e[i + j * m] = a(i, j);
    }
  const FractionalOrder alpha(1.5), beta(1.8);
  const auto r = theoretical_bounds(a, alpha, beta);
  o.require(r.flags.all(), "assumptions fail: " + r.flags.failures());
  for (const auto& [ex, ey] : {std::pair{0.1, 0.1}, std::pair{1.0, 4.0}, std::pair{16.0, 2.0}}) {
    const Vector s = precond_spectrum(alpha, beta, d, e, m, m, ex, ey);
    const double lo = s.minCoeff() * s.minCoeff();
    const double hi = s.maxCoeff() * s.maxCoeff();
    note(fmt("eta=(%g,", ex) + fmt("%g)", ey) + fmt(" sigma^2 in [%.5f,", lo) + fmt(" %.5f]", hi) +
         fmt(" bound [%.5f,", r.s_check) + fmt(" %.5f]", r.s_hat));
    o.require(lo >= r.s_check * (1 - kSpectrumSlack) && hi <= r.s_hat * (1 + kSpectrumSlack), fmt("eta_x=%g", ex));
  }
  if (o.pass) o.detail = "all spectra inside the bound interval";
  return o;
}

Outcome gohberg_semencul() {
  Outcome o;
  double worst = 0.0;
  for (double a : {1.2, 1.5, 1.8})
    for (std::size_t m : {8u, 64u, 512u, 4096u})
      for (double eta : {0.1, 1.0, 10.0}) {
        const auto p = assemble_galpha(FractionalOrder(a), m).affine(1.0, -eta);
        const auto inv = gs_build(p);
        for (int k = 0; k < 20; ++k) {
          const Vector y = random_vector(static_cast<Eigen::Index>(m));
          worst = std::max(worst, (p.apply(gs_apply(inv, y)) - y).norm() / y.norm());
        }
      }
  o.require(worst <= kGsTol, "round trip too large");
  o.detail = fmt("worst round trip %.2e", worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Outcome structured_matvec() {
  Outcome o;
  double worst = 0.0;
  auto check = [&worst](const Matrix& dense, const std::function<Vector(const Vector&)>& fast) {
    for (int k = 0; k < 100; ++k) {
      const Vector x = random_vector(dense.cols());
      const Vector ref = dense * x;
      worst = std::max(worst, (fast(x) - ref).norm() / ref.norm());
    }
  };
  auto column = [](std::size_t m) {
    const Vector v = random_vector(static_cast<Eigen::Index>(m));
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  for (std::size_t m : {1u, 2u, 3u, 5u, 8u, 17u, 64u, 100u, 255u, 256u, 511u, 1000u, 1024u, 2047u, 4096u}) {
    auto col = column(m);
    auto row = column(m);
    row[0] = col[0];
    const ToeplitzOperator t(col, row);
    check(t.dense(), [&t](const Vector& x) { return t.apply(x); });
    const auto g = assemble_galpha(FractionalOrder(1.5), m);
    check(g.dense(), [&g](const Vector& x) { return g.apply(x); });
    const CirculantOperator c(column(m));
    check(c.dense(), [&c](const Vector& x) { return c.apply(x); });
    const SkewCirculantOperator s(column(m));
    check(s.dense(), [&s](const Vector& x) { return s.apply(x); });
  }
  for (const auto& [m1, m2] : {std::pair<std::size_t, std::size_t>{7, 9}, {15, 31}, {64, 64}}) {
    const auto ga = assemble_galpha(FractionalOrder(1.3), m1);
    const auto gb = assemble_galpha(FractionalOrder(1.7), m2);
    const auto i1 = Matrix::Identity(static_cast<Eigen::Index>(m1), static_cast<Eigen::Index>(m1));
    const auto i2 = Matrix::Identity(static_cast<Eigen::Index>(m2), static_cast<Eigen::Index>(m2));
    check(kron(i2, ga.dense()), [&ga](const Vector& x) { return apply_block_diagonal(ga, x); });
    check(kron(gb.dense(), i1), [&gb, m1](const Vector& x) { return apply_kron_left(gb, x, m1); });
  }
  o.require(worst <= kMatvecTol, "mismatch");
  o.detail = fmt("worst relative mismatch %.2e", worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome energy_stability() {
  Outcome o;
  o.require(stability.violations == 0, std::to_string(stability.violations) + " violating steps");
  o.require(stability.checked > 0, "no solve was checked");
  o.detail = std::to_string(stability.checked) + " solves checked, worst ratio " + fmt("%.3f", stability.worst) +
             ", " + std::to_string(stability.uncertified_2d) + " 2D solves above the dense certificate size" +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome dense_march() {
  Outcome o;
  double worst = 0.0;
  for (double a : {1.2, 1.5, 1.8}) {
    const FractionalOrder alpha(a);
    const auto p = example1(alpha);
    const Grid1D grid(0.0, 1.0, 64);
    const TimeGrid tg(1.0, 8);
    const auto d = sample_diffusion(p, grid);
    const double eta = tg.tau() / (2.0 * std::pow(grid.h(), a));
    const Matrix lhs = dense_assemble_1d(alpha, d, eta);
    const Matrix rhs = 2.0 * Matrix::Identity(64, 64) - lhs;
    const auto lu = lhs.partialPivLu();
    Vector u = Vector::Zero(64);
    for (std::size_t n = 1; n <= tg.steps; ++n) {
      Vector f(64);
      for (Eigen::Index i = 0; i < 64; ++i) f[i] = p.f(grid.node(i + 1), tg.half_step(n));
      u = lu.solve(rhs * u + tg.tau() * f);
    }
    SolveOptions opts;
    opts.gmres.rel_tol = 1e-13;
    const auto res = advance(p, grid, tg, alpha, opts);
    stability.record(res.report);
    worst = std::max(worst, (res.final_state - u).cwiseAbs().maxCoeff());
  }
  {
    const auto p = example2(FractionalOrder(1.5), FractionalOrder(1.7));
    const Grid2D grid(0.0, 2.0, 0.0, 2.0, 7, 7);
    const TimeGrid tg(1.0, 4);
    const auto [d, e] = sample_coefficients(p, grid);
    const Matrix lhs = dense_assemble_2d(p.alpha, p.beta, d, e, 7, 7, tg.tau() / (2.0 * std::pow(grid.h1(), 1.5)),
                                         tg.tau() / (2.0 * std::pow(grid.h2(), 1.7)));
    const Matrix rhs = 2.0 * Matrix::Identity(49, 49) - lhs;
    const auto lu = lhs.partialPivLu();
    Vector u = Vector::Zero(49);
    for (std::size_t n = 1; n <= tg.steps; ++n) {
      Vector f(49);
      for (std::size_t j = 1; j <= 7; ++j)
        for (std::size_t i = 1; i <= 7; ++i) f[grid.index(i, j)] = p.f(grid.x(i), grid.y(j), tg.half_step(n));
      u = lu.solve(rhs * u + tg.tau() * f);
    }
    SolveOptions2D opts;
    opts.gmres.rel_tol = 1e-13;
    opts.multigrid.coarse_tol = 1e-14;
    const auto cert = certified_q(p, grid);
    if (cert) opts.energy_q = cert->q;
    const auto res = advance_2d(p, grid, tg, opts);
    stability.record(res.report, cert.has_value());
    worst = std::max(worst, (res.final_state - u).cwiseAbs().maxCoeff());
  }
  o.require(worst <= kOracleTol, "mismatch");
  o.detail = fmt("max-norm difference %.2e", worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome timing_order() {
  Outcome o;
  const auto pg = example2_run(1.8, 1.8, -5, SolverKind::pgmres_t);
  const auto lu = example2_run(1.8, 1.8, -5, SolverKind::plu);
  o.require(pg.seconds < lu.seconds, "PGMRES-T not faster");
  o.detail = fmt("63x63 grid: PGMRES-T %.2f s", pg.seconds) + fmt(", PLU %.2f s", lu.seconds) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

void run(int id, const char* name, Outcome (*fn)()) {
  try {
    report(id, name, fn());
  } catch (const std::exception& e) {
    report(id, name, Outcome{false, std::string("exception: ") + e.what()});
  }
}

}  // namespace

int main() {
  run(1, "1d-error-table", error_table_1d);
  run(2, "2d-error-table", error_table_2d);
  run(3, "preconditioner-iterations", preconditioner_iterations);
  run(4, "negative-definite-kernel", negative_definite);
  run(5, "symbol-ratio", symbol_ratio);
  run(6, "field-of-values", field_of_values);
  run(7, "condition-bounds-1d", condition_bounds_1d);
  run(8, "condition-bounds-2d", condition_bounds_2d);
  run(9, "gohberg-semencul", gohberg_semencul);
  run(10, "structured-matvec", structured_matvec);
  run(12, "dense-march-oracle", dense_march);
  run(13, "timing-order", timing_order);
  // Runs last so it covers every solve above.
  run(11, "energy-stability", energy_stability);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
