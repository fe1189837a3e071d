#include "osfde/analysis.hpp"
#include "osfde/error.hpp"
#include "osfde/harness.hpp"
#include "osfde/kernel_wsgd.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace osfde;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitAssumption = 4;

struct CommonFlags {
  std::string config;
  std::string out;
  std::string format;
  std::string solver;
  std::string residual_ref;
  std::string smoother;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  apply_overrides(cfg, f.overrides);
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.format.empty()) apply_setting(cfg, "format", f.format);
  if (!f.solver.empty()) apply_setting(cfg, "solver", f.solver);
  if (!f.residual_ref.empty()) apply_setting(cfg, "residual_ref", f.residual_ref);
  if (!f.smoother.empty()) apply_setting(cfg, "smoother", f.smoother);
  if (f.threads > 0) cfg.threads = f.threads;
  if (f.seed_set) cfg.seed = f.seed;
  return cfg;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
}

void print_table(const ResultTable& table, const ExperimentConfig& cfg) {
  const std::string text = emit(table, emit_format_from_string(cfg.format), cfg.out);
  if (cfg.out.empty()) std::cout << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int run_weights(double alpha, std::size_t n, const std::string& out) {
  const auto k = wsgd_weights(FractionalOrder(alpha), n);
  std::string text = "k,g,w\n";
  for (std::size_t i = 0; i < k.size(); ++i)
    text += std::to_string(i) + "," + fmt(k.g[i]) + "," + fmt(k.w[i]) + "\n";
  write_text(text, out);
  return 0;
}

int run_single(ExperimentConfig cfg, bool two_d) {
  if (two_d && !cfg.is_2d()) cfg.problem = "example2";
  if (!two_d && cfg.is_2d()) throw ConfigError("solve1d needs a one-dimensional problem");
  cfg.h_exps.resize(1);
  cfg.tau_exps.resize(1);
  cfg.solvers.resize(1);
  cfg.validate();
  ResultTable table;
  table.rows.push_back(run_cell(cfg, cfg.h_exps[0], cfg.tau_exps[0], cfg.solvers[0]).row);
  print_table(table, cfg);
  return 0;
}

int run_spectral(const ExperimentConfig& cfg) {
  cfg.validate();
  const int h_exp = cfg.h_exps.front();
  const int tau_exp = cfg.tau_exps.front();
  std::string text = "name,value\n";
  auto add = [&text](const std::string& name, const std::string& value) { text += name + "," + value + "\n"; };
  bool assumptions_hold = true;

  if (cfg.is_2d()) {
    const auto problem = make_problem_2d(cfg);
    const std::size_t m1 = nodes_for(problem.x_right - problem.x_left, h_exp);
    const std::size_t m2 = nodes_for(problem.y_right - problem.y_left, h_exp);
    const Grid2D grid(problem.x_left, problem.x_right, problem.y_left, problem.y_right, m1, m2);
    const double tau = std::ldexp(1.0, tau_exp);
    const auto [d, e] = sample_coefficients(problem, grid);
    for (const auto& [name, q] : {std::pair{"identity", q_identity(grid.size())},
                                  std::pair{"d_inverse", q_inverse(d)}, std::pair{"e_inverse", q_inverse(e)}}) {
      const auto cert = certify_Q(problem.alpha, problem.beta, d, e, m1, m2, grid.h1(), grid.h2(), q, name);
      add(std::string("q_") + name + "_lambda_max", fmt(cert.lambda_max));
      add(std::string("q_") + name + "_cond", fmt(cert.cond_q));
      add(std::string("q_") + name + "_in_set", cert.in_set ? "1" : "0");
    }
    const Vector sigma = precond_spectrum(problem.alpha, problem.beta, d, e, m1, m2,
                                          tau / (2.0 * std::pow(grid.h1(), problem.alpha.value())),
                                          tau / (2.0 * std::pow(grid.h2(), problem.beta.value())));
    for (Eigen::Index i = 0; i < sigma.size(); ++i) add("sigma_" + std::to_string(i), fmt(sigma[i]));
  } else {
    const auto problem = make_problem_1d(cfg);
    const FractionalOrder alpha(cfg.alpha);
    const Grid1D grid(problem.x_left, problem.x_right, nodes_for(problem.x_right - problem.x_left, h_exp));
    const auto d = sample_diffusion(problem, grid);
    const auto report = theoretical_bounds(d, alpha);
    add("shape", to_string(report.shape));
    add("kappa_min", fmt(report.kappa_min));
    add("kappa_max", fmt(report.kappa_max));
    add("kappa", fmt(report.kappa));
    add("nu_alpha", fmt(report.nu_alpha));
    add("s_check", fmt(report.s_check));
    add("s_hat", fmt(report.s_hat));
    add("failed_assumptions", "\"" + report.flags.failures() + "\"");
    assumptions_hold = report.flags.all();
    const double eta = std::ldexp(1.0, tau_exp) / (2.0 * std::pow(grid.h(), cfg.alpha));
    const Vector sigma = precond_spectrum(alpha, d, eta);
    for (Eigen::Index i = 0; i < sigma.size(); ++i) add("sigma_" + std::to_string(i), fmt(sigma[i]));
  }
  write_text(text, cfg.out);
  if (!assumptions_hold) {
    std::cerr << "spectral: sufficient conditions of the bound do not hold for these coefficients\n";
    return kExitAssumption;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"One-sided space-fractional diffusion solver and experiment harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "key = value experiment file");
    sub->add_option("--out", flags.out, "output path (stdout when omitted)");
    sub->add_option("--format", flags.format, "csv or json");
    sub->add_option("--solver", flags.solver, "pgmres-t, plu or a comma list");
    sub->add_option("--threads", flags.threads, "worker threads for ladder cells");
    sub->add_option("--seed", flags.seed, "RNG seed")->each([&flags](const std::string&) { flags.seed_set = true; });
    sub->add_option("--residual-ref", flags.residual_ref, "GMRES stopping reference: rhs or initial");
    sub->add_option("--smoother", flags.smoother, "2D smoother blocks: block-diagonal or one-sided");
    sub->add_option("--set", flags.overrides, "key=value override (repeatable)");
  };

  double w_alpha = 1.5;
  std::size_t w_n = 10;
  std::string w_out;
  auto* weights = app.add_subcommand("weights", "print g_k and w_k");
  weights->add_option("--alpha", w_alpha, "order in (1, 2)")->required();
  weights->add_option("-n,--count", w_n, "largest index");
  weights->add_option("--out", w_out, "output path");

  auto* solve1d = app.add_subcommand("solve1d", "run one 1D cell");
  auto* solve2d = app.add_subcommand("solve2d", "run one 2D cell");
  auto* convergence = app.add_subcommand("convergence", "error and rate table over the ladders");
  auto* bench = app.add_subcommand("precond-bench", "PGMRES-T iteration table over the ladders");
  auto* spectral = app.add_subcommand("spectral", "bounds and preconditioned spectrum");
  for (auto* sub : {solve1d, solve2d, convergence, bench, spectral}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (weights->parsed()) return run_weights(w_alpha, w_n, w_out);
    const ExperimentConfig cfg = build_config(flags);
    if (solve1d->parsed()) return run_single(cfg, false);
    if (solve2d->parsed()) return run_single(cfg, true);
    if (convergence->parsed()) {
      print_table(run_convergence(cfg), cfg);
      return 0;
    }
    if (bench->parsed()) {
      print_table(run_precond_bench(cfg), cfg);
      return 0;
    }
    if (spectral->parsed()) return run_spectral(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingExactSolution& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GmresDivergence& e) {
    std::cerr << "solver divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const InnerSolverDivergence& e) {
    std::cerr << "solver divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const AssumptionViolated& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
