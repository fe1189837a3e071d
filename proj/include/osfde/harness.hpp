#pragma once

#include "osfde/krylov.hpp"
#include "osfde/scheme1d.hpp"
#include "osfde/scheme2d.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace osfde {

inline constexpr std::size_t kMaxNodes1D = std::size_t{1} << 15;
inline constexpr std::size_t kMaxNodes2D = std::size_t{1} << 18;
/// Largest system the PLU path will factor densely.
inline constexpr std::size_t kMaxDenseSolve = 8192;

/// Parses "-8..-10", "-8,-9" or "-8" into the listed exponents.
std::vector<int> parse_ladder(const std::string& text);

struct ExperimentConfig {
  /// "example1", "example2", "zero1d", "zero2d" or "custom1d".
  std::string problem = "example1";
  double alpha = 1.5;
  std::optional<double> beta;
  std::vector<int> h_exps{-8};
  std::vector<int> tau_exps{-10};
  std::vector<SolverKind> solvers{SolverKind::pgmres_t};
  GmresOptions gmres{.reference = ResidualReference::rhs};
  bool warm_start = true;
  SmootherBlocks smoother = SmootherBlocks::block_diagonal;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";

  /// custom1d: d and phi tabulated at equispaced points spanning
  /// [x_left, x_right] (endpoints included), linearly interpolated; f = 0.
  std::vector<double> custom_d;
  std::vector<double> custom_phi;
  double x_left = 0.0;
  double x_right = 1.0;
  double horizon = 1.0;

  bool is_2d() const noexcept;
  /// Throws ConfigError on an unknown problem, empty ladder or oversized grid.
  void validate() const;
};

/// Applies one "key = value" setting. Throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Reads a flat key = value file ('#' starts a comment).
ExperimentConfig load_config(const std::string& path);
/// Parses "key=value" overrides onto cfg.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides);

Problem1D make_problem_1d(const ExperimentConfig& cfg);
Problem2D make_problem_2d(const ExperimentConfig& cfg);

/// Interior nodes per direction for mesh width 2^h_exp on an interval of the given length.
std::size_t nodes_for(double length, int h_exp);
/// Time steps for step 2^tau_exp over the horizon.
std::size_t steps_for(double horizon, int tau_exp);

struct ResultRow {
  double alpha = 0.0;
  std::optional<double> beta;
  int h_exp = 0;
  int tau_exp = 0;
  SolverKind solver = SolverKind::pgmres_t;
  std::optional<double> iter_mean;
  double cpu_s = 0.0;
  std::optional<double> error;
  std::optional<double> rate;

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  bool operator==(const ResultTable&) const = default;
};

struct CellResult {
  ResultRow row;
  SolveReport report;
};

/// Runs one (h, tau, solver) cell of the configured problem.
CellResult run_cell(const ExperimentConfig& cfg, int h_exp, int tau_exp, SolverKind solver);

/// Error table over the h x tau ladder for every configured solver. Rates
/// follow the ladder that has more than one entry (h first).
/// Throws MissingExactSolution if the problem has no exact solution.
ResultTable run_convergence(const ExperimentConfig& cfg);

/// Iteration table for PGMRES-T over the ladder; errors filled when known.
ResultTable run_precond_bench(const ExperimentConfig& cfg);

/// Fills rate = log2(E_prev / E) along the refinement direction.
void fill_rates(ResultTable& table);

enum class EmitFormat { csv, json };
EmitFormat emit_format_from_string(const std::string& name);

std::string to_csv(const ResultTable& table);
std::string to_json(const ResultTable& table);
ResultTable table_from_json(const std::string& text);
/// Writes the table to path (or returns the text when path is empty).
std::string emit(const ResultTable& table, EmitFormat format, const std::string& path = {});

/// Sets the spdlog level from OSFDE_LOG (trace, debug, info, warn, error, off).
void init_logging();

}  // namespace osfde
