#include "osfde/harness.hpp"

#include "osfde/error.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace osfde {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "': '" + value + "' is not a number");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw ConfigError("setting '" + key + "': '" + value + "' is not an integer");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("setting '" + key + "': '" + value + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_double(key, item));
  return out;
}

// Linear interpolation of equispaced samples spanning [left, right].
Coefficient1D tabulated(std::vector<double> values, double left, double right) {
  return [values = std::move(values), left, right](double x) {
    if (values.size() == 1) return values.front();
    const double pos = (x - left) / (right - left) * static_cast<double>(values.size() - 1);
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(values.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(clamped), values.size() - 2);
    const double frac = clamped - static_cast<double>(k);
    return (1.0 - frac) * values[k] + frac * values[k + 1];
  };
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

struct CellSpec {
  int h_exp;
  int tau_exp;
  SolverKind solver;
};

std::vector<CellSpec> ladder_cells(const ExperimentConfig& cfg, const std::vector<SolverKind>& solvers) {
  std::vector<CellSpec> cells;
  for (SolverKind s : solvers)
    for (int t : cfg.tau_exps)
      for (int h : cfg.h_exps) cells.push_back({h, t, s});
  return cells;
}

// Runs every cell on a pool of cfg.threads workers; rows keep ladder order.
ResultTable run_cells(const ExperimentConfig& cfg, const std::vector<CellSpec>& cells) {
  std::vector<std::optional<ResultRow>> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const auto& c = cells[i];
        spdlog::debug("cell h=2^{} tau=2^{} solver={}", c.h_exp, c.tau_exp, to_string(c.solver));
        rows[i] = run_cell(cfg, c.h_exp, c.tau_exp, c.solver).row;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, std::max<std::size_t>(cells.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ResultTable table;
  for (auto& r : rows) table.rows.push_back(std::move(*r));
  return table;
}

}  // namespace

std::vector<int> parse_ladder(const std::string& text) {
  const std::string s = trim(text);
  const auto dots = s.find("..");
  std::vector<int> out;
  if (dots != std::string::npos) {
    const int a = parse_int("ladder", trim(s.substr(0, dots)));
    const int b = parse_int("ladder", trim(s.substr(dots + 2)));
    const int step = a <= b ? 1 : -1;
    for (int k = a;; k += step) {
      out.push_back(k);
      if (k == b) break;
    }
  } else {
    for (const auto& item : split(s, ',')) out.push_back(parse_int("ladder", item));
  }
  if (out.empty()) throw ConfigError("empty ladder '" + text + "'");
  return out;
}

bool ExperimentConfig::is_2d() const noexcept { return problem == "example2" || problem == "zero2d"; }

void ExperimentConfig::validate() const {
  static const std::vector<std::string> known{"example1", "example2", "zero1d", "zero2d", "custom1d"};
  if (std::find(known.begin(), known.end(), problem) == known.end())
    throw ConfigError("unknown problem '" + problem + "'");
  if (h_exps.empty() || tau_exps.empty()) throw ConfigError("ladders must be nonempty");
  if (solvers.empty()) throw ConfigError("no solver selected");
  if (!(alpha > 1.0 && alpha < 2.0)) throw ConfigError("alpha must lie in (1, 2)");
  if (beta && !(*beta > 1.0 && *beta < 2.0)) throw ConfigError("beta must lie in (1, 2)");
  if (!(gmres.rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
  if (problem == "custom1d" && (custom_d.empty() || custom_phi.empty()))
    throw ConfigError("custom1d needs custom_d and custom_phi");
  if (problem == "custom1d" && !(x_right > x_left)) throw ConfigError("x_right must exceed x_left");

  const bool dense = std::find(solvers.begin(), solvers.end(), SolverKind::plu) != solvers.end();
  const double length = is_2d() ? 2.0 : (problem == "custom1d" ? x_right - x_left : 1.0);
  for (int h : h_exps) {
    const std::size_t m = nodes_for(length, h);
    const std::size_t n = is_2d() ? m * m : m;
    const std::size_t limit = is_2d() ? kMaxNodes2D : kMaxNodes1D;
    if (n > limit) throw ConfigError("grid h=2^" + std::to_string(h) + " exceeds the memory guard");
    if (dense && n > kMaxDenseSolve)
      throw ConfigError("grid h=2^" + std::to_string(h) + " is too large for the dense PLU solver");
  }
  const double t_final = problem == "custom1d" ? horizon : 1.0;
  for (int t : tau_exps) steps_for(t_final, t);
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "problem") {
    cfg.problem = value;
  } else if (key == "alpha") {
    cfg.alpha = parse_double(key, value);
  } else if (key == "beta") {
    cfg.beta = parse_double(key, value);
  } else if (key == "h_exp") {
    cfg.h_exps = parse_ladder(value);
  } else if (key == "tau_exp") {
    cfg.tau_exps = parse_ladder(value);
  } else if (key == "solver") {
    cfg.solvers.clear();
    try {
      for (const auto& s : split(value, ',')) cfg.solvers.push_back(solver_kind_from_string(s));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "rel_tol") {
    cfg.gmres.rel_tol = parse_double(key, value);
  } else if (key == "max_iter") {
    cfg.gmres.max_iter = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "residual_ref") {
    if (value == "rhs") {
      cfg.gmres.reference = ResidualReference::rhs;
    } else if (value == "initial") {
      cfg.gmres.reference = ResidualReference::initial_residual;
    } else {
      throw ConfigError("residual_ref must be 'rhs' or 'initial'");
    }
  } else if (key == "warm_start") {
    cfg.warm_start = parse_bool(key, value);
  } else if (key == "smoother") {
    if (value == "block-diagonal") {
      cfg.smoother = SmootherBlocks::block_diagonal;
    } else if (value == "one-sided") {
      cfg.smoother = SmootherBlocks::one_sided;
    } else {
      throw ConfigError("smoother must be 'block-diagonal' or 'one-sided'");
    }
  } else if (key == "threads") {
    cfg.threads = static_cast<std::size_t>(std::max(1, parse_int(key, value)));
  } else if (key == "seed") {
    try {
      cfg.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ConfigError("seed must be an unsigned integer");
    }
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    emit_format_from_string(value);
    cfg.format = value;
  } else if (key == "custom_d") {
    cfg.custom_d = parse_list(key, value);
  } else if (key == "custom_phi") {
    cfg.custom_phi = parse_list(key, value);
  } else if (key == "x_left") {
    cfg.x_left = parse_double(key, value);
  } else if (key == "x_right") {
    cfg.x_right = parse_double(key, value);
  } else if (key == "horizon") {
    cfg.horizon = parse_double(key, value);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' is not key=value");
    apply_setting(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
}

Problem1D make_problem_1d(const ExperimentConfig& cfg) {
  if (cfg.problem == "example1") return example1(FractionalOrder(cfg.alpha));
  if (cfg.problem == "zero1d") return zero_problem_1d();
  if (cfg.problem == "custom1d") {
    Problem1D p;
    p.name = "custom1d";
    p.x_left = cfg.x_left;
    p.x_right = cfg.x_right;
    p.horizon = cfg.horizon;
    p.d = tabulated(cfg.custom_d, cfg.x_left, cfg.x_right);
    const auto phi = tabulated(cfg.custom_phi, cfg.x_left, cfg.x_right);
    p.phi = phi;
    p.f = [](double, double) { return 0.0; };
    return p;
  }
  throw ConfigError("problem '" + cfg.problem + "' is not one-dimensional");
}

Problem2D make_problem_2d(const ExperimentConfig& cfg) {
  const FractionalOrder alpha(cfg.alpha);
  const FractionalOrder beta(cfg.beta.value_or(cfg.alpha));
  if (cfg.problem == "example2") return example2(alpha, beta);
  if (cfg.problem == "zero2d") {
    auto p = zero_problem_2d(alpha, beta);
    // Matches the example2 domain so ladders mean the same thing.
    p.x_right = p.y_right = 2.0;
    return p;
  }
  throw ConfigError("problem '" + cfg.problem + "' is not two-dimensional");
}

std::size_t nodes_for(double length, int h_exp) {
  const double cells = length * std::ldexp(1.0, -h_exp);
  if (cells < 2.0 || cells != std::floor(cells))
    throw ConfigError("mesh width 2^" + std::to_string(h_exp) + " does not divide the domain");
  return static_cast<std::size_t>(cells) - 1;
}

std::size_t steps_for(double horizon, int tau_exp) {
  const double steps = horizon * std::ldexp(1.0, -tau_exp);
  if (steps < 1.0 || steps != std::floor(steps))
    throw ConfigError("time step 2^" + std::to_string(tau_exp) + " does not divide the horizon");
  return static_cast<std::size_t>(steps);
}

CellResult run_cell(const ExperimentConfig& cfg, int h_exp, int tau_exp, SolverKind solver) {
  CellResult out;
  ResultRow& row = out.row;
  row.alpha = cfg.alpha;
  row.h_exp = h_exp;
  row.tau_exp = tau_exp;
  row.solver = solver;

  if (cfg.is_2d()) {
    const auto problem = make_problem_2d(cfg);
    row.beta = problem.beta.value();
    const std::size_t m1 = nodes_for(problem.x_right - problem.x_left, h_exp);
    const std::size_t m2 = nodes_for(problem.y_right - problem.y_left, h_exp);
    const Grid2D grid(problem.x_left, problem.x_right, problem.y_left, problem.y_right, m1, m2);
    const TimeGrid tgrid(problem.horizon, steps_for(problem.horizon, tau_exp));
    SolveOptions2D opts;
    opts.solver = solver;
    opts.gmres = cfg.gmres;
    opts.warm_start = cfg.warm_start;
    opts.multigrid.smoother = cfg.smoother;
    out.report = advance_2d(problem, grid, tgrid, opts).report;
  } else {
    const auto problem = make_problem_1d(cfg);
    const Grid1D grid(problem.x_left, problem.x_right, nodes_for(problem.x_right - problem.x_left, h_exp));
    const TimeGrid tgrid(problem.horizon, steps_for(problem.horizon, tau_exp));
    SolveOptions opts;
    opts.solver = solver;
    opts.gmres = cfg.gmres;
    opts.warm_start = cfg.warm_start;
    out.report = advance(problem, grid, tgrid, FractionalOrder(cfg.alpha), opts).report;
  }
  if (solver == SolverKind::pgmres_t) row.iter_mean = out.report.mean_iterations();
  row.cpu_s = out.report.times.total_s;
  row.error = out.report.error;
  return out;
}

void fill_rates(ResultTable& table) {
  for (auto& row : table.rows) {
    row.rate.reset();
    bool h_dir = false;
    bool t_dir = false;
    for (const auto& other : table.rows) {
      if (other.solver != row.solver || other.alpha != row.alpha || other.beta != row.beta) continue;
      if (other.tau_exp == row.tau_exp && other.h_exp != row.h_exp) h_dir = true;
      if (other.h_exp == row.h_exp && other.tau_exp != row.tau_exp) t_dir = true;
    }
    for (const auto& prev : table.rows) {
      if (prev.solver != row.solver || prev.alpha != row.alpha || prev.beta != row.beta) continue;
      const bool h_pred = h_dir && prev.tau_exp == row.tau_exp && prev.h_exp == row.h_exp + 1;
      const bool t_pred = !h_dir && t_dir && prev.h_exp == row.h_exp && prev.tau_exp == row.tau_exp + 1;
      if ((h_pred || t_pred) && prev.error && row.error && *prev.error > 0.0 && *row.error > 0.0)
        row.rate = std::log2(*prev.error / *row.error);
    }
  }
}

ResultTable run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool exact = cfg.is_2d() ? make_problem_2d(cfg).exact.has_value()
                                 : make_problem_1d(cfg).exact.has_value();
  if (!exact) throw MissingExactSolution();
  auto table = run_cells(cfg, ladder_cells(cfg, cfg.solvers));
  fill_rates(table);
  return table;
}

ResultTable run_precond_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_cells(cfg, ladder_cells(cfg, {SolverKind::pgmres_t}));
}

EmitFormat emit_format_from_string(const std::string& name) {
  if (name == "csv") return EmitFormat::csv;
  if (name == "json") return EmitFormat::json;
  throw ConfigError("format must be 'csv' or 'json'");
}

std::string to_csv(const ResultTable& table) {
  std::string out = "alpha,beta,h_exp,tau_exp,solver,iter_mean,cpu_s,error,rate\n";
  for (const auto& r : table.rows) {
    out += format_number(r.alpha) + "," + format_optional(r.beta) + "," + std::to_string(r.h_exp) + "," +
           std::to_string(r.tau_exp) + "," + to_string(r.solver) + "," + format_optional(r.iter_mean) + "," +
           format_number(r.cpu_s) + "," + format_optional(r.error) + "," + format_optional(r.rate) + "\n";
  }
  return out;
}

std::string to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"beta", optional_json(r.beta)},
                    {"h_exp", r.h_exp},
                    {"tau_exp", r.tau_exp},
                    {"solver", to_string(r.solver)},
                    {"iter_mean", optional_json(r.iter_mean)},
                    {"cpu_s", r.cpu_s},
                    {"error", optional_json(r.error)},
                    {"rate", optional_json(r.rate)}});
  }
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

ResultTable table_from_json(const std::string& text) {
  ResultTable table;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& j : doc.at("rows")) {
      ResultRow r;
      r.alpha = j.at("alpha").get<double>();
      r.beta = optional_from(j.at("beta"));
      r.h_exp = j.at("h_exp").get<int>();
      r.tau_exp = j.at("tau_exp").get<int>();
      r.solver = solver_kind_from_string(j.at("solver").get<std::string>());
      r.iter_mean = optional_from(j.at("iter_mean"));
      r.cpu_s = j.at("cpu_s").get<double>();
      r.error = optional_from(j.at("error"));
      r.rate = optional_from(j.at("rate"));
      table.rows.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed result table: ") + e.what());
  }
  return table;
}

std::string emit(const ResultTable& table, EmitFormat format, const std::string& path) {
  const std::string text = format == EmitFormat::csv ? to_csv(table) : to_json(table);
  if (!path.empty()) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path + "' failed");
  }
  return text;
}

void init_logging() {
  const char* env = std::getenv("OSFDE_LOG");
  if (env == nullptr) {
    spdlog::set_level(spdlog::level::warn);
    return;
  }
  spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace osfde
