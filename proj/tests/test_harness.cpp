#include "osfde/error.hpp"
#include "osfde/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace osfde;

namespace {

std::string strip_cpu(const std::string& csv) {
  std::stringstream in(csv);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() > 6) cols[6] = "*";
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
  }
  return out;
}

ExperimentConfig config(std::initializer_list<std::string> overrides) {
  ExperimentConfig cfg;
  apply_overrides(cfg, overrides);
  return cfg;
}

}  // namespace

TEST(Config, LadderForms) {
  EXPECT_EQ(parse_ladder("-4..-6"), (std::vector<int>{-4, -5, -6}));
  EXPECT_EQ(parse_ladder("-6..-4"), (std::vector<int>{-6, -5, -4}));
  EXPECT_EQ(parse_ladder("-8, -9"), (std::vector<int>{-8, -9}));
  EXPECT_EQ(parse_ladder("-7"), (std::vector<int>{-7}));
  EXPECT_THROW(parse_ladder(""), ConfigError);
  EXPECT_THROW(parse_ladder("a..b"), ConfigError);
}

TEST(Config, LoadsFileAndOverrides) {
  const auto path = std::filesystem::temp_directory_path() / "osfde_cfg_test.txt";
  {
    std::ofstream out(path);
    out << "# experiment\nproblem = example2\nalpha = 1.8\nbeta = 1.3  # trailing\n"
        << "h_exp = -4..-5\ntau_exp = -7\nsolver = pgmres-t, plu\nresidual_ref = initial\n";
  }
  auto cfg = load_config(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(cfg.problem, "example2");
  EXPECT_DOUBLE_EQ(cfg.alpha, 1.8);
  EXPECT_DOUBLE_EQ(*cfg.beta, 1.3);
  EXPECT_EQ(cfg.h_exps, (std::vector<int>{-4, -5}));
  EXPECT_EQ(cfg.solvers.size(), 2u);
  EXPECT_EQ(cfg.gmres.reference, ResidualReference::initial_residual);
  EXPECT_TRUE(cfg.is_2d());
  apply_overrides(cfg, {"alpha=1.2", "smoother=one-sided", "threads=3"});
  EXPECT_DOUBLE_EQ(cfg.alpha, 1.2);
  EXPECT_EQ(cfg.smoother, SmootherBlocks::one_sided);
  EXPECT_EQ(cfg.threads, 3u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsBadInput) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "colour", "red"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "alpha", "1.5x"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "solver", "cg"), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"alpha"}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/osfde.cfg"), ConfigError);
  EXPECT_THROW(config({"problem=example3"}).validate(), ConfigError);
  EXPECT_THROW(config({"alpha=2.5"}).validate(), ConfigError);
  EXPECT_THROW(config({"h_exp=-16"}).validate(), ConfigError);
  EXPECT_THROW(config({"h_exp=-14", "solver=plu"}).validate(), ConfigError);
  EXPECT_THROW(config({"problem=example2", "h_exp=-9"}).validate(), ConfigError);
  EXPECT_THROW(config({"problem=custom1d"}).validate(), ConfigError);
  EXPECT_NO_THROW(config({"h_exp=-15"}).validate());
}

TEST(Config, GridSizes) {
  EXPECT_EQ(nodes_for(1.0, -8), 255u);
  EXPECT_EQ(nodes_for(2.0, -4), 31u);
  EXPECT_EQ(steps_for(1.0, -10), 1024u);
  EXPECT_THROW(nodes_for(1.0, 1), ConfigError);
}

TEST(Emit, EmptyTableIsHeaderOnly) {
  EXPECT_EQ(to_csv(ResultTable{}), "alpha,beta,h_exp,tau_exp,solver,iter_mean,cpu_s,error,rate\n");
}

TEST(Emit, FormatsRowWithSixSignificantDigits) {
  ResultTable t;
  ResultRow r;
  r.alpha = 1.2;
  r.h_exp = -8;
  r.tau_exp = -10;
  r.iter_mean = 2.1;
  r.cpu_s = 0.25;
  r.error = 3.47e-5;
  t.rows.push_back(r);
  EXPECT_EQ(to_csv(t), "alpha,beta,h_exp,tau_exp,solver,iter_mean,cpu_s,error,rate\n"
                       "1.2,,-8,-10,pgmres-t,2.1,0.25,3.47e-05,\n");
}

TEST(Emit, JsonRoundTrip) {
  ResultTable t;
  ResultRow a;
  a.alpha = 1.5;
  a.beta = 1.3;
  a.h_exp = -4;
  a.tau_exp = -7;
  a.iter_mean = 4.35156;
  a.cpu_s = 0.123456789;
  a.error = 3.0013e-3;
  a.rate = 2.0412345678;
  ResultRow b;
  b.alpha = 1.8;
  b.solver = SolverKind::plu;
  t.rows = {a, b};
  EXPECT_EQ(table_from_json(to_json(t)), t);
  EXPECT_EQ(table_from_json(to_json(ResultTable{})), ResultTable{});
  EXPECT_THROW(table_from_json("{\"rows\": [{}]}"), ConfigError);
}

TEST(Emit, WritesFileAndReportsPath) {
  const auto path = std::filesystem::temp_directory_path() / "osfde_emit_test.csv";
  emit(ResultTable{}, EmitFormat::csv, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "alpha,beta,h_exp,tau_exp,solver,iter_mean,cpu_s,error,rate");
  std::filesystem::remove(path);
  try {
    emit(ResultTable{}, EmitFormat::csv, "/nonexistent/dir/out.csv");
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/out.csv"), std::string::npos);
  }
  EXPECT_EQ(emit_format_from_string("json"), EmitFormat::json);
  EXPECT_THROW(emit_format_from_string("xml"), ConfigError);
}

TEST(Rates, FilledOnlyWithPredecessor) {
  ResultTable t;
  for (int h : {-6, -7, -8}) {
    ResultRow r;
    r.alpha = 1.5;
    r.h_exp = h;
    r.tau_exp = -10;
    r.error = std::ldexp(1.0, 2 * h);
    t.rows.push_back(r);
  }
  fill_rates(t);
  EXPECT_FALSE(t.rows[0].rate.has_value());
  EXPECT_NEAR(*t.rows[1].rate, 2.0, 1e-12);
  EXPECT_NEAR(*t.rows[2].rate, 2.0, 1e-12);
}

TEST(Convergence, ZeroProblemGivesZeroErrors) {
  const auto t = run_convergence(config({"problem=zero1d", "h_exp=-5..-6", "tau_exp=-3"}));
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& r : t.rows) EXPECT_EQ(*r.error, 0.0);
  EXPECT_FALSE(t.rows[1].rate.has_value());
}

TEST(Convergence, RequiresExactSolution) {
  EXPECT_THROW(run_convergence(config({"problem=custom1d", "custom_d=1,2", "custom_phi=0,1,0"})),
               MissingExactSolution);
}

TEST(Convergence, ExampleOneReferenceRow) {
  const auto t = run_convergence(config({"alpha=1.2", "h_exp=-8..-9", "tau_exp=-10", "threads=2"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NEAR(*t.rows[0].error, 3.47e-5, 0.03 * 3.47e-5);
  EXPECT_NEAR(*t.rows[1].error, 8.42e-6, 0.03 * 8.42e-6);
  EXPECT_NEAR(*t.rows[1].rate, 2.04, 0.05);
}

TEST(Convergence, ExampleTwoReferenceRow) {
  const auto t = run_convergence(config({"problem=example2", "alpha=1.01", "beta=1.09", "h_exp=-4..-5", "tau_exp=-7"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(*t.rows[0].beta, 1.09);
  EXPECT_NEAR(*t.rows[0].error, 3.38e-3, 0.03 * 3.38e-3);
  EXPECT_NEAR(*t.rows[1].error, 8.14e-4, 0.03 * 8.14e-4);
  EXPECT_NEAR(*t.rows[1].rate, 2.05, 0.05);
}

TEST(Convergence, ReproducibleApartFromCpu) {
  const auto cfg = config({"alpha=1.7", "h_exp=-5..-7", "tau_exp=-6", "solver=pgmres-t,plu", "threads=2"});
  const auto a = to_csv(run_convergence(cfg));
  const auto b = to_csv(run_convergence(cfg));
  EXPECT_EQ(strip_cpu(a), strip_cpu(b));
}

TEST(PrecondBench, ExampleOneIterations) {
  const auto t = run_precond_bench(config({"alpha=1.8", "h_exp=-10", "tau_exp=-10"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(*t.rows[0].iter_mean, 4.9, 0.3);
}

TEST(PrecondBench, ExampleTwoIterations) {
  const auto t = run_precond_bench(config({"problem=example2", "alpha=1.5", "beta=1.9", "h_exp=-6", "tau_exp=-5"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(*t.rows[0].iter_mean, 9.5, 1.0);
}

TEST(PrecondBench, ConstantCoefficientNeedsOneIteration) {
  const auto t = run_precond_bench(
      config({"problem=custom1d", "custom_d=0.8", "custom_phi=0,1,0.5,0", "h_exp=-7", "tau_exp=-5"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_LE(*t.rows[0].iter_mean, 1.0);
  EXPECT_FALSE(t.rows[0].error.has_value());
}
