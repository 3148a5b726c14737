#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osp/cli.hpp"
#include "osp/parallel.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace osp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> parse_errors(const std::string& text) {
  try {
    cli::parse_config(text);
  } catch (const cli::ConfigError& e) {
    return e.messages();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("osp_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

const char* tiny_price = R"(
process.kind = gbm
process.dim = 2
process.rate = 0.05
process.dividend = 0.10
process.vol = 0.2
process.spot = 90
process.horizon = 3
process.dates = 9
payoff.kind = maxcall
payoff.strike = 100
region.kind = maxcall
region.strike = 100
optimizer.grid_points = 6
optimizer.refine_rounds = 4
optimizer.refine_top_k = 1
plan.L = 3
plan.M = 400
plan.N = 2000
plan.seed = 99
)";

}  // namespace

TEST_CASE("empty config reports the missing process section") {
  CHECK(any_contains(parse_errors(""), "missing section: process"));
}

TEST_CASE("duplicate keys name both lines") {
  const auto e = parse_errors("process.kind = gbm\nprocess.dim = 2\nprocess.dim = 3\n");
  CHECK(any_contains(e, "line 3: duplicate key 'process.dim' (first set on line 2)"));
}

TEST_CASE("unknown sections and keys") {
  const auto e = parse_errors("process.kind = gbm\nprocess.colour = red\nwidget.size = 1\n");
  CHECK(any_contains(e, "line 2: unknown key 'process.colour'"));
  CHECK(any_contains(e, "line 3: unknown section 'widget'"));
}

TEST_CASE("type mismatches and missing keys are all reported") {
  const auto e = parse_errors("process.kind = gbm\nprocess.dim = two\nplan.L = 1.5\n");
  CHECK(any_contains(e, "line 2:"));
  CHECK(any_contains(e, "got 'two'"));
  CHECK(any_contains(e, "line 3:"));
  const auto missing = parse_errors("process.kind = chain\nprocess.states = 2\n");
  CHECK(any_contains(missing, "missing required key"));
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"benchmark.cfg", "qcurves.cfg", "chain2.cfg", "adversarial.cfg", "rates.cfg"}) {
    CAPTURE(name);
    const auto text = slurp(fs::path(OSP_SOURCE_DIR) / "configs" / name);
    REQUIRE_FALSE(text.empty());
    CHECK_NOTHROW(cli::parse_config(text));
  }
  const auto cfg = cli::parse_config(slurp(fs::path(OSP_SOURCE_DIR) / "configs" / "benchmark.cfg"));
  CHECK(cfg.plan.L == 20);
  CHECK(cfg.plan.M == 10000);
  CHECK(cfg.plan.N == 200000);
  REQUIRE(cfg.seed.has_value());
  CHECK(*cfg.seed == 20240601);
}

TEST_CASE("real formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 7.976190476190476, 1e-300, -2.5}) {
    CHECK(std::stod(cli::format_real(x)) == x);
  }
}

TEST_CASE("rates subcommand writes the budget table with a header comment") {
  const auto dir = scratch("rates");
  const auto cfg = cli::parse_config(slurp(fs::path(OSP_SOURCE_DIR) / "configs" / "rates.cfg"));
  REQUIRE(cli::run("rates", cfg, {.seed = std::nullopt, .output_dir = dir.string()}) == cli::exit_ok);
  const auto budget = slurp(dir / "budget.csv");
  CHECK(budget.rfind("# seed=1 version=0.1.0\n", 0) == 0);
  CHECK(budget.find("10000,1000\n") != std::string::npos);
  const auto rates = slurp(dir / "rates.csv");
  CHECK(rates.find("budget_exponent,0.75\n") != std::string::npos);
}

TEST_CASE("missing seed is a validation failure and writes nothing") {
  const auto dir = scratch("noseed");
  auto cfg = cli::parse_config(tiny_price);
  cfg.seed.reset();
  CHECK(cli::run("price", cfg, {.seed = std::nullopt, .output_dir = dir.string()}) == cli::exit_validation);
  CHECK_FALSE(fs::exists(dir / "stats.csv"));
}

TEST_CASE("oracle-check on the two-state chain passes") {
  const auto dir = scratch("oracle");
  const auto cfg = cli::parse_config(slurp(fs::path(OSP_SOURCE_DIR) / "configs" / "chain2.cfg"));
  CHECK(cli::run("oracle-check", cfg, {.seed = std::nullopt, .output_dir = dir.string()}) == cli::exit_ok);
  CHECK(fs::exists(dir / "oracle.csv"));
}

TEST_CASE("price output is byte-identical across thread counts") {
  const auto cfg = cli::parse_config(tiny_price);
  std::vector<std::string> stats;
  std::vector<std::string> summary;
  for (unsigned threads : {1u, 3u, 8u}) {
    set_thread_count(threads);
    const auto dir = scratch("price" + std::to_string(threads));
    REQUIRE(cli::run("price", cfg, {.seed = std::nullopt, .output_dir = dir.string()}) == cli::exit_ok);
    stats.push_back(slurp(dir / "stats.csv"));
    summary.push_back(slurp(dir / "summary.csv"));
  }
  set_thread_count(0);
  CHECK(stats[0] == stats[1]);
  CHECK(stats[0] == stats[2]);
  CHECK(summary[0] == summary[1]);
  CHECK(summary[0] == summary[2]);
  CHECK(stats[0].rfind("# seed=99 version=0.1.0\n", 0) == 0);
}

TEST_CASE("seed option overrides the config seed") {
  const auto cfg = cli::parse_config(tiny_price);
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  REQUIRE(cli::run("price", cfg, {.seed = 5, .output_dir = a.string()}) == cli::exit_ok);
  REQUIRE(cli::run("price", cfg, {.seed = std::nullopt, .output_dir = b.string()}) == cli::exit_ok);
  CHECK(slurp(a / "summary.csv").rfind("# seed=5 ", 0) == 0);
  CHECK(slurp(a / "summary.csv") != slurp(b / "summary.csv"));
}

TEST_CASE("unknown subcommand") {
  const auto cfg = cli::parse_config(tiny_price);
  CHECK(cli::run("bogus", cfg, {.seed = std::nullopt, .output_dir = scratch("bogus").string()}) == cli::exit_validation);
}

TEST_CASE("undiscounted payoff keeps the exercise dates") {
  std::string text = tiny_price;
  text += "payoff.discount = false\n";
  const auto cfg = cli::parse_config(text);
  const auto& p = std::get<MaxCallPayoff>(*cfg.payoff);
  CHECK(p.rate == 0.0);
  CHECK(p.dates == 9);
  CHECK(cli::run("price", cfg, {.seed = std::nullopt, .output_dir = scratch("undiscounted").string()}) == cli::exit_ok);
}
