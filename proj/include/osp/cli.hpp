#pragma once

#include "osp/adversarial.hpp"
#include "osp/estimate.hpp"
#include "osp/optimize.hpp"
#include "osp/process.hpp"
#include "osp/stopping.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace osp::cli {

inline constexpr const char* version = "0.1.0";

/// Every problem found while parsing, each prefixed with its line number or key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

struct RateSection {
  Real alpha = 1.0;
  Real rho = 1.0;
  Real gamma = 1.0;
  int dim = 2;
  int dates = 2;
  std::vector<Index> budgets;  // N values for the M(N) table
};

struct OracleSection {
  int random_instances = 0;
  int states = 3;
  int dates = 3;
  int regions = 200;
};

struct RunConfig {
  ProcessSpec process;
  std::optional<PayoffSpec> payoff;
  std::optional<RegionFamily> region;
  OptimizerConfig optimizer;
  ExperimentPlan plan;
  RateSection rates;
  LearningCurveSpec adversarial;
  OracleSection oracle;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
};

/// Parses the line-oriented `section.key = value` format (`#` starts a comment).
/// Throws ConfigError listing unknown keys, type mismatches, duplicates and missing keys.
RunConfig parse_config(const std::string& text);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_runtime = 2;

/// Runs one of price, qcurves, oracle-check, adversarial, rates. Diagnostics go to stderr;
/// CSV files are written only after the computation has finished.
int run(const std::string& subcommand, const RunConfig& config, const RunOptions& options);

/// %.17g
std::string format_real(Real value);

}  // namespace osp::cli
