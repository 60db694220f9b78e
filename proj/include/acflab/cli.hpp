#pragma once

// Batch front end. Exit codes: 0 when every verdict is pass or a hypothesis
// outcome, 2 when some verdict is fail, 64 on usage or configuration errors,
// 1 on other errors.

#include "acflab/experiments.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace acflab {

inline constexpr int kExitUsage = 64;
inline constexpr const char* kRunSchema = "acflab-run/1";

/// Bad flags or configuration; the message starts with the offending path.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "0.25", "1/128", "-3e-2".
double parse_number(const std::string& text);
/// Comma-separated numbers.
std::vector<double> parse_list(const std::string& text);

DiniModulus modulus_from_json(const nlohmann::json& j, const std::string& path);

struct Fixture {
  std::string kind;
  ScalarField u;
  LevelFunction exact;  // set for closed-form fixtures
  std::optional<DomainMask> domain;
  std::function<double(const Point&)> g;
  std::optional<Point> default_y0;
  nlohmann::json metadata = nlohmann::json::object();
};

Fixture fixture_from_json(const nlohmann::json& fixture, const nlohmann::json& grid);

struct RunResult {
  std::vector<ExperimentReport> reports;
  int exit_code = 0;
};

/// Runs the experiments of a parsed acflab-run/1 configuration whose type is
/// in `types` (all when empty). Reports and CSV tables go to `out_dir` when
/// non-empty. Per-experiment runtimes go to `timing` when given; they stay
/// out of the reports so that those are reproducible.
RunResult run_config(const nlohmann::json& config, const std::vector<std::string>& types, const std::string& out_dir,
                     std::ostream& log, std::ostream* timing = nullptr);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace acflab
