#pragma once

#include "medfx/report.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace medfx {

/// Invalid command-line or config-file settings (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation check failed or estimation aborted
inline constexpr int kExitUsage = 2;    // bad config, bad CSV, bad data

/// Every setting of one invocation. Lists are comma separated, as typed on the command line.
struct RunConfig {
  std::string command;

  std::string input;
  std::string covariates;
  std::string treatment;
  std::string treated_level = "1";
  std::string control_level = "0";
  std::string mediators;
  std::string outcome;
  std::optional<double> y_min, y_max;
  std::vector<std::string> bin_edges;  // name:e0,e1,...
  std::string method = "both";         // one_step | tmle | both
  std::string tmle_mode = "single_pass";
  double alpha = 0.05;
  bool ratio = false;

  std::string propensity_learner = "main_terms_logistic";
  std::string outcome_learner = "main_terms_logistic";
  std::string mediator_learner = "main_terms_logistic";
  double propensity_floor = 1e-3;
  double hazard_floor = 1e-3;
  double density_floor = 1e-4;
  std::string hazard_features = "main_terms";
  std::size_t cell_cap = 100000;
  int max_iterations = 100;

  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: MEDFX_THREADS, then hardware
  std::string output;
  std::string json;

  // simulate
  bool quick = false;
  std::size_t replicates = 1000;
  std::string sizes = "250,500,1000,2000";
  std::string methods = "one_step,tmle";
  bool null_world = false;
  std::string replicates_file;

  // validate
  std::string checks = "truth,mean_zero,npmle,tmle_scores,reduction,robustness";
  std::size_t mean_zero_draws = 1000000;
  std::string robustness_combos;  // ids or 1-based indices; empty = all
  std::size_t robustness_replicates = 200;
  std::string robustness_sizes = "500,2000,8000";
  std::size_t check_n = 1000;
  std::string fixture = "none";

  std::string config_file;
};

/// Parses argv (config file first, then flags; the last value of an option wins) and runs
/// the command. Reports go to `out` unless --output names a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

Report cmd_estimate(const RunConfig& config);
Report cmd_simulate(const RunConfig& config);
/// Sets `failed` when any check fails.
Report cmd_validate(const RunConfig& config, bool& failed);

/// "key=value" lines (blank lines and # comments skipped) turned into --key=value
/// arguments for `command`; keys may be prefixed by a command name ("simulate.replicates").
std::vector<std::string> config_file_arguments(const std::string& text, const std::string& command);

}  // namespace medfx
