#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "quasistat/cli/config.hpp"

namespace quasistat::cli {

/// Outcome of one subcommand. The report file holds everything except the
/// runtime, so reruns with the same config and seed are byte-identical.
struct ResultRecord {
  std::string experiment;
  nlohmann::ordered_json input;
  nlohmann::ordered_json statistics = nlohmann::ordered_json::object();
  nlohmann::ordered_json p_values = nlohmann::ordered_json::object();
  std::map<std::string, bool> flags;
  double runtime_seconds = 0.0;

  bool all_pass() const;
  nlohmann::ordered_json to_json(bool include_runtime) const;
};

/// Config echo embedded in every record (thread count excluded).
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

ResultRecord cmd_sample(const ExperimentConfig& config);
ResultRecord cmd_evolve(const ExperimentConfig& config);
ResultRecord cmd_test_invariance(const ExperimentConfig& config);
ResultRecord cmd_verify_lemma(const ExperimentConfig& config);
ResultRecord cmd_gen_functional(const ExperimentConfig& config);
ResultRecord cmd_compare_oracles(const ExperimentConfig& config);

enum ExitCode : int { kExitPass = 0, kExitRejected = 1, kExitUsage = 2 };

/// Full command-line entry point. `env_seed` is the QUASISTAT_SEED value, if
/// any; the --seed flag wins over it and over the config file.
int run_cli(int argc, const char* const* argv, const char* env_seed, std::ostream& out,
            std::ostream& err);

}  // namespace quasistat::cli
