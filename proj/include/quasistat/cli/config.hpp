#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "quasistat/dynamics.hpp"

namespace quasistat::cli {

/// Invalid configuration or usage; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

/// Fully resolved experiment configuration. Every field has a documented
/// range checked by validate(); the seed has no default.
struct ExperimentConfig {
  std::string kind = "pd";  // pd | pp | geometric | mixture-of-pd | custom-from-file
  double alpha = 0.5;
  double alpha2 = 0.7;        // second component of mixture-of-pd
  double oracle_alpha = 0.0;  // alpha of the oracle samplers in compare-oracles; 0 = alpha
  double rho = 1.0;
  double beta = 1.0;
  std::string law = "lognormal";  // gaussian | lognormal | uniform
  double law_mu = 0.0;            // gaussian mean, or log-mean of W
  double law_sigma = 1.0;         // gaussian sd, or log-sd of W
  double law_a = -1.0;
  double law_b = 1.0;
  std::size_t replicas = 2000;
  std::size_t trunc_n = 500;
  std::size_t sb_top = 20;  // pieces kept by the stick-breaking oracle
  std::size_t sb_max_sticks = 20000;
  std::size_t tau = 1;
  std::size_t topk = 0;  // 0 = 5 for masses, 10 for gaps
  std::optional<std::uint64_t> seed;
  std::string out = "quasistat_out";
  double level = 0.01;
  std::size_t n_perm = 199;
  double f_a = 0.69314718055994531;  // ln 2
  double f_d = 0.69314718055994531;
  double jump_ck = 1.5;  // C + K
  std::optional<double> y_min;  // default -5
  std::optional<double> y_max;  // default (v_beta / beta) tau + 10
  std::size_t y_points = 100;
  std::string input;  // CSV for custom-from-file
  unsigned threads = 0;  // 0 = hardware concurrency

  bool is_gap_kind() const { return kind == "pp"; }
  std::size_t resolved_topk() const { return topk != 0 ? topk : (is_gap_kind() ? 10 : 5); }
  double resolved_oracle_alpha() const { return oracle_alpha > 0.0 ? oracle_alpha : alpha; }
  unsigned resolved_threads() const;
  IncrementLaw increment_law() const;
  double resolved_y_min() const;
  double resolved_y_max() const;

  /// Throws ConfigError on the first out-of-range field.
  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Duplicate keys: last wins.
KeyValues parse_key_values(const std::string& text);
KeyValues read_config_file(const std::string& path);

/// Applies the key-values on top of the defaults and validates the result
/// (except the seed, which the caller resolves).
ExperimentConfig resolve_config(const KeyValues& values);

/// Flat `key = value` dump of every field, defaults included. Doubles are
/// printed with 17 significant digits.
std::string to_text(const ExperimentConfig& config);

}  // namespace quasistat::cli
