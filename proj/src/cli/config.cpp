#include "quasistat/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "quasistat/analysis.hpp"
#include "quasistat/random.hpp"

namespace quasistat::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    if (value.empty() || value.front() == '-') throw std::invalid_argument(value);
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used, 10);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid unsigned integer for '" + key + "': '" + value + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto str = [](std::string ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, const std::string&, const std::string& v) {
        c.*field = v;
      };
    };
    auto dbl = [](double ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_double(k, v);
      };
    };
    auto size = [](std::size_t ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*field = static_cast<std::size_t>(parse_u64(k, v));
      };
    };
    t["kind"] = str(&ExperimentConfig::kind);
    t["alpha"] = dbl(&ExperimentConfig::alpha);
    t["alpha2"] = dbl(&ExperimentConfig::alpha2);
    t["oracle_alpha"] = dbl(&ExperimentConfig::oracle_alpha);
    t["rho"] = dbl(&ExperimentConfig::rho);
    t["beta"] = dbl(&ExperimentConfig::beta);
    t["law"] = str(&ExperimentConfig::law);
    t["law_mu"] = dbl(&ExperimentConfig::law_mu);
    t["law_sigma"] = dbl(&ExperimentConfig::law_sigma);
    t["law_a"] = dbl(&ExperimentConfig::law_a);
    t["law_b"] = dbl(&ExperimentConfig::law_b);
    t["replicas"] = size(&ExperimentConfig::replicas);
    t["trunc_n"] = size(&ExperimentConfig::trunc_n);
    t["sb_top"] = size(&ExperimentConfig::sb_top);
    t["sb_max_sticks"] = size(&ExperimentConfig::sb_max_sticks);
    t["tau"] = size(&ExperimentConfig::tau);
    t["topk"] = size(&ExperimentConfig::topk);
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_u64(k, v);
    };
    t["out"] = str(&ExperimentConfig::out);
    t["level"] = dbl(&ExperimentConfig::level);
    t["n_perm"] = size(&ExperimentConfig::n_perm);
    t["f_a"] = dbl(&ExperimentConfig::f_a);
    t["f_d"] = dbl(&ExperimentConfig::f_d);
    t["jump_ck"] = dbl(&ExperimentConfig::jump_ck);
    t["y_min"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.y_min = parse_double(k, v);
    };
    t["y_max"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.y_max = parse_double(k, v);
    };
    t["y_points"] = size(&ExperimentConfig::y_points);
    t["input"] = str(&ExperimentConfig::input);
    t["threads"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.threads = static_cast<unsigned>(parse_u64(k, v));
    };
    return t;
  }();
  return table;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

unsigned ExperimentConfig::resolved_threads() const {
  return threads != 0 ? threads : default_workers();
}

IncrementLaw ExperimentConfig::increment_law() const {
  try {
    if (law == "gaussian") return IncrementLaw::gaussian(law_mu, law_sigma);
    if (law == "lognormal") return IncrementLaw::lognormal_weight(law_mu, law_sigma);
    if (law == "uniform") return IncrementLaw::uniform(law_a, law_b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("increment law: ") + e.what());
  }
  throw ConfigError("unknown increment law '" + law + "' (gaussian|lognormal|uniform)");
}

double ExperimentConfig::resolved_y_min() const { return y_min.value_or(-5.0); }

double ExperimentConfig::resolved_y_max() const {
  if (y_max) return *y_max;
  return v_beta(increment_law(), beta) / beta * static_cast<double>(tau) + 10.0;
}

void ExperimentConfig::validate() const {
  check(kind == "pd" || kind == "pp" || kind == "geometric" || kind == "mixture-of-pd" ||
            kind == "custom-from-file",
        "kind must be one of pd|pp|geometric|mixture-of-pd|custom-from-file, got '" + kind +
            "'");
  check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  check(alpha2 > 0.0 && alpha2 < 1.0, "alpha2 must lie in (0,1)");
  check(oracle_alpha == 0.0 || (oracle_alpha > 0.0 && oracle_alpha < 1.0),
        "oracle_alpha must be 0 (same as alpha) or lie in (0,1)");
  check(rho > 0.0, "rho must be positive");
  check(beta > 0.0, "beta must be positive");
  increment_law();
  check(replicas >= 1, "replicas must be at least 1");
  check(trunc_n >= 2, "trunc_n must be at least 2");
  check(sb_top >= 1, "sb_top must be at least 1");
  check(sb_max_sticks >= sb_top, "sb_max_sticks must be at least sb_top");
  check(level > 0.0 && level < 1.0, "level must lie in (0,1)");
  check(n_perm >= 199, "n_perm must be at least 199");
  check(f_a >= 0.0, "f_a must be nonnegative");
  check(f_d > 0.0, "f_d must be positive");
  check(y_points >= 2, "y_points must be at least 2");
  check(resolved_y_min() < resolved_y_max(), "y_min must be below y_max");
  check(!out.empty(), "out must name a directory");
  if (kind == "custom-from-file") check(!input.empty(), "custom-from-file needs input");
  const std::size_t k = resolved_topk();
  if (is_gap_kind()) {
    check(k + 1 <= trunc_n, "top-k gaps need trunc_n >= topk + 1");
  } else if (kind != "custom-from-file") {
    check(k <= trunc_n, "topk must not exceed trunc_n");
  }
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

ExperimentConfig resolve_config(const KeyValues& values) {
  ExperimentConfig config;
  for (const auto& [key, value] : values) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto line = [&](const char* key, const std::string& value) {
    os << key << " = " << value << '\n';
  };
  line("kind", c.kind);
  line("alpha", format_double(c.alpha));
  line("alpha2", format_double(c.alpha2));
  line("oracle_alpha", format_double(c.resolved_oracle_alpha()));
  line("rho", format_double(c.rho));
  line("beta", format_double(c.beta));
  line("law", c.law);
  line("law_mu", format_double(c.law_mu));
  line("law_sigma", format_double(c.law_sigma));
  line("law_a", format_double(c.law_a));
  line("law_b", format_double(c.law_b));
  line("replicas", std::to_string(c.replicas));
  line("trunc_n", std::to_string(c.trunc_n));
  line("sb_top", std::to_string(c.sb_top));
  line("sb_max_sticks", std::to_string(c.sb_max_sticks));
  line("tau", std::to_string(c.tau));
  line("topk", std::to_string(c.resolved_topk()));
  line("seed", c.seed ? std::to_string(*c.seed) : std::string("<unset>"));
  line("out", c.out);
  line("level", format_double(c.level));
  line("n_perm", std::to_string(c.n_perm));
  line("f_a", format_double(c.f_a));
  line("f_d", format_double(c.f_d));
  line("jump_ck", format_double(c.jump_ck));
  line("y_min", format_double(c.resolved_y_min()));
  line("y_max", format_double(c.resolved_y_max()));
  line("y_points", std::to_string(c.y_points));
  line("input", c.input);
  // Thread count never changes results, so it is echoed but not resolved.
  line("threads", std::to_string(c.threads));
  return os.str();
}

}  // namespace quasistat::cli
