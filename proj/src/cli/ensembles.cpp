#include "quasistat/cli/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "quasistat/analysis.hpp"
#include "quasistat/random.hpp"

namespace quasistat::cli {

namespace {

MassPartition sample_one_pd(double alpha, std::size_t n, Rng& rng) {
  const auto atoms = sample_pk_powerlaw(alpha, n, rng);
  return normalize_to_mass_partition(atoms.atoms, alpha, atoms.gamma_last);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MassPartition geometric_partition(std::size_t n) {
  std::vector<double> masses(n);
  double m = 1.0;
  for (auto& x : masses) {
    m *= 0.5;
    x = m;
  }
  return MassPartition(std::move(masses), m);
}

std::vector<MassPartition> sample_partitions(const ExperimentConfig& config,
                                             std::uint64_t tag, std::size_t count) {
  const std::uint64_t seed = config.seed.value();
  std::vector<MassPartition> out(count);
  if (config.kind == "geometric") {
    std::fill(out.begin(), out.end(), geometric_partition(config.trunc_n));
    return out;
  }
  if (config.kind != "pd" && config.kind != "mixture-of-pd") {
    throw ConfigError("kind '" + config.kind + "' does not generate mass-partitions");
  }
  const bool mixture = config.kind == "mixture-of-pd";
  parallel_for(count, config.resolved_threads(), [&](std::size_t r) {
    Rng rng = make_stream(seed, tag, r);
    double alpha = config.alpha;
    if (mixture && std::bernoulli_distribution(0.5)(rng)) alpha = config.alpha2;
    out[r] = sample_one_pd(alpha, config.trunc_n, rng);
  });
  return out;
}

std::vector<PointConfiguration> sample_configs(const ExperimentConfig& config,
                                               std::uint64_t tag, std::size_t count) {
  if (config.kind != "pp") {
    throw ConfigError("kind '" + config.kind + "' does not generate point configurations");
  }
  const std::uint64_t seed = config.seed.value();
  std::vector<PointConfiguration> out(count);
  parallel_for(count, config.resolved_threads(), [&](std::size_t r) {
    Rng rng = make_stream(seed, tag, r);
    out[r] = sample_pp_exponential(config.rho, config.trunc_n, rng, config.beta);
  });
  return out;
}

SampleMatrix top_masses(std::span<const MassPartition> partitions, std::size_t k) {
  std::vector<double> values(partitions.size() * k, 0.0);
  for (std::size_t r = 0; r < partitions.size(); ++r) {
    const auto m = partitions[r].masses();
    std::copy_n(m.begin(), std::min(k, m.size()), values.begin() + static_cast<long>(r * k));
  }
  return SampleMatrix(partitions.size(), k, std::move(values));
}

SampleMatrix top_gaps(std::span<const PointConfiguration> configs, std::size_t k) {
  std::vector<double> values;
  values.reserve(configs.size() * k);
  for (const auto& c : configs) {
    const auto g = gap_vector(c, k);
    values.insert(values.end(), g.begin(), g.end());
  }
  return SampleMatrix(configs.size(), k, std::move(values));
}

std::string to_csv(const std::string& prefix, const SampleMatrix& m) {
  std::string out;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (c) out += ',';
    out += prefix + "_" + std::to_string(c + 1);
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::string& prefix, const SampleMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << to_csv(prefix, m);
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<MassPartition> read_partitions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read input '" + path + "'");
  std::vector<MassPartition> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> masses;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) numeric = false;
        masses.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (lineno == 1) continue;  // header
      throw ConfigError(path + ":" + std::to_string(lineno) + ": non-numeric row");
    }
    std::sort(masses.begin(), masses.end(), std::greater<>());
    while (!masses.empty() && masses.back() == 0.0) masses.pop_back();
    const double sum = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (masses.empty() || masses.back() < 0.0 || sum > 1.0 + 1e-12) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": masses must be nonnegative with total at most 1");
    }
    out.emplace_back(std::move(masses), std::max(0.0, 1.0 - sum));
  }
  if (out.empty()) throw ConfigError("input '" + path + "' holds no partitions");
  return out;
}

}  // namespace quasistat::cli
