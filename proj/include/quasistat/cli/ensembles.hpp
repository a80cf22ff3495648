#pragma once

// Replica ensembles drawn from an ExperimentConfig, their top-k projections,
// and the CSV layout shared by every subcommand.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quasistat/cli/config.hpp"
#include "quasistat/pointproc.hpp"
#include "quasistat/stattest.hpp"

namespace quasistat::cli {

/// Stream tags under the master seed. Replica r of a purpose uses
/// make_stream(seed, tag, r).
enum StreamTag : std::uint64_t {
  kTagBefore = 1,
  kTagAfter = 2,
  kTagEvolve = 3,
  kTagJump = 4,
  kTagPermutation = 5,
  kTagOracleStick = 6,
  kTagOraclePp = 7,
};

/// Partitions for the mass kinds (pd, geometric, mixture-of-pd). Replica r
/// draws only from stream (tag, r).
std::vector<MassPartition> sample_partitions(const ExperimentConfig& config,
                                             std::uint64_t tag, std::size_t count);

/// Exponential-intensity configurations (kind pp) of trunc_n points.
std::vector<PointConfiguration> sample_configs(const ExperimentConfig& config,
                                               std::uint64_t tag, std::size_t count);

/// xi_i = 2^{-i} for i = 1..n, tail 2^{-n}.
MassPartition geometric_partition(std::size_t n);

/// Top-k masses per replica; missing coordinates are zero.
SampleMatrix top_masses(std::span<const MassPartition> partitions, std::size_t k);
SampleMatrix top_gaps(std::span<const PointConfiguration> configs, std::size_t k);

/// One replica per row with header prefix_1..prefix_k, values printed with
/// 17 significant digits. Throws std::runtime_error if the file cannot be
/// written.
void write_csv(const std::string& path, const std::string& prefix, const SampleMatrix& m);
std::string to_csv(const std::string& prefix, const SampleMatrix& m);

/// Rows of masses (header line skipped when it is not numeric). Each row is
/// sorted decreasingly; zeros are dropped and the tail is 1 - sum.
std::vector<MassPartition> read_partitions_csv(const std::string& path);

}  // namespace quasistat::cli
