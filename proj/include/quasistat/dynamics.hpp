#pragma once

// Additive evolution of point configurations, multiplicative reshuffling of
// mass-partitions, the leader and tail shifts, and the trajectory driver.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "quasistat/pointproc.hpp"
#include "quasistat/random.hpp"

namespace quasistat {

struct GaussianIncrement {
  double mu;
  double sigma;
};

/// Increment chosen so that the weight W = e^{beta h} is lognormal with
/// ln W ~ Normal(log_mean, log_sd^2); h itself is ln W / beta.
struct LogNormalWeight {
  double log_mean;
  double log_sd;
};

struct UniformIncrement {
  double a;
  double b;
};

struct DegenerateIncrement {
  double c;
};

/// Law of the i.i.d. increments h. Every kind has a density and finite
/// exponential moments of all orders.
class IncrementLaw {
 public:
  using Kind = std::variant<GaussianIncrement, LogNormalWeight, UniformIncrement,
                            DegenerateIncrement>;

  static IncrementLaw gaussian(double mu, double sigma);
  static IncrementLaw lognormal_weight(double log_mean, double log_sd);
  static IncrementLaw uniform(double a, double b);
  /// Point mass at c. Only for deterministic tests of the evolution maps;
  /// it has no density.
  static IncrementLaw degenerate(double c);

  const Kind& kind() const { return kind_; }
  std::string describe() const;

  double sample(double beta, Rng& rng) const;
  /// Fills `out` with i.i.d. draws.
  void sample_into(std::span<double> out, double beta, Rng& rng) const;
  /// log E[e^{lambda h}] for the increment used at exponent beta.
  double log_mgf(double lambda, double beta) const;
  double mean(double beta) const;

  /// Mean and standard deviation of S(tau) = h(1) + ... + h(tau) when it is
  /// exactly Gaussian.
  struct NormalParams {
    double mean;
    double sd;
  };
  std::optional<NormalParams> gaussian_sum(double beta, std::size_t tau) const;

 private:
  explicit IncrementLaw(Kind k) : kind_(k) {}
  Kind kind_;
};

/// (X_i + h_i) re-sorted decreasingly, ties broken by original index. The
/// tail weight is multiplied by `tail_factor`.
PointConfiguration evolve_additive_with(const PointConfiguration& config,
                                        std::span<const double> increments,
                                        double tail_factor);
/// Draws h_i from the law and advances the tail weight by E[e^{beta h}].
PointConfiguration evolve_additive(const PointConfiguration& config,
                                   const IncrementLaw& law, Rng& rng);

/// (xi_i W_i) / (sum_j xi_j W_j + tail_mass * tail_factor), re-sorted.
MassPartition evolve_multiplicative_with(const MassPartition& partition,
                                         std::span<const double> weights,
                                         double tail_factor);
/// W_i = e^{beta h_i}; the tail mass is advanced by E[W].
MassPartition evolve_multiplicative(const MassPartition& partition,
                                    const IncrementLaw& law, double beta, Rng& rng);

/// X_i -> X_i - X_1.
PointConfiguration shift_leader(const PointConfiguration& config);
/// X_i -> X_i - (1/beta) log(sum_i e^{beta X_i} + tail_weight), so that the
/// shifted weights including the rescaled tail sum to one.
PointConfiguration shift_tail(const PointConfiguration& config);

enum class ShiftPolicy { none, leader, tail };

std::string_view to_string(ShiftPolicy policy);
ShiftPolicy parse_shift_policy(std::string_view name);

template <class State>
struct Trajectory {
  std::size_t tau = 0;
  std::vector<State> snapshots;  // tau + 1 entries, the start first
  ShiftPolicy shift_policy = ShiftPolicy::none;

  const State& final_state() const { return snapshots.back(); }
};

Trajectory<PointConfiguration> run_trajectory(const PointConfiguration& start,
                                              const IncrementLaw& law,
                                              std::size_t tau, ShiftPolicy policy,
                                              Rng& rng);

/// Mass-partition trajectories are already normalized: `none` and `tail`
/// are accepted and leave the state unchanged, `leader` is rejected.
Trajectory<MassPartition> run_trajectory(const MassPartition& start,
                                         const IncrementLaw& law, double beta,
                                         std::size_t tau, ShiftPolicy policy,
                                         Rng& rng);

}  // namespace quasistat
