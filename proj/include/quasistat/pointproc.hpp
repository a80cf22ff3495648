#pragma once

// Exact top-N samplers for exponential-intensity Poisson processes and
// power-law Poisson-Kingman partitions, and the maps between point
// configurations and mass-partitions.

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "quasistat/random.hpp"

namespace quasistat {

/// Decreasing finite truncation of an infinite point configuration.
///
/// `tail_weight` estimates sum_{i>N} exp(beta * X_i) over the points that
/// were not tracked. It may be +infinity when the process is not summable
/// at this beta (e.g. an exponential-intensity process with rho >= beta).
class PointConfiguration {
 public:
  PointConfiguration() = default;
  explicit PointConfiguration(std::vector<double> points, double beta = 1.0,
                              double tail_weight = 0.0);

  std::span<const double> points() const { return points_; }
  double beta() const { return beta_; }
  double tail_weight() const { return tail_weight_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double leader() const { return points_.front(); }

 private:
  std::vector<double> points_;
  double beta_ = 1.0;
  double tail_weight_ = 0.0;
};

/// Non-increasing masses in (0, 1] plus the mass of untracked indices.
/// masses + tail_mass sum to 1 within kMassTolerance.
class MassPartition {
 public:
  static constexpr double kMassTolerance = 1e-12;

  MassPartition() = default;
  explicit MassPartition(std::vector<double> masses, double tail_mass = 0.0);

  std::span<const double> masses() const { return masses_; }
  double tail_mass() const { return tail_mass_; }
  std::size_t size() const { return masses_.size(); }
  double operator[](std::size_t i) const { return masses_[i]; }

 private:
  std::vector<double> masses_;
  double tail_mass_ = 0.0;
};

/// Strictly increasing unit-rate Poisson arrival times Gamma_1 < ... < Gamma_N.
class ArrivalTimes {
 public:
  explicit ArrivalTimes(std::vector<double> gammas);

  std::span<const double> gammas() const { return gammas_; }
  std::size_t size() const { return gammas_.size(); }
  double last() const { return gammas_.back(); }

 private:
  std::vector<double> gammas_;
};

struct PowerLawIntensity {
  double alpha;  // Lambda(ds) = alpha s^{-alpha-1} ds, alpha in (0,1)
};

struct ExponentialIntensity {
  double rho;  // rho e^{-rho y} dy, rho > 0
};

/// Intensity family of the driving Poisson process.
class LevyMeasureSpec {
 public:
  static LevyMeasureSpec power_law(double alpha);
  static LevyMeasureSpec exponential_intensity(double rho);

  const std::variant<PowerLawIntensity, ExponentialIntensity>& kind() const {
    return kind_;
  }
  /// Expected number of points at or above `level`.
  double mean_count_above(double level) const;

 private:
  explicit LevyMeasureSpec(std::variant<PowerLawIntensity, ExponentialIntensity> k)
      : kind_(k) {}
  std::variant<PowerLawIntensity, ExponentialIntensity> kind_;
};

/// Cumulative sums of the given exponential draws.
ArrivalTimes arrivals_from_exponentials(std::span<const double> draws);
ArrivalTimes sample_gamma_arrivals(std::size_t n, Rng& rng);

/// X_i = -ln(Gamma_i)/rho. The tail weight is the conditional expectation of
/// sum_{j>N} Gamma_j^{-beta/rho} given Gamma_N, infinite when beta <= rho.
PointConfiguration pp_exponential_from_arrivals(const ArrivalTimes& arrivals,
                                                double rho, double beta = 1.0);
PointConfiguration sample_pp_exponential(double rho, std::size_t n, Rng& rng,
                                         double beta = 1.0);

struct PowerLawAtoms {
  std::vector<double> atoms;  // eta_i = Gamma_i^{-1/alpha}, decreasing
  double gamma_last;          // Gamma_N of the generating arrivals
};

PowerLawAtoms powerlaw_atoms_from_arrivals(const ArrivalTimes& arrivals,
                                           double alpha);
PowerLawAtoms sample_pk_powerlaw(double alpha, std::size_t n, Rng& rng);

/// E[ sum_{j>N} Gamma_j^{-1/alpha} | Gamma_N ] = alpha Gamma_N^{(alpha-1)/alpha} / (1-alpha).
double powerlaw_tail_correction(double alpha, double gamma_last);

/// masses = atoms / (S + tail_sum), tail_mass = tail_sum / (S + tail_sum).
MassPartition normalize_atoms(std::span<const double> atoms, double tail_sum);
MassPartition normalize_to_mass_partition(std::span<const double> atoms,
                                          double alpha, double gamma_last);

/// Largest n pieces of the stick products V_i prod_{j<i}(1 - V_j), in the
/// order the sticks are given. Stops early once the unallocated remainder is
/// smaller than the n-th largest piece, since no later piece can enter.
MassPartition partition_from_sticks(std::span<const double> sticks,
                                    std::size_t n);

/// PD(alpha, 0) via residual allocation V_i ~ Beta(1-alpha, i*alpha).
/// Sticks are drawn until the top n is settled or `max_sticks` is reached.
MassPartition sample_pd_stickbreaking(double alpha, std::size_t n, Rng& rng,
                                      std::size_t max_sticks = 200000);

/// xi_i = e^{beta X_i} / (sum_j e^{beta X_j} + tail_weight), computed with
/// the maximum subtracted. Throws std::domain_error for an infinite tail.
MassPartition mass_partition_from_config(const PointConfiguration& config);

/// X_i = ln xi_i with beta = 1 and tail_weight = tail_mass.
PointConfiguration config_from_mass_partition(const MassPartition& partition);

}  // namespace quasistat
