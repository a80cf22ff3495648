#include "quasistat/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace quasistat {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(
        "alpha must lie in (0,1); the atoms are not summable otherwise (got " +
        std::to_string(alpha) + ")");
  }
}

}  // namespace

PointConfiguration::PointConfiguration(std::vector<double> points, double beta,
                                       double tail_weight)
    : points_(std::move(points)), beta_(beta), tail_weight_(tail_weight) {
  require(beta_ > 0.0 && std::isfinite(beta_), "beta must be positive");
  require(tail_weight_ >= 0.0, "tail weight must be nonnegative");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require(std::isfinite(points_[i]), "configuration points must be finite");
    if (i > 0) require(points_[i] <= points_[i - 1], "points must be non-increasing");
  }
}

MassPartition::MassPartition(std::vector<double> masses, double tail_mass)
    : masses_(std::move(masses)), tail_mass_(tail_mass) {
  require(tail_mass_ >= 0.0 && std::isfinite(tail_mass_),
          "tail mass must be finite and nonnegative");
  double total = tail_mass_;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    require(masses_[i] > 0.0 && masses_[i] <= 1.0, "masses must lie in (0,1]");
    if (i > 0) require(masses_[i] <= masses_[i - 1], "masses must be non-increasing");
    total += masses_[i];
  }
  require(std::abs(total - 1.0) <= kMassTolerance,
          "masses and tail must sum to one");
}

ArrivalTimes::ArrivalTimes(std::vector<double> gammas) : gammas_(std::move(gammas)) {
  require(!gammas_.empty(), "arrival times need at least one entry");
  require(gammas_.front() > 0.0, "first arrival must be positive");
  for (std::size_t i = 1; i < gammas_.size(); ++i) {
    require(gammas_[i] > gammas_[i - 1], "arrival times must be strictly increasing");
  }
}

LevyMeasureSpec LevyMeasureSpec::power_law(double alpha) {
  require_alpha(alpha);
  return LevyMeasureSpec(PowerLawIntensity{alpha});
}

LevyMeasureSpec LevyMeasureSpec::exponential_intensity(double rho) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
  return LevyMeasureSpec(ExponentialIntensity{rho});
}

double LevyMeasureSpec::mean_count_above(double level) const {
  if (const auto* p = std::get_if<PowerLawIntensity>(&kind_)) {
    require(level > 0.0, "power-law levels must be positive");
    return std::pow(level, -p->alpha);
  }
  return std::exp(-std::get<ExponentialIntensity>(kind_).rho * level);
}

ArrivalTimes arrivals_from_exponentials(std::span<const double> draws) {
  require(!draws.empty(), "n must be at least 1");
  std::vector<double> gammas(draws.size());
  std::partial_sum(draws.begin(), draws.end(), gammas.begin());
  return ArrivalTimes(std::move(gammas));
}

ArrivalTimes sample_gamma_arrivals(std::size_t n, Rng& rng) {
  require(n >= 1, "n must be at least 1");
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> gammas(n);
  double acc = 0.0;
  for (auto& g : gammas) {
    double e = unit(rng);
    // A zero draw would produce a tie; it has probability ~2^-53 per draw.
    while (e <= 0.0) e = unit(rng);
    acc += e;
    g = acc;
  }
  return ArrivalTimes(std::move(gammas));
}

PointConfiguration pp_exponential_from_arrivals(const ArrivalTimes& arrivals,
                                                double rho, double beta) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
  require(beta > 0.0, "beta must be positive");
  std::vector<double> points;
  points.reserve(arrivals.size());
  for (double g : arrivals.gammas()) points.push_back(-std::log(g) / rho);

  const double exponent = beta / rho;
  double tail = std::numeric_limits<double>::infinity();
  if (exponent > 1.0) {
    // integral_{Gamma_N}^inf t^{-beta/rho} dt
    tail = std::pow(arrivals.last(), 1.0 - exponent) / (exponent - 1.0);
  }
  return PointConfiguration(std::move(points), beta, tail);
}

PointConfiguration sample_pp_exponential(double rho, std::size_t n, Rng& rng,
                                         double beta) {
  return pp_exponential_from_arrivals(sample_gamma_arrivals(n, rng), rho, beta);
}

PowerLawAtoms powerlaw_atoms_from_arrivals(const ArrivalTimes& arrivals,
                                           double alpha) {
  require_alpha(alpha);
  PowerLawAtoms out;
  out.atoms.reserve(arrivals.size());
  for (double g : arrivals.gammas()) out.atoms.push_back(std::pow(g, -1.0 / alpha));
  out.gamma_last = arrivals.last();
  return out;
}

PowerLawAtoms sample_pk_powerlaw(double alpha, std::size_t n, Rng& rng) {
  require_alpha(alpha);
  return powerlaw_atoms_from_arrivals(sample_gamma_arrivals(n, rng), alpha);
}

double powerlaw_tail_correction(double alpha, double gamma_last) {
  require_alpha(alpha);
  require(gamma_last > 0.0, "Gamma_N must be positive");
  return alpha * std::pow(gamma_last, (alpha - 1.0) / alpha) / (1.0 - alpha);
}

MassPartition normalize_atoms(std::span<const double> atoms, double tail_sum) {
  require(!atoms.empty(), "cannot normalize an empty atom sequence");
  require(tail_sum >= 0.0 && std::isfinite(tail_sum), "tail sum must be finite");
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    require(atoms[i] > 0.0, "atoms must be positive");
    if (i > 0) require(atoms[i] <= atoms[i - 1], "atoms must be decreasing");
    sum += atoms[i];
  }
  const double total = sum + tail_sum;
  std::vector<double> masses;
  masses.reserve(atoms.size());
  for (double a : atoms) {
    const double m = a / total;
    if (m > 0.0) masses.push_back(std::min(m, 1.0));
  }
  return MassPartition(std::move(masses), tail_sum / total);
}

MassPartition normalize_to_mass_partition(std::span<const double> atoms,
                                          double alpha, double gamma_last) {
  return normalize_atoms(atoms, powerlaw_tail_correction(alpha, gamma_last));
}

namespace {

// Keeps the n largest pieces of a size-biased stick sequence.
class TopPieces {
 public:
  explicit TopPieces(std::size_t n) : n_(n) {}

  void offer(double piece) {
    if (!(piece > 0.0)) return;
    if (heap_.size() < n_) {
      heap_.push(piece);
    } else if (piece > heap_.top()) {
      heap_.pop();
      heap_.push(piece);
    }
  }

  // No remaining piece can displace the current top n.
  bool settled(double remainder) const {
    if (remainder <= 0.0) return true;
    return heap_.size() == n_ && remainder < heap_.top();
  }

  MassPartition finish() {
    std::vector<double> masses;
    masses.reserve(heap_.size());
    while (!heap_.empty()) {
      masses.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(masses.begin(), masses.end());
    const double stored = std::accumulate(masses.begin(), masses.end(), 0.0);
    return MassPartition(std::move(masses), std::max(0.0, 1.0 - stored));
  }

 private:
  std::size_t n_;
  std::priority_queue<double, std::vector<double>, std::greater<>> heap_;
};

}  // namespace

MassPartition partition_from_sticks(std::span<const double> sticks, std::size_t n) {
  require(n >= 1, "n must be at least 1");
  TopPieces top(n);
  double remainder = 1.0;
  for (double v : sticks) {
    require(v >= 0.0 && v <= 1.0, "stick fractions must lie in [0,1]");
    top.offer(v * remainder);
    remainder *= 1.0 - v;
    if (top.settled(remainder)) break;
  }
  return top.finish();
}

MassPartition sample_pd_stickbreaking(double alpha, std::size_t n, Rng& rng,
                                      std::size_t max_sticks) {
  require_alpha(alpha);
  require(n >= 1, "n must be at least 1");
  std::gamma_distribution<double> numerator(1.0 - alpha, 1.0);
  TopPieces top(n);
  double remainder = 1.0;
  for (std::size_t i = 1; i <= max_sticks; ++i) {
    std::gamma_distribution<double> denominator(static_cast<double>(i) * alpha, 1.0);
    const double x = numerator(rng);
    const double y = denominator(rng);
    const double v = (x + y) > 0.0 ? x / (x + y) : 0.0;
    top.offer(v * remainder);
    remainder *= 1.0 - v;
    if (top.settled(remainder)) break;
  }
  return top.finish();
}

MassPartition mass_partition_from_config(const PointConfiguration& config) {
  require(!config.empty(), "configuration is empty");
  if (!std::isfinite(config.tail_weight())) {
    throw std::domain_error(
        "configuration is not summable at its beta (infinite tail weight)");
  }
  const double beta = config.beta();
  const double top = config.leader();
  std::vector<double> weights;
  weights.reserve(config.size());
  double sum = 0.0;
  for (double x : config.points()) {
    const double w = std::exp(beta * (x - top));
    weights.push_back(w);
    sum += w;
  }
  // tail_weight * e^{-beta * top}, kept in log space until the end.
  double scaled_tail = 0.0;
  if (config.tail_weight() > 0.0) {
    scaled_tail = std::exp(std::log(config.tail_weight()) - beta * top);
  }
  const double total = sum + scaled_tail;
  std::vector<double> masses;
  masses.reserve(weights.size());
  for (double w : weights) {
    const double m = w / total;
    if (m > 0.0) masses.push_back(std::min(m, 1.0));
  }
  return MassPartition(std::move(masses), scaled_tail / total);
}

PointConfiguration config_from_mass_partition(const MassPartition& partition) {
  require(partition.size() > 0, "partition has no tracked masses");
  std::vector<double> points;
  points.reserve(partition.size());
  for (double m : partition.masses()) {
    require(m > 0.0, "zero masses have no logarithm");
    points.push_back(std::log(m));
  }
  return PointConfiguration(std::move(points), 1.0, partition.tail_mass());
}

}  // namespace quasistat
