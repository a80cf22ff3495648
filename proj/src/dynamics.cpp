#include "quasistat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace quasistat {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Indices of `values` in decreasing order of value; stable, so ties keep the
// original index order.
std::vector<std::size_t> decreasing_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

IncrementLaw IncrementLaw::gaussian(double mu, double sigma) {
  require(std::isfinite(mu), "gaussian mean must be finite");
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian sigma must be positive");
  return IncrementLaw(GaussianIncrement{mu, sigma});
}

IncrementLaw IncrementLaw::lognormal_weight(double log_mean, double log_sd) {
  require(std::isfinite(log_mean), "lognormal log-mean must be finite");
  require(log_sd > 0.0 && std::isfinite(log_sd), "lognormal log-sd must be positive");
  return IncrementLaw(LogNormalWeight{log_mean, log_sd});
}

IncrementLaw IncrementLaw::uniform(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform needs a < b");
  return IncrementLaw(UniformIncrement{a, b});
}

IncrementLaw IncrementLaw::degenerate(double c) {
  require(std::isfinite(c), "degenerate increment must be finite");
  return IncrementLaw(DegenerateIncrement{c});
}

std::string IncrementLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const GaussianIncrement& g) {
                   os << "gaussian(mu=" << g.mu << ", sigma=" << g.sigma << ")";
                 },
                 [&](const LogNormalWeight& l) {
                   os << "lognormal_weight(log_mean=" << l.log_mean
                      << ", log_sd=" << l.log_sd << ")";
                 },
                 [&](const UniformIncrement& u) {
                   os << "uniform(a=" << u.a << ", b=" << u.b << ")";
                 },
                 [&](const DegenerateIncrement& d) { os << "degenerate(c=" << d.c << ")"; },
             },
             kind_);
  return os.str();
}

double IncrementLaw::sample(double beta, Rng& rng) const {
  return std::visit(
      Overloaded{
          [&](const GaussianIncrement& g) {
            return std::normal_distribution<double>(g.mu, g.sigma)(rng);
          },
          [&](const LogNormalWeight& l) {
            require(beta > 0.0, "lognormal weights need beta > 0");
            return std::normal_distribution<double>(l.log_mean, l.log_sd)(rng) / beta;
          },
          [&](const UniformIncrement& u) {
            return std::uniform_real_distribution<double>(u.a, u.b)(rng);
          },
          [&](const DegenerateIncrement& d) { return d.c; },
      },
      kind_);
}

void IncrementLaw::sample_into(std::span<double> out, double beta, Rng& rng) const {
  std::visit(
      Overloaded{
          [&](const GaussianIncrement& g) {
            std::normal_distribution<double> dist(g.mu, g.sigma);
            for (auto& x : out) x = dist(rng);
          },
          [&](const LogNormalWeight& l) {
            require(beta > 0.0, "lognormal weights need beta > 0");
            std::normal_distribution<double> dist(l.log_mean, l.log_sd);
            for (auto& x : out) x = dist(rng) / beta;
          },
          [&](const UniformIncrement& u) {
            std::uniform_real_distribution<double> dist(u.a, u.b);
            for (auto& x : out) x = dist(rng);
          },
          [&](const DegenerateIncrement& d) { std::fill(out.begin(), out.end(), d.c); },
      },
      kind_);
}

double IncrementLaw::log_mgf(double lambda, double beta) const {
  if (lambda == 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const GaussianIncrement& g) {
            return lambda * g.mu + 0.5 * lambda * lambda * g.sigma * g.sigma;
          },
          [&](const LogNormalWeight& l) {
            require(beta > 0.0, "lognormal weights need beta > 0");
            const double m = l.log_mean / beta;
            const double s = l.log_sd / beta;
            return lambda * m + 0.5 * lambda * lambda * s * s;
          },
          [&](const UniformIncrement& u) {
            // log((e^{lambda b} - e^{lambda a}) / (lambda (b - a)))
            const double width = lambda * (u.b - u.a);
            return lambda * u.a + std::log(std::expm1(width) / width);
          },
          [&](const DegenerateIncrement& d) { return lambda * d.c; },
      },
      kind_);
}

double IncrementLaw::mean(double beta) const {
  return std::visit(
      Overloaded{
          [](const GaussianIncrement& g) { return g.mu; },
          [&](const LogNormalWeight& l) { return l.log_mean / beta; },
          [](const UniformIncrement& u) { return 0.5 * (u.a + u.b); },
          [](const DegenerateIncrement& d) { return d.c; },
      },
      kind_);
}

std::optional<IncrementLaw::NormalParams> IncrementLaw::gaussian_sum(
    double beta, std::size_t tau) const {
  const double t = static_cast<double>(tau);
  if (const auto* g = std::get_if<GaussianIncrement>(&kind_)) {
    return NormalParams{t * g->mu, std::sqrt(t) * g->sigma};
  }
  if (const auto* l = std::get_if<LogNormalWeight>(&kind_)) {
    require(beta > 0.0, "lognormal weights need beta > 0");
    return NormalParams{t * l->log_mean / beta, std::sqrt(t) * l->log_sd / beta};
  }
  if (const auto* d = std::get_if<DegenerateIncrement>(&kind_)) {
    return NormalParams{t * d->c, 0.0};
  }
  return std::nullopt;
}

PointConfiguration evolve_additive_with(const PointConfiguration& config,
                                        std::span<const double> increments,
                                        double tail_factor) {
  require(increments.size() == config.size(), "one increment per point is required");
  std::vector<double> moved(config.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    moved[i] = config.points()[i] + increments[i];
    if (!std::isfinite(moved[i])) {
      throw std::domain_error("non-finite increment draw; check the increment law");
    }
  }
  std::vector<double> sorted(moved.size());
  const auto order = decreasing_order(moved);
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = moved[order[i]];
  return PointConfiguration(std::move(sorted), config.beta(),
                            config.tail_weight() * tail_factor);
}

PointConfiguration evolve_additive(const PointConfiguration& config,
                                   const IncrementLaw& law, Rng& rng) {
  std::vector<double> h(config.size());
  law.sample_into(h, config.beta(), rng);
  const double tail_factor = std::exp(law.log_mgf(config.beta(), config.beta()));
  return evolve_additive_with(config, h, tail_factor);
}

MassPartition evolve_multiplicative_with(const MassPartition& partition,
                                         std::span<const double> weights,
                                         double tail_factor) {
  require(weights.size() == partition.size(), "one weight per mass is required");
  require(tail_factor >= 0.0 && std::isfinite(tail_factor), "tail factor must be finite");
  std::vector<double> scaled(partition.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    require(weights[i] >= 0.0, "weights must be nonnegative");
    scaled[i] = partition[i] * weights[i];
    if (!std::isfinite(scaled[i])) throw std::domain_error("weight overflow");
    sum += scaled[i];
  }
  const double tail = partition.tail_mass() * tail_factor;
  const double total = sum + tail;
  if (!(total > 0.0)) {
    throw std::domain_error("all weights underflowed to zero; check the law and beta");
  }
  const auto order = decreasing_order(scaled);
  std::vector<double> masses;
  masses.reserve(scaled.size());
  for (std::size_t i : order) {
    const double m = scaled[i] / total;
    if (m > 0.0) masses.push_back(std::min(m, 1.0));
  }
  return MassPartition(std::move(masses), tail / total);
}

MassPartition evolve_multiplicative(const MassPartition& partition,
                                    const IncrementLaw& law, double beta, Rng& rng) {
  require(beta > 0.0, "beta must be positive");
  std::vector<double> w(partition.size());
  law.sample_into(w, beta, rng);
  for (auto& x : w) x = std::exp(beta * x);
  return evolve_multiplicative_with(partition, w, std::exp(law.log_mgf(beta, beta)));
}

PointConfiguration shift_leader(const PointConfiguration& config) {
  if (config.empty()) return config;
  const double top = config.leader();
  std::vector<double> shifted(config.points().begin(), config.points().end());
  for (auto& x : shifted) x -= top;
  // e^{beta (X - c)} scales the tail by e^{-beta c}.
  const double tail = config.tail_weight() > 0.0
                          ? std::exp(std::log(config.tail_weight()) + config.beta() * top)
                          : 0.0;
  return PointConfiguration(std::move(shifted), config.beta(), tail);
}

PointConfiguration shift_tail(const PointConfiguration& config) {
  require(!config.empty(), "configuration is empty");
  if (!std::isfinite(config.tail_weight())) {
    throw std::domain_error("tail shift undefined for an infinite tail weight");
  }
  const double beta = config.beta();
  const double top = config.leader();
  double sum = 0.0;
  for (double x : config.points()) sum += std::exp(beta * (x - top));
  double log_total = beta * top + std::log(sum);
  if (config.tail_weight() > 0.0) {
    const double log_tail = std::log(config.tail_weight());
    const double hi = std::max(log_total, log_tail);
    log_total = hi + std::log(std::exp(log_total - hi) + std::exp(log_tail - hi));
  }
  const double shift = log_total / beta;
  std::vector<double> shifted(config.points().begin(), config.points().end());
  for (auto& x : shifted) x -= shift;
  const double tail = config.tail_weight() > 0.0
                          ? std::exp(std::log(config.tail_weight()) - log_total)
                          : 0.0;
  return PointConfiguration(std::move(shifted), beta, tail);
}

std::string_view to_string(ShiftPolicy policy) {
  switch (policy) {
    case ShiftPolicy::none:
      return "none";
    case ShiftPolicy::leader:
      return "leader";
    case ShiftPolicy::tail:
      return "tail";
  }
  return "none";
}

ShiftPolicy parse_shift_policy(std::string_view name) {
  if (name == "none") return ShiftPolicy::none;
  if (name == "leader") return ShiftPolicy::leader;
  if (name == "tail") return ShiftPolicy::tail;
  throw std::invalid_argument("unknown shift policy '" + std::string(name) + "'");
}

namespace {

PointConfiguration apply_shift(const PointConfiguration& c, ShiftPolicy policy) {
  switch (policy) {
    case ShiftPolicy::leader:
      return shift_leader(c);
    case ShiftPolicy::tail:
      return shift_tail(c);
    case ShiftPolicy::none:
      break;
  }
  return c;
}

}  // namespace

Trajectory<PointConfiguration> run_trajectory(const PointConfiguration& start,
                                              const IncrementLaw& law,
                                              std::size_t tau, ShiftPolicy policy,
                                              Rng& rng) {
  Trajectory<PointConfiguration> out;
  out.tau = tau;
  out.shift_policy = policy;
  out.snapshots.reserve(tau + 1);
  out.snapshots.push_back(start);
  for (std::size_t t = 0; t < tau; ++t) {
    out.snapshots.push_back(
        apply_shift(evolve_additive(out.snapshots.back(), law, rng), policy));
  }
  return out;
}

Trajectory<MassPartition> run_trajectory(const MassPartition& start,
                                         const IncrementLaw& law, double beta,
                                         std::size_t tau, ShiftPolicy policy,
                                         Rng& rng) {
  if (policy == ShiftPolicy::leader) {
    throw std::invalid_argument("leader shift does not apply to mass-partitions");
  }
  Trajectory<MassPartition> out;
  out.tau = tau;
  out.shift_policy = policy;
  out.snapshots.reserve(tau + 1);
  out.snapshots.push_back(start);
  for (std::size_t t = 0; t < tau; ++t) {
    out.snapshots.push_back(evolve_multiplicative(out.snapshots.back(), law, beta, rng));
  }
  return out;
}

}  // namespace quasistat
