#include "quasistat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace quasistat {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// P(IH_n >= x) for the sum of n independent U(0,1), using the
// alternating-sum CDF on the nearer side of the mean.
double irwin_hall_survival(std::size_t n, double x) {
  const auto nd = static_cast<long double>(n);
  if (x <= 0.0) return 1.0;
  if (x >= static_cast<double>(n)) return 0.0;
  auto cdf = [&](long double t) {
    long double sum = 0.0L;
    long double binom = 1.0L;  // C(n, k)
    long double factorial = 1.0L;
    for (std::size_t k = 1; k <= n; ++k) factorial *= static_cast<long double>(k);
    const auto top = static_cast<std::size_t>(std::floor(t));
    for (std::size_t k = 0; k <= top && k <= n; ++k) {
      const long double term = binom * std::pow(t - static_cast<long double>(k), nd);
      sum += (k % 2 == 0) ? term : -term;
      binom = binom * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
    }
    return std::clamp(sum / factorial, 0.0L, 1.0L);
  };
  const long double xl = x;
  if (xl > nd / 2) return static_cast<double>(cdf(nd - xl));
  return static_cast<double>(1.0L - cdf(xl));
}

}  // namespace

FrontProfile::FrontProfile(PointConfiguration config, IncrementLaw law, std::size_t tau)
    : config_(std::move(config)), law_(law), tau_(tau) {
  require(!config_.empty(), "front profile needs at least one point");
  if (tau_ > 0 && std::holds_alternative<UniformIncrement>(law_.kind()) &&
      tau_ > kMaxUniformTau) {
    throw std::invalid_argument("no closed-form tail for uniform increments beyond tau = " +
                                std::to_string(kMaxUniformTau));
  }
}

double FrontProfile::survival(double threshold) const {
  if (tau_ == 0) return threshold <= 0.0 ? 1.0 : 0.0;
  if (const auto normal = law_.gaussian_sum(config_.beta(), tau_)) {
    if (normal->sd == 0.0) return threshold <= normal->mean ? 1.0 : 0.0;
    return 0.5 * std::erfc((threshold - normal->mean) / (normal->sd * std::sqrt(2.0)));
  }
  const auto& u = std::get<UniformIncrement>(law_.kind());
  const double width = u.b - u.a;
  const double scaled = (threshold - static_cast<double>(tau_) * u.a) / width;
  return irwin_hall_survival(tau_, scaled);
}

double FrontProfile::operator()(double y) const {
  double total = 0.0;
  for (double x : config_.points()) total += survival(y - x);
  return total;
}

FrontProfile front_profile(const PointConfiguration& config, const IncrementLaw& law,
                           std::size_t tau) {
  return FrontProfile(config, law, tau);
}

double v_beta(const IncrementLaw& law, double beta) {
  require(beta >= 0.0, "beta must be nonnegative");
  if (beta == 0.0) return 0.0;
  return law.log_mgf(beta, beta);
}

double front_position(const FrontProfile& profile) {
  const auto& config = profile.config();
  const bool spreads =
      profile.tau() > 0 && !std::holds_alternative<DegenerateIncrement>(profile.law().kind());
  if (spreads && config.size() < 2) {
    throw std::domain_error(
        "front profile stays below 1 everywhere: a single point spread by the increments");
  }
  const double x1 = config.leader();
  const double drift =
      std::max(0.0, v_beta(profile.law(), config.beta()) / config.beta() *
                        static_cast<double>(profile.tau()));

  double lo = x1 - 10.0;
  double hi = x1 + drift + 10.0;
  constexpr int kMaxGrowth = 64;
  int grown = 0;
  for (double step = 10.0; profile(lo) < 1.0; step *= 2.0) {
    if (++grown > kMaxGrowth) throw std::domain_error("could not bracket F = 1 from below");
    lo = x1 - 2.0 * step;
  }
  grown = 0;
  for (double step = 10.0; profile(hi) >= 1.0; step *= 2.0) {
    if (++grown > kMaxGrowth) throw std::domain_error("could not bracket F = 1 from above");
    hi = x1 + drift + 2.0 * step;
  }

  // Invariant: F(lo) >= 1 > F(hi).
  for (;;) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
    if (profile(mid) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

NormalizedProfile::NormalizedProfile(FrontProfile profile)
    : profile_(std::move(profile)), z_(front_position(profile_)) {}

NormalizedProfile normalized_profile(const FrontProfile& profile) {
  return NormalizedProfile(profile);
}

ExponentialFit fit_exponential_shape(std::span<const double> ys,
                                     std::span<const double> values) {
  require(ys.size() == values.size(), "grid and values differ in length");
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (values[i] > 0.0) {
      xs.push_back(ys[i]);
      ls.push_back(std::log(values[i]));
    }
  }
  require(xs.size() >= 2, "need at least two positive values");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / n;
  double sxx = 0.0, sxl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxl += (xs[i] - mx) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  require(sxx > 0.0, "grid must not be constant");
  const double slope = sxl / sxx;
  const double r2 = sll > 0.0 ? (sxl * sxl) / (sxx * sll) : 1.0;
  return {-slope, ml - slope * mx, r2};
}

TestFunction::TestFunction(std::vector<Step> steps) : steps_(std::move(steps)) {
  for (const auto& s : steps_) {
    require(s.height >= 0.0 && std::isfinite(s.height), "step heights must be finite and >= 0");
    require(s.width > 0.0 && std::isfinite(s.width), "step widths must be finite and > 0");
  }
}

TestFunction TestFunction::step(double height, double width) {
  return TestFunction({Step{height, width}});
}

double TestFunction::operator()(double u) const {
  double v = 0.0;
  for (const auto& s : steps_) {
    if (u >= 0.0 && u <= s.width) v += s.height;
  }
  return v;
}

double TestFunction::at_zero() const { return (*this)(0.0); }

double TestFunction::support_end() const {
  double end = 0.0;
  for (const auto& s : steps_) {
    if (s.height > 0.0) end = std::max(end, s.width);
  }
  return end;
}

Estimate gen_functional_mc(std::span<const PointConfiguration> configs,
                           const TestFunction& f) {
  require(!configs.empty(), "need at least one configuration");
  const double reach = f.support_end();
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& config : configs) {
    require(!config.empty(), "configurations must be nonempty");
    const auto pts = config.points();
    const double x1 = pts.front();
    if (reach > 0.0 && !(x1 - pts.back() > reach)) {
      throw std::domain_error("configuration too shallow for the support of f: X_1 - X_N = " +
                              std::to_string(x1 - pts.back()) + " <= " +
                              std::to_string(reach));
    }
    double exponent = 0.0;
    for (double x : pts) {
      const double u = x1 - x;
      if (u > reach) break;
      exponent += f(u);
    }
    const double value = std::exp(-exponent);
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(configs.size());
  const double mean = sum / n;
  double se = 0.0;
  if (configs.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    se = std::sqrt(var / n);
  }
  return {mean, se, configs.size()};
}

double gen_functional_pp_exponential(double rho, const TestFunction& f,
                                     bool include_leader_term) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
  // f is constant between consecutive step widths.
  std::vector<double> cuts{0.0};
  for (const auto& s : f.steps()) cuts.push_back(s.width);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double c = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    const double value = f(cuts[k]);  // constant on (cuts[k-1], cuts[k]]
    if (value == 0.0) continue;
    c += -std::expm1(-value) * (std::exp(rho * cuts[k]) - std::exp(rho * cuts[k - 1]));
  }
  const double g = 1.0 / (1.0 + c);
  return include_leader_term ? g * std::exp(-f.at_zero()) : g;
}

double gen_functional_pp_exponential(double rho, const std::function<double(double)>& f,
                                     double support_end, bool include_leader_term,
                                     std::span<const double> breakpoints) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
  require(support_end >= 0.0 && std::isfinite(support_end), "support end must be finite");
  std::vector<double> edges{0.0};
  for (double b : breakpoints) {
    if (b > 0.0 && b < support_end) edges.push_back(b);
  }
  edges.push_back(support_end);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto integrand = [&](double u) { return -std::expm1(-f(u)) * rho * std::exp(rho * u); };
  double c = 0.0, total_error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double error = 0.0;
    c += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, edges[i], edges[i + 1], 20, 1e-13, &error);
    total_error += error;
  }
  if (!(total_error <= 1e-10)) {
    throw std::runtime_error("quadrature did not reach absolute tolerance 1e-10");
  }
  const double g = 1.0 / (1.0 + c);
  return include_leader_term ? g * std::exp(-f(0.0)) : g;
}

std::vector<double> gap_vector(const PointConfiguration& config, std::size_t k) {
  if (config.size() < k + 1) {
    throw std::invalid_argument("gap vector of length " + std::to_string(k) + " needs " +
                                std::to_string(k + 1) + " points, have " +
                                std::to_string(config.size()));
  }
  std::vector<double> gaps(k);
  const auto pts = config.points();
  for (std::size_t i = 0; i < k; ++i) gaps[i] = pts[i] - pts[i + 1];
  return gaps;
}

double sum_squares(const MassPartition& partition) {
  double total = 0.0;
  for (double m : partition.masses()) total += m * m;
  const double tail = partition.tail_mass();
  const double largest_tail_piece =
      partition.size() > 0 ? std::min(tail, partition.masses().back()) : tail;
  return total + 0.5 * tail * largest_tail_piece;
}

FrontBoundCheck check_front_bounds(const PointConfiguration& config,
                                   const IncrementLaw& law, std::size_t tau,
                                   std::span<const double> y_grid) {
  const double beta = config.beta();
  const double v = v_beta(law, beta);
  const double t = static_cast<double>(tau);
  const FrontProfile profile(config, law, tau);

  FrontBoundCheck out;
  out.grid_points = y_grid.size();
  out.min_markov_margin = std::numeric_limits<double>::infinity();
  const double tail_factor = 1.0 + config.tail_weight();
  for (double y : y_grid) {
    const double bound = std::exp(v * t - beta * y) * tail_factor;
    const double value = profile(y);
    out.min_markov_margin = std::min(out.min_markov_margin, bound - value);
    if (value > bound) ++out.markov_violations;
  }
  out.z = front_position(profile);
  out.z_bound = v / beta * t;
  out.z_ok = out.z <= out.z_bound;
  return out;
}

JumpEventReport jump_event_bound_check_leaders(std::span<const double> final_leaders,
                                               std::size_t tau, double K, double C,
                                               double beta, double v_beta) {
  require(beta > 0.0, "beta must be positive");
  const double rate = (C + K) * beta - v_beta;
  require(rate > 0.0, "the bound needs (C + K) beta > v_beta");
  require(!final_leaders.empty(), "need at least one replica");
  const double t = static_cast<double>(tau);
  JumpEventReport out;
  out.replicas = final_leaders.size();
  if (tau > 0) {
    const double level = (C + K) * t;
    out.events = static_cast<std::size_t>(std::count_if(
        final_leaders.begin(), final_leaders.end(), [&](double x) { return x >= level; }));
  }
  const double n = static_cast<double>(out.replicas);
  out.frequency = static_cast<double>(out.events) / n;
  out.bound = std::min(1.0, std::exp(-t * rate));
  out.std_error = std::sqrt(out.bound * (1.0 - out.bound) / n);
  out.pass = out.frequency <= out.bound + 3.0 * out.std_error;
  return out;
}

JumpEventReport jump_event_bound_check(
    std::span<const Trajectory<PointConfiguration>> trajectories, double K, double C,
    double beta, double v_beta) {
  require(!trajectories.empty(), "need at least one trajectory");
  const std::size_t tau = trajectories.front().tau;
  std::vector<double> leaders;
  leaders.reserve(trajectories.size());
  for (const auto& tr : trajectories) {
    require(tr.tau == tau, "trajectories must share the horizon");
    require(tr.shift_policy == ShiftPolicy::none, "jump events need unshifted trajectories");
    const auto& start = tr.snapshots.front();
    double total = start.tail_weight();
    for (double x : start.points()) total += std::exp(start.beta() * x);
    require(std::abs(total - 1.0) <= 1e-9, "trajectories must start tail-normalized");
    leaders.push_back(tr.final_state().leader());
  }
  return jump_event_bound_check_leaders(leaders, tau, K, C, beta, v_beta);
}

}  // namespace quasistat
