#pragma once

// Front profile F_{X,tau}(y), its unit-level root Z_{X,tau}, the normalizing
// shift, generating functionals of the gap process, and the almost-sure
// front bounds for tail-normalized starts.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "quasistat/dynamics.hpp"
#include "quasistat/pointproc.hpp"

namespace quasistat {

/// y -> sum_i P(S_i(tau) >= y - X_i) over the tracked points, the expected
/// number of points above y after tau steps.
///
/// Gaussian and lognormal-weight laws use the exact normal tail of S(tau).
/// Uniform laws use the Irwin-Hall distribution, supported for
/// tau <= kMaxUniformTau.
class FrontProfile {
 public:
  static constexpr std::size_t kMaxUniformTau = 16;

  FrontProfile(PointConfiguration config, IncrementLaw law, std::size_t tau);

  double operator()(double y) const;
  /// P(S(tau) >= threshold).
  double survival(double threshold) const;

  const PointConfiguration& config() const { return config_; }
  const IncrementLaw& law() const { return law_; }
  std::size_t tau() const { return tau_; }

 private:
  PointConfiguration config_;
  IncrementLaw law_;
  std::size_t tau_;
};

FrontProfile front_profile(const PointConfiguration& config, const IncrementLaw& law,
                           std::size_t tau);

/// Largest z with F(z) >= 1, by geometric bracketing around X_1 and
/// bisection to the last representable step. For continuous F this is the
/// root of F = 1; at tau = 0 it is X_1.
///
/// Throws std::domain_error when F < 1 everywhere (a single tracked point
/// spread by a non-degenerate law).
double front_position(const FrontProfile& profile);

/// y -> F(y + Z), equal to 1 at the origin.
class NormalizedProfile {
 public:
  explicit NormalizedProfile(FrontProfile profile);

  double operator()(double y) const { return profile_(y + z_); }
  double z() const { return z_; }
  const FrontProfile& profile() const { return profile_; }

 private:
  FrontProfile profile_;
  double z_;
};

NormalizedProfile normalized_profile(const FrontProfile& profile);

/// v_beta = log E[e^{beta h}].
double v_beta(const IncrementLaw& law, double beta);

struct ExponentialFit {
  double rate;       // fitted rho' in value ~ A e^{-rho' y}
  double intercept;  // log A
  double r_squared;
};

/// Least-squares line through (y, log value) over the positive values.
ExponentialFit fit_exponential_shape(std::span<const double> ys,
                                     std::span<const double> values);

/// f(u) = sum_k height_k * 1{0 <= u <= width_k}.
class TestFunction {
 public:
  struct Step {
    double height;
    double width;
  };

  TestFunction() = default;
  explicit TestFunction(std::vector<Step> steps);
  static TestFunction step(double height, double width);

  double operator()(double u) const;
  double at_zero() const;
  /// Right end of the support; 0 for the zero function.
  double support_end() const;
  std::span<const Step> steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
};

struct Estimate {
  double mean;
  double std_error;
  std::size_t n;
};

/// Monte Carlo mean of exp(-sum_i f(X_1 - X_i)), leader term included.
/// Throws std::domain_error when a configuration is too shallow to cover
/// the support of f (X_1 - X_N must exceed support_end()).
Estimate gen_functional_mc(std::span<const PointConfiguration> configs,
                           const TestFunction& f);

/// Closed form 1/(1+c), c = int_0^inf (1 - e^{-f(u)}) rho e^{rho u} du, for
/// the exponential-intensity Poisson process; multiplied by e^{-f(0)} when
/// the leader term is included.
double gen_functional_pp_exponential(double rho, const TestFunction& f,
                                     bool include_leader_term);

/// Same functional for a general nonnegative f supported on [0, support_end],
/// with c computed by adaptive Gauss-Kronrod quadrature (absolute error
/// 1e-10 or std::runtime_error). Discontinuities of f inside the support
/// should be listed in `breakpoints` so each piece is integrated separately.
double gen_functional_pp_exponential(double rho, const std::function<double(double)>& f,
                                     double support_end, bool include_leader_term,
                                     std::span<const double> breakpoints = {});

/// (X_i - X_{i+1}) for i = 1..k.
std::vector<double> gap_vector(const PointConfiguration& config, std::size_t k);

/// sum xi_i^2 plus the midpoint of the tail bracket [0, tail * min(tail, xi_last)].
double sum_squares(const MassPartition& partition);

struct FrontBoundCheck {
  std::size_t grid_points = 0;
  std::size_t markov_violations = 0;
  double min_markov_margin = 0.0;  // min over the grid of bound(y) - F(y)
  double z = 0.0;
  double z_bound = 0.0;
  bool z_ok = false;
};

/// F(y) <= e^{v_beta tau - beta y} (1 + tail_weight) on the grid and
/// Z <= (v_beta / beta) tau, for a tail-normalized configuration.
FrontBoundCheck check_front_bounds(const PointConfiguration& config,
                                   const IncrementLaw& law, std::size_t tau,
                                   std::span<const double> y_grid);

struct JumpEventReport {
  std::size_t replicas = 0;
  std::size_t events = 0;
  double frequency = 0.0;
  double bound = 0.0;
  double std_error = 0.0;  // binomial, evaluated at the bound
  bool pass = false;
};

/// Event B: some point satisfies S_i(tau) + X_i >= (C + K) tau. Without
/// shifts this is the evolved leader reaching (C + K) tau. The bound is
/// e^{-tau ((C+K) beta - v_beta)}; pass iff frequency <= bound + 3 SE.
JumpEventReport jump_event_bound_check_leaders(std::span<const double> final_leaders,
                                               std::size_t tau, double K, double C,
                                               double beta, double v_beta);

/// Trajectories must start tail-normalized and use ShiftPolicy::none.
JumpEventReport jump_event_bound_check(
    std::span<const Trajectory<PointConfiguration>> trajectories, double K, double C,
    double beta, double v_beta);

}  // namespace quasistat
