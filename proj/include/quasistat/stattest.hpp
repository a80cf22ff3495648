#pragma once

// Two-sample machinery that turns simulation ensembles into invariance
// verdicts: Kolmogorov-Smirnov tests on marginals and a multivariate
// energy-distance permutation test.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace quasistat {

/// Replicas x coordinates, row-major. Rectangular with finite entries and at
/// least one column.
class SampleMatrix {
 public:
  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static SampleMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::vector<double> column(std::size_t c) const;
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

struct KsResult {
  double statistic;
  double p_value;
};

/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}, the limiting
/// survival function of sqrt(n) D_n.
double kolmogorov_survival(double lambda);

/// D = sup |F_x - F_y| with the asymptotic p-value Q(sqrt(n_x n_y / (n_x + n_y)) D).
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

/// One-sample KS against a continuous cdf with p-value Q(sqrt(n) D).
KsResult marginal_law_test(std::span<const double> samples,
                           const std::function<double(double)>& cdf);

/// V-statistic form 2 mean|x - y| - mean|x - x'| - mean|y - y'|, Euclidean
/// over the columns. Nonnegative.
double energy_statistic(const SampleMatrix& x, const SampleMatrix& y);

struct EnergyTestResult {
  double statistic;
  double p_value;  // (1 + #{E* >= E}) / (n_perm + 1)
  std::size_t n_perm;
};

/// Label-permutation calibration. Permutation j is drawn from stream j of
/// `seed`, so the result depends only on the seed.
EnergyTestResult energy_distance_perm_test(const SampleMatrix& x, const SampleMatrix& y,
                                           std::size_t n_perm, std::uint64_t seed);

enum class Verdict { consistent, rejected };
std::string_view to_string(Verdict v);

struct InvarianceReport {
  std::vector<KsResult> per_coordinate_ks;
  double energy_statistic = 0.0;
  double energy_p = 1.0;
  Verdict verdict = Verdict::consistent;
  double level = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
  std::size_t k = 0;
  std::size_t n_perm = 0;

  double min_ks_p() const;
};

/// Minimum sample size for the asymptotic KS p-values used in verdicts.
inline constexpr std::size_t kMinVerdictSamples = 500;

/// Rejected iff min per-coordinate KS p < level / k (Bonferroni) or the
/// energy permutation p < level.
InvarianceReport invariance_verdict(const SampleMatrix& before, const SampleMatrix& after,
                                    double level, std::size_t n_perm, std::uint64_t seed);

}  // namespace quasistat
