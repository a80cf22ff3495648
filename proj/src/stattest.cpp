#include "quasistat/stattest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "quasistat/random.hpp"

namespace quasistat {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

constexpr std::uint64_t kPermutationTag = 0x7065726d75746521ULL;  // "permute!"
constexpr std::size_t kPermutationBatch = 64;

}  // namespace

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(cols_ >= 1, "sample matrix needs at least one column");
  require(values_.size() == rows_ * cols_, "sample matrix is not rectangular");
  for (double v : values_) require(std::isfinite(v), "sample matrix entries must be finite");
}

SampleMatrix SampleMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), "sample matrix needs at least one row");
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    require(r.size() == cols, "sample matrix is not rectangular");
    values.insert(values.end(), r.begin(), r.end());
  }
  return SampleMatrix(rows.size(), cols, std::move(values));
}

std::vector<double> SampleMatrix::column(std::size_t c) const {
  require(c < cols_, "column index out of range");
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = values_[r * cols_ + c];
  return out;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Jacobi-theta form; converges fast for small lambda.
    const double inv = pi * pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * inv);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  require(!xs.empty() && !ys.empty(), "KS test needs two nonempty samples");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return {d, kolmogorov_survival(std::sqrt(ne) * d)};
}

KsResult marginal_law_test(std::span<const double> samples,
                           const std::function<double(double)>& cdf) {
  require(!samples.empty(), "KS test needs a nonempty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    require(f >= 0.0 && f <= 1.0, "cdf values must lie in [0,1]");
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - f, f - lo});
  }
  return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

namespace {

// Pairwise Euclidean distances of the pooled rows (x first, then y).
Eigen::MatrixXd pooled_distances(const SampleMatrix& x, const SampleMatrix& y) {
  const std::size_t n = x.rows() + y.rows();
  const std::size_t k = x.cols();
  Eigen::MatrixXd pts(n, k);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < k; ++c) pts(r, c) = x.row(r)[c];
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < k; ++c) pts(x.rows() + r, c) = y.row(r)[c];

  Eigen::MatrixXd d(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double dist = (pts.row(i) - pts.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

struct EnergyParts {
  double total;       // sum over all ordered pairs
  Eigen::VectorXd row_sums;
};

// E from S_YY and sum_{j in Y} R_j, using the symmetry of D.
double energy_from_parts(const EnergyParts& parts, double s_yy, double r_y, double nx,
                         double ny) {
  const double s_xy = r_y - s_yy;
  const double s_xx = parts.total - 2.0 * r_y + s_yy;
  return 2.0 * s_xy / (nx * ny) - s_xx / (nx * nx) - s_yy / (ny * ny);
}

}  // namespace

double energy_statistic(const SampleMatrix& x, const SampleMatrix& y) {
  require(x.cols() == y.cols(), "energy test needs matching column counts");
  const Eigen::MatrixXd d = pooled_distances(x, y);
  const auto nx = static_cast<Eigen::Index>(x.rows());
  const auto ny = static_cast<Eigen::Index>(y.rows());
  const double s_xx = d.topLeftCorner(nx, nx).sum();
  const double s_yy = d.bottomRightCorner(ny, ny).sum();
  const double s_xy = d.topRightCorner(nx, ny).sum();
  const double a = static_cast<double>(nx), b = static_cast<double>(ny);
  return std::max(0.0, 2.0 * s_xy / (a * b) - s_xx / (a * a) - s_yy / (b * b));
}

EnergyTestResult energy_distance_perm_test(const SampleMatrix& x, const SampleMatrix& y,
                                           std::size_t n_perm, std::uint64_t seed) {
  require(x.cols() == y.cols(), "energy test needs matching column counts");
  require(n_perm >= 199, "energy test needs at least 199 permutations");
  const std::size_t n = x.rows() + y.rows();
  const double nx = static_cast<double>(x.rows());
  const double ny = static_cast<double>(y.rows());

  const Eigen::MatrixXd d = pooled_distances(x, y);
  EnergyParts parts{0.0, d.rowwise().sum()};
  parts.total = parts.row_sums.sum();

  const auto ny_i = static_cast<Eigen::Index>(y.rows());
  const double observed =
      energy_from_parts(parts, d.bottomRightCorner(ny_i, ny_i).sum(),
                        parts.row_sums.tail(ny_i).sum(), nx, ny);
  const double tolerance = 1e-12 * std::max(1.0, parts.total / (nx + ny) / (nx + ny));

  std::size_t exceed = 0;
  std::vector<std::size_t> index(n);
  for (std::size_t start = 0; start < n_perm; start += kPermutationBatch) {
    const std::size_t batch = std::min(kPermutationBatch, n_perm - start);
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
      Rng rng = make_stream(seed, kPermutationTag, start + b);
      std::iota(index.begin(), index.end(), std::size_t{0});
      std::shuffle(index.begin(), index.end(), rng);
      for (std::size_t r = x.rows(); r < n; ++r) {
        labels(static_cast<Eigen::Index>(index[r]), static_cast<Eigen::Index>(b)) = 1.0;
      }
    }
    const Eigen::MatrixXd dl = d * labels;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      const double s_yy = labels.col(col).dot(dl.col(col));
      const double r_y = labels.col(col).dot(parts.row_sums);
      if (energy_from_parts(parts, s_yy, r_y, nx, ny) >= observed - tolerance) ++exceed;
    }
  }
  return {std::max(0.0, observed),
          static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1), n_perm};
}

std::string_view to_string(Verdict v) {
  return v == Verdict::consistent ? "consistent" : "rejected";
}

double InvarianceReport::min_ks_p() const {
  double p = 1.0;
  for (const auto& r : per_coordinate_ks) p = std::min(p, r.p_value);
  return p;
}

InvarianceReport invariance_verdict(const SampleMatrix& before, const SampleMatrix& after,
                                    double level, std::size_t n_perm, std::uint64_t seed) {
  require(before.cols() == after.cols(), "before and after track different coordinates");
  require(level > 0.0 && level < 1.0, "level must lie in (0,1)");
  if (before.rows() < kMinVerdictSamples || after.rows() < kMinVerdictSamples) {
    throw std::invalid_argument("asymptotic KS p-values need at least " +
                                std::to_string(kMinVerdictSamples) + " replicas per side");
  }
  InvarianceReport report;
  report.level = level;
  report.seed = seed;
  report.n_before = before.rows();
  report.n_after = after.rows();
  report.k = before.cols();
  report.n_perm = n_perm;
  for (std::size_t c = 0; c < before.cols(); ++c) {
    report.per_coordinate_ks.push_back(ks_two_sample(before.column(c), after.column(c)));
  }
  const auto energy = energy_distance_perm_test(before, after, n_perm, seed);
  report.energy_statistic = energy.statistic;
  report.energy_p = energy.p_value;
  const bool ks_reject = report.min_ks_p() < level / static_cast<double>(report.k);
  report.verdict = (ks_reject || report.energy_p < level) ? Verdict::rejected
                                                          : Verdict::consistent;
  return report;
}

}  // namespace quasistat
