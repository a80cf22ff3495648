#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "quasistat/pointproc.hpp"
#include "quasistat/stattest.hpp"

using namespace quasistat;

TEST_CASE("arrival times are cumulative sums") {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto arr = arrivals_from_exponentials(ones);
  REQUIRE(arr.size() == 3);
  CHECK(arr.gammas()[0] == 1.0);
  CHECK(arr.gammas()[1] == 2.0);
  CHECK(arr.gammas()[2] == 3.0);

  const std::vector<double> e{std::numbers::e};
  CHECK(arrivals_from_exponentials(e).last() == std::numbers::e);

  CHECK_THROWS_AS(arrivals_from_exponentials(std::vector<double>{1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ArrivalTimes(std::vector<double>{2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("mean of the k-th arrival is k") {
  constexpr std::size_t n = 10000, k = 6;
  std::vector<std::vector<double>> gk(k, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng = make_stream(11, 1, r);
    const auto arr = sample_gamma_arrivals(k, rng);
    for (std::size_t i = 0; i < k; ++i) gk[i][r] = arr.gammas()[i];
  }
  // Six simultaneous checks: the band is widened to 3.6 SE so the family-wise
  // false-alarm rate stays near that of a single 3 SE check.
  for (std::size_t i = 0; i < k; ++i) {
    const auto ms = oracle::mean_se(gk[i]);
    CAPTURE(i);
    CHECK(std::abs(ms.mean - static_cast<double>(i + 1)) < 3.6 * ms.se);
  }
}

TEST_CASE("exponential-intensity points from arrivals") {
  const ArrivalTimes arr(std::vector<double>{1.0, 2.0, 3.0});
  const auto c = pp_exponential_from_arrivals(arr, 1.0);
  CHECK(c.points()[0] == 0.0);
  CHECK(c.points()[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(c.points()[2] == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
  CHECK(std::isinf(c.tail_weight()));

  // With beta = 2 rho the untracked weight is E[sum_{j>N} Gamma_j^{-2}] = 1/Gamma_N.
  const auto c2 = pp_exponential_from_arrivals(arr, 1.0, 2.0);
  CHECK(c2.tail_weight() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("count of points above a level is Poisson(e^{-rho y})") {
  constexpr std::size_t n = 20000;
  for (double rho : {1.0, 2.5}) {
    for (double y : {-1.0, 0.5}) {
      std::vector<int> counts(n);
      for (std::size_t r = 0; r < n; ++r) {
        Rng rng = make_stream(21, static_cast<std::uint64_t>(rho * 10), r);
        const auto c = sample_pp_exponential(rho, 80, rng);
        REQUIRE(c.points().back() < y);
        counts[r] = static_cast<int>(
            std::count_if(c.points().begin(), c.points().end(), [&](double x) { return x >= y; }));
      }
      CAPTURE(rho);
      CAPTURE(y);
      CHECK(oracle::poisson_chi_square_p(counts, std::exp(-rho * y)) > 1e-3);
    }
  }
}

TEST_CASE("gaps of the exponential-intensity process are Exp(i rho)") {
  constexpr std::size_t n = 5000, k = 6;
  const double rho = 1.5;
  std::vector<std::vector<double>> gaps(k, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng = make_stream(31, 0, r);
    const auto c = sample_pp_exponential(rho, k + 1, rng);
    for (std::size_t i = 0; i < k; ++i) gaps[i][r] = c.points()[i] - c.points()[i + 1];
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double rate = static_cast<double>(i + 1) * rho;
    const auto ks = marginal_law_test(gaps[i], [&](double x) {
      return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
    });
    CAPTURE(i);
    CHECK(ks.p_value > 1e-3);
  }
}

TEST_CASE("top-N sampler agrees with a spatially truncated Poisson process") {
  constexpr std::size_t n = 3000, k = 4;
  const double rho = 1.0;
  std::vector<std::vector<double>> ours(k), theirs(k);
  for (std::size_t r = 0; r < n; ++r) {
    Rng a = make_stream(41, 1, r);
    const auto c = sample_pp_exponential(rho, 20, a);
    Rng b = make_stream(41, 2, r);
    const auto o = oracle::pp_above_level(rho, -6.0, b);
    REQUIRE(o.size() >= k);
    for (std::size_t i = 0; i < k; ++i) {
      ours[i].push_back(c.points()[i]);
      theirs[i].push_back(o[i]);
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    CAPTURE(i);
    CHECK(ks_two_sample(ours[i], theirs[i]).p_value > 1e-3);
  }
}

TEST_CASE("power-law atoms") {
  const auto a = powerlaw_atoms_from_arrivals(ArrivalTimes(std::vector<double>{1.0, 2.0}), 0.5);
  CHECK(a.atoms[0] == 1.0);
  CHECK(a.atoms[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(a.gamma_last == 2.0);

  const auto b =
      powerlaw_atoms_from_arrivals(ArrivalTimes(std::vector<double>{1.0, 8.0}), 1.0 / 3.0);
  CHECK(b.atoms[1] == doctest::Approx(0.001953125).epsilon(1e-14));

  CHECK_THROWS_AS(powerlaw_atoms_from_arrivals(ArrivalTimes(std::vector<double>{1.0}), 1.0),
                  std::invalid_argument);
}

TEST_CASE("count of atoms above s is Poisson(s^{-alpha})") {
  constexpr std::size_t n = 20000;
  const double alpha = 0.5, s = 0.25;
  std::vector<int> counts(n);
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng = make_stream(51, 0, r);
    const auto a = sample_pk_powerlaw(alpha, 200, rng);
    REQUIRE(a.atoms.back() < s);
    counts[r] = static_cast<int>(
        std::count_if(a.atoms.begin(), a.atoms.end(), [&](double x) { return x >= s; }));
  }
  CHECK(oracle::poisson_chi_square_p(counts, std::pow(s, -alpha)) > 1e-3);
  CHECK(LevyMeasureSpec::power_law(alpha).mean_count_above(s) == doctest::Approx(2.0));
  CHECK(LevyMeasureSpec::exponential_intensity(2.0).mean_count_above(0.5) ==
        doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("normalization and tail correction") {
  const std::vector<double> atoms{1.0, 0.25};
  const auto p = normalize_atoms(atoms, 0.0);
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(p.tail_mass() == 0.0);

  CHECK(powerlaw_tail_correction(0.5, 100.0) == doctest::Approx(0.01).epsilon(1e-15));

  const auto q = normalize_atoms(atoms, 0.75);
  CHECK(q.tail_mass() == doctest::Approx(0.375));
  CHECK(q[0] == doctest::Approx(0.5));
}

TEST_CASE("tail correction matches the simulated untracked sum") {
  // Continue the arrival sequence past Gamma_N = 100 and sum the remaining
  // atoms directly; the far remainder past the simulated block is the
  // integral of s^{-2}, which is below 1e-4 of the total.
  const double alpha = 0.5, gamma_n = 100.0;
  constexpr std::size_t reps = 2000, block = 20000;
  std::vector<double> sums(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_stream(61, 0, r);
    std::exponential_distribution<double> e(1.0);
    double g = gamma_n, s = 0.0;
    for (std::size_t j = 0; j < block; ++j) {
      g += e(rng);
      s += std::pow(g, -1.0 / alpha);
    }
    sums[r] = s + 1.0 / g;
  }
  const auto ms = oracle::mean_se(sums);
  CHECK(std::abs(ms.mean - powerlaw_tail_correction(alpha, gamma_n)) < 3.0 * ms.se);
}

TEST_CASE("stick-breaking partitions") {
  const std::vector<double> degenerate{1.0, 0.3, 0.3};
  const auto p = partition_from_sticks(degenerate, 3);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == 1.0);
  CHECK(p.tail_mass() == 0.0);

  const std::vector<double> halves{0.5, 0.5, 0.5};
  const auto h = partition_from_sticks(halves, 2);
  REQUIRE(h.size() == 2);
  CHECK(h[0] == 0.5);
  CHECK(h[1] == 0.25);
  CHECK(h.tail_mass() == doctest::Approx(0.25));
}

TEST_CASE("stick-breaking top-n equals the top of the full enumeration") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(71, 0, seed);
    std::uniform_real_distribution<double> u(0.0, 0.4);
    std::vector<double> sticks(400);
    for (auto& v : sticks) v = u(rng);

    std::vector<double> all;
    double rest = 1.0;
    for (double v : sticks) {
      all.push_back(rest * v);
      rest *= 1.0 - v;
    }
    std::sort(all.begin(), all.end(), std::greater<>());

    const std::size_t n = 8;
    const auto p = partition_from_sticks(sticks, n);
    REQUIRE(p.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(p[i] == doctest::Approx(all[i]).epsilon(1e-14));
  }
}

TEST_CASE("PD(alpha,0) stick-breaking has E[sum xi^2] = 1 - alpha") {
  // Settling the top 50 pieces at alpha = 0.7 takes ~10^5 sticks, so that
  // case runs fewer replicas with a stick cap; the unsettled remainder adds
  // at most tail * xi_50 / 2 to the estimate.
  struct Case {
    double alpha;
    std::size_t n;
    std::size_t max_sticks;
  };
  for (const auto& [alpha, n, max_sticks] : {Case{0.3, 10000, 200000}, Case{0.5, 10000, 200000},
                                             Case{0.7, 2000, 20000}}) {
    std::vector<double> ss(n);
    for (std::size_t r = 0; r < n; ++r) {
      Rng rng = make_stream(81, static_cast<std::uint64_t>(alpha * 10), r);
      const auto p = sample_pd_stickbreaking(alpha, 50, rng, max_sticks);
      double s = 0.0;
      for (double m : p.masses()) s += m * m;
      ss[r] = s;
    }
    const auto ms = oracle::mean_se(ss);
    CAPTURE(alpha);
    CHECK(std::abs(ms.mean - (1.0 - alpha)) < 3.0 * ms.se + 1e-3);
  }
}

namespace {

SampleMatrix top5(const std::vector<MassPartition>& parts) {
  std::vector<double> v;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < 5; ++i) v.push_back(i < p.size() ? p[i] : 0.0);
  return SampleMatrix(parts.size(), 5, std::move(v));
}

}  // namespace

TEST_CASE("Poisson-Kingman and stick-breaking samplers agree on top-5 masses") {
  constexpr std::size_t n = 2000;
  std::vector<MassPartition> pk(n), sb(n), pp(n);
  for (std::size_t r = 0; r < n; ++r) {
    Rng a = make_stream(91, 1, r);
    const auto atoms = sample_pk_powerlaw(0.5, 500, a);
    pk[r] = normalize_to_mass_partition(atoms.atoms, 0.5, atoms.gamma_last);
    Rng b = make_stream(91, 2, r);
    sb[r] = sample_pd_stickbreaking(0.5, 20, b);
    Rng c = make_stream(91, 3, r);
    pp[r] = mass_partition_from_config(sample_pp_exponential(0.5, 500, c, 1.0));
  }
  CHECK(invariance_verdict(top5(pk), top5(sb), 0.01, 199, 1).verdict == Verdict::consistent);
  CHECK(invariance_verdict(top5(pp), top5(sb), 0.01, 199, 2).verdict == Verdict::consistent);
}

TEST_CASE("mass-partition from a configuration") {
  const PointConfiguration c(std::vector<double>{0.0, -std::log(2.0)});
  const auto p = mass_partition_from_config(c);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  for (double a : {-800.0, 0.0, 800.0}) {
    const auto q = mass_partition_from_config(PointConfiguration(std::vector<double>{a, a}));
    CHECK(q[0] == 0.5);
    CHECK(q[1] == 0.5);
  }

  const PointConfiguration inf_tail(std::vector<double>{0.0}, 1.0,
                                    std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(mass_partition_from_config(inf_tail), std::domain_error);

  const PointConfiguration with_tail(std::vector<double>{0.0}, 2.0, 1.0);
  const auto t = mass_partition_from_config(with_tail);
  CHECK(t[0] == doctest::Approx(0.5));
  CHECK(t.tail_mass() == doctest::Approx(0.5));
}

TEST_CASE("configuration from a mass-partition and round trip") {
  const auto c = config_from_mass_partition(MassPartition(std::vector<double>{0.5, 0.5}));
  CHECK(c.points()[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(c.points()[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

  const auto d = config_from_mass_partition(MassPartition(std::vector<double>{0.8, 0.2}));
  CHECK(d.points()[0] == doctest::Approx(std::log(0.8)).epsilon(1e-15));
  CHECK(d.points()[1] == doctest::Approx(std::log(0.2)).epsilon(1e-15));

  for (std::uint64_t r = 0; r < 50; ++r) {
    Rng rng = make_stream(101, 0, r);
    const auto p = sample_pd_stickbreaking(0.5, 30, rng);
    const auto back = mass_partition_from_config(config_from_mass_partition(p));
    REQUIRE(back.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(back[i] - p[i]) <= 1e-12);
    CHECK(std::abs(back.tail_mass() - p.tail_mass()) <= 1e-12);
  }
}

TEST_CASE("domain types validate their invariants") {
  CHECK_THROWS_AS(PointConfiguration(std::vector<double>{0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointConfiguration(std::vector<double>{0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PointConfiguration(std::vector<double>{0.0}, 1.0, -1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(PointConfiguration(std::vector<double>{std::nan("")}),
                  std::invalid_argument);
  CHECK_THROWS_AS(MassPartition(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(MassPartition(std::vector<double>{0.3, 0.5}, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(MassPartition(std::vector<double>{0.5}, 0.4), std::invalid_argument);
  CHECK_NOTHROW(MassPartition(std::vector<double>{0.5, 0.25}, 0.25));
}

TEST_CASE("samplers are deterministic per stream") {
  Rng a = make_stream(5, 1, 2), b = make_stream(5, 1, 2);
  const auto x = sample_pp_exponential(1.0, 100, a);
  const auto y = sample_pp_exponential(1.0, 100, b);
  CHECK(std::equal(x.points().begin(), x.points().end(), y.points().begin()));
  CHECK(stream_seed(5, 1, 2) != stream_seed(5, 2, 1));
}
