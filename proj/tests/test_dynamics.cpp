#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "quasistat/analysis.hpp"
#include "quasistat/dynamics.hpp"
#include "quasistat/pointproc.hpp"
#include "quasistat/stattest.hpp"

using namespace quasistat;

TEST_CASE("degenerate increments shift every point") {
  const PointConfiguration c(std::vector<double>{1.0, 0.0});
  Rng rng(1);
  const auto out = evolve_additive(c, IncrementLaw::degenerate(0.75), rng);
  CHECK(out.points()[0] == 1.75);
  CHECK(out.points()[1] == 0.75);
  CHECK(gap_vector(out, 1)[0] == gap_vector(c, 1)[0]);
}

TEST_CASE("additive evolution re-sorts") {
  const PointConfiguration c(std::vector<double>{0.0, -3.0});
  const std::vector<double> h{-2.0, 0.0};
  const auto out = evolve_additive_with(c, h, 1.0);
  CHECK(out.points()[0] == -2.0);
  CHECK(out.points()[1] == -3.0);

  CHECK_THROWS_AS(evolve_additive_with(c, std::vector<double>{1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("multiplicative reshuffle") {
  const MassPartition p(std::vector<double>{0.8, 0.2});
  const std::vector<double> equal{3.0, 3.0};
  const auto same = evolve_multiplicative_with(p, equal, 3.0);
  CHECK(same[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(same[1] == doctest::Approx(0.2).epsilon(1e-15));

  const std::vector<double> w{1.0, 8.0};
  const auto out = evolve_multiplicative_with(p, w, 1.0);
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("reshuffling conserves total mass") {
  const auto law = IncrementLaw::lognormal_weight(0.0, 1.0);
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng = make_stream(201, 0, r);
    auto p = sample_pd_stickbreaking(0.5, 40, rng);
    for (int step = 0; step < 5; ++step) {
      p = evolve_multiplicative(p, law, 1.0, rng);
      const double total =
          std::accumulate(p.masses().begin(), p.masses().end(), 0.0) + p.tail_mass();
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("additive and multiplicative evolution commute with the mass map") {
  for (double beta : {0.5, 1.0, 2.0}) {
    for (std::uint64_t r = 0; r < 50; ++r) {
      Rng rng = make_stream(211, static_cast<std::uint64_t>(beta * 4), r);
      const auto pp = sample_pp_exponential(0.4, 60, rng, beta);
      const auto law = IncrementLaw::gaussian(0.1, 0.8);
      std::vector<double> h(pp.size()), w(pp.size());
      law.sample_into(h, beta, rng);
      for (std::size_t i = 0; i < h.size(); ++i) w[i] = std::exp(beta * h[i]);
      const double factor = std::exp(v_beta(law, beta));

      const auto lhs = mass_partition_from_config(evolve_additive_with(pp, h, factor));
      const auto rhs = evolve_multiplicative_with(mass_partition_from_config(pp), w, factor);
      REQUIRE(lhs.size() == rhs.size());
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
      }
      CHECK(lhs.tail_mass() == doctest::Approx(rhs.tail_mass()).epsilon(1e-12));
    }
  }
}

TEST_CASE("leader shift") {
  const PointConfiguration c(std::vector<double>{3.0, 1.0, 0.0});
  const auto s = shift_leader(c);
  CHECK(s.points()[0] == 0.0);
  CHECK(s.points()[1] == -2.0);
  CHECK(s.points()[2] == -3.0);
  const auto t = shift_leader(s);
  CHECK(std::equal(s.points().begin(), s.points().end(), t.points().begin()));
  CHECK(gap_vector(s, 2) == gap_vector(c, 2));
}

TEST_CASE("tail shift") {
  const PointConfiguration c(std::vector<double>{0.0, 0.0});
  const auto s = shift_tail(c);
  CHECK(s.points()[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(s.points()[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(std::exp(s.points()[0]) + std::exp(s.points()[1]) == doctest::Approx(1.0));

  for (std::uint64_t r = 0; r < 50; ++r) {
    Rng rng = make_stream(221, 0, r);
    const auto pp = sample_pp_exponential(0.5, 80, rng, 1.0);
    const auto once = shift_tail(pp);
    const auto twice = shift_tail(once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(std::abs(once.points()[i] - twice.points()[i]) <= 1e-12);
    }
    const auto via_masses = config_from_mass_partition(mass_partition_from_config(pp));
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(std::abs(once.points()[i] - via_masses.points()[i]) <= 1e-12);
    }
    CHECK(once.tail_weight() == doctest::Approx(via_masses.tail_weight()).epsilon(1e-12));
  }

  const PointConfiguration infinite(std::vector<double>{0.0}, 1.0,
                                    std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(shift_tail(infinite), std::domain_error);
}

TEST_CASE("trajectories") {
  const PointConfiguration c(std::vector<double>{1.0, 0.5, -2.0});
  Rng rng(3);
  const auto zero = run_trajectory(c, IncrementLaw::gaussian(0.0, 1.0), 0, ShiftPolicy::none, rng);
  REQUIRE(zero.snapshots.size() == 1);
  CHECK(zero.final_state().points()[1] == 0.5);

  const auto still = run_trajectory(c, IncrementLaw::degenerate(0.0), 4, ShiftPolicy::none, rng);
  REQUIRE(still.snapshots.size() == 5);
  for (const auto& s : still.snapshots) {
    CHECK(std::equal(s.points().begin(), s.points().end(), c.points().begin()));
  }

  const auto led =
      run_trajectory(c, IncrementLaw::gaussian(0.0, 1.0), 3, ShiftPolicy::leader, rng);
  CHECK(led.snapshots.front().leader() == 1.0);
  for (std::size_t t = 1; t < led.snapshots.size(); ++t) CHECK(led.snapshots[t].leader() == 0.0);

  const MassPartition p(std::vector<double>{0.6, 0.4});
  CHECK_THROWS_AS(run_trajectory(p, IncrementLaw::gaussian(0.0, 1.0), 1.0, 2,
                                 ShiftPolicy::leader, rng),
                  std::invalid_argument);
  CHECK(parse_shift_policy("tail") == ShiftPolicy::tail);
  CHECK(to_string(ShiftPolicy::leader) == "leader");
  CHECK_THROWS_AS(parse_shift_policy("sideways"), std::invalid_argument);
}

TEST_CASE("increment law moments") {
  CHECK(IncrementLaw::gaussian(0.0, 1.0).log_mgf(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(IncrementLaw::uniform(0.0, 1.0).log_mgf(1.0, 1.0) ==
        doctest::Approx(0.541324854612918).epsilon(1e-14));
  CHECK(IncrementLaw::degenerate(0.3).log_mgf(2.0, 1.0) == doctest::Approx(0.6));
  // ln W ~ N(0.2, 0.7^2): E[W] = e^{0.2 + 0.245}.
  const auto ln = IncrementLaw::lognormal_weight(0.2, 0.7);
  CHECK(ln.log_mgf(2.0, 2.0) == doctest::Approx(0.445));
  CHECK(ln.mean(2.0) == doctest::Approx(0.1));

  for (const auto& law : {IncrementLaw::gaussian(0.3, 1.2), IncrementLaw::uniform(-1.0, 2.0),
                          IncrementLaw::lognormal_weight(0.1, 0.5)}) {
    Rng rng(17);
    constexpr std::size_t n = 200000;
    std::vector<double> h(n), eh(n);
    law.sample_into(h, 1.5, rng);
    for (std::size_t i = 0; i < n; ++i) eh[i] = std::exp(0.5 * h[i]);
    const auto m = oracle::mean_se(h);
    const auto mg = oracle::mean_se(eh);
    CAPTURE(law.describe());
    CHECK(std::abs(m.mean - law.mean(1.5)) < 4.0 * m.se);
    CHECK(std::abs(std::log(mg.mean) - law.log_mgf(0.5, 1.5)) < 4.0 * mg.se / mg.mean);
  }

  const auto g = IncrementLaw::gaussian(0.5, 2.0).gaussian_sum(1.0, 4);
  REQUIRE(g.has_value());
  CHECK(g->mean == 2.0);
  CHECK(g->sd == doctest::Approx(4.0));
  CHECK_FALSE(IncrementLaw::uniform(0.0, 1.0).gaussian_sum(1.0, 2).has_value());

  CHECK_THROWS_AS(IncrementLaw::gaussian(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(IncrementLaw::uniform(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("gap vector of the exponential-intensity process is preserved by evolution") {
  constexpr std::size_t n = 2000, k = 10;
  const auto law = IncrementLaw::gaussian(0.0, 1.0);
  std::vector<double> before, after;
  for (std::size_t r = 0; r < n; ++r) {
    Rng a = make_stream(231, 1, r);
    const auto g0 = gap_vector(sample_pp_exponential(1.0, 2000, a), k);
    before.insert(before.end(), g0.begin(), g0.end());
    Rng b = make_stream(231, 2, r);
    const auto start = sample_pp_exponential(1.0, 2000, b);
    const auto g1 =
        gap_vector(run_trajectory(start, law, 1, ShiftPolicy::none, b).final_state(), k);
    after.insert(after.end(), g1.begin(), g1.end());
  }
  const auto report = invariance_verdict(SampleMatrix(n, k, before), SampleMatrix(n, k, after),
                                         0.01, 199, 7);
  CHECK(report.verdict == Verdict::consistent);
}

TEST_CASE("PD(0.5,0) is stationary under one lognormal reshuffle") {
  constexpr std::size_t n = 2000, k = 5;
  const auto law = IncrementLaw::lognormal_weight(0.0, 1.0);
  std::vector<double> before, after;
  for (std::size_t r = 0; r < n; ++r) {
    Rng a = make_stream(241, 1, r);
    const auto pa = sample_pk_powerlaw(0.5, 500, a);
    const auto p0 = normalize_to_mass_partition(pa.atoms, 0.5, pa.gamma_last);
    Rng b = make_stream(241, 2, r);
    const auto pb = sample_pk_powerlaw(0.5, 500, b);
    const auto p1 = evolve_multiplicative(
        normalize_to_mass_partition(pb.atoms, 0.5, pb.gamma_last), law, 1.0, b);
    for (std::size_t i = 0; i < k; ++i) {
      before.push_back(p0[i]);
      after.push_back(p1[i]);
    }
  }
  CHECK(invariance_verdict(SampleMatrix(n, k, before), SampleMatrix(n, k, after), 0.01, 199, 3)
            .verdict == Verdict::consistent);
}
