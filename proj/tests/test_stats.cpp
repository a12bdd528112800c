#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "geofair/error.hpp"
#include "geofair/oracles.hpp"
#include "geofair/rng.hpp"
#include "geofair/stats.hpp"

using namespace geofair;

using V = std::vector<double>;

TEST_CASE("Welch t on a hand fixture") {
  const auto r = welch_t(V{1, 2, 3}, V{2, 3, 4});
  // Frozen from scipy.stats.ttest_ind(..., equal_var=False).
  CHECK(r.statistic == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(r.degrees_of_freedom == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.p_two_sided == doctest::Approx(0.2878641347266908).epsilon(1e-10));
  CHECK(std::abs(r.p_two_sided -
                 2 * oracle::t_cdf_quadrature(-std::abs(r.statistic), 4.0)) <= 1e-10);
}

TEST_CASE("identical samples give t = 0, p = 1") {
  const V a{0.3, 0.1, 0.7, 0.2};
  const auto r = welch_t(a, a);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_two_sided == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("t statistic is antisymmetric and tracks a location shift") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    V a(5 + rng.below(30)), b(5 + rng.below(30));
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    const auto ab = welch_t(a, b), ba = welch_t(b, a);
    CHECK(ab.statistic == doctest::Approx(-ba.statistic).epsilon(1e-12));
    CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
    V shifted = a;
    for (auto& x : shifted) x += 10.0;
    CHECK(welch_t(shifted, b).statistic > ab.statistic);
  }
}

TEST_CASE("pooled and paired variants") {
  const V a{1, 2, 3, 4}, b{2, 4, 6, 9};
  const auto pooled = welch_t(a, b, TVariance::Pooled);
  CHECK(pooled.degrees_of_freedom == 6.0);
  // scipy.stats.ttest_ind(a, b)
  CHECK(pooled.statistic == doctest::Approx(-1.690641214609248).epsilon(1e-12));
  CHECK(pooled.p_two_sided == doctest::Approx(0.14186036028585047).epsilon(1e-10));
  const auto paired = paired_t(a, b);
  CHECK(paired.degrees_of_freedom == 3.0);
  // scipy.stats.ttest_rel(a, b)
  CHECK(paired.statistic == doctest::Approx(-3.2204702407301595).epsilon(1e-12));
  CHECK_THROWS_AS(paired_t(a, V{1, 2}), Error);
}

TEST_CASE("degenerate t tests are flagged") {
  CHECK_THROWS_AS(welch_t(V{1}, V{1, 2}), Error);
  const auto same = welch_t(V{2, 2, 2}, V{2, 2});
  CHECK(same.degenerate);
  CHECK(same.p_two_sided == 1.0);
  const auto apart = welch_t(V{1, 1, 1}, V{2, 2});
  CHECK(apart.degenerate);
  CHECK(apart.p_two_sided == 0.0);
  CHECK(apart.statistic < 0.0);
}

TEST_CASE("Student t CDF") {
  CHECK(student_t_cdf(0.0, 3.0) == 0.5);
  // scipy.stats.t.cdf
  CHECK(student_t_cdf(1.5, 7) == doctest::Approx(0.911350756505015).epsilon(1e-12));
  CHECK(student_t_cdf(-2.3, 3.5) ==
        doctest::Approx(0.046196722489869065).epsilon(1e-12));
  CHECK(student_t_two_sided_p(10, 2) ==
        doctest::Approx(0.009852457023325692).epsilon(1e-12));
  for (double df : {1.0, 2.5, 4.0, 30.0, 1000.0}) {
    for (double t = -8; t <= 8; t += 0.37) {
      CHECK(std::abs(student_t_cdf(t, df) + student_t_cdf(-t, df) - 1.0) <= 1e-12);
      CHECK(std::abs(student_t_cdf(t, df) - oracle::t_cdf_quadrature(t, df)) <= 1e-10);
    }
  }
  CHECK(student_t_cdf(std::numeric_limits<double>::infinity(), 5) == 1.0);
}

TEST_CASE("regularized incomplete beta") {
  // scipy.special.betainc(2.5, 1.5, 0.3)
  CHECK(incomplete_beta(2.5, 1.5, 0.3) ==
        doctest::Approx(0.08894372317066562).epsilon(1e-12));
  CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK(incomplete_beta(1, 1, 0.42) == doctest::Approx(0.42).epsilon(1e-14));
  CHECK(incomplete_beta(3, 2, 0.6) + incomplete_beta(2, 3, 0.4) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Mann-Whitney U") {
  const auto sep = mann_whitney_u(V{5, 6, 7}, V{1, 2, 3, 4});
  CHECK(sep.statistic == 12.0);
  CHECK(mann_whitney_u(V{1, 2, 3, 4}, V{5, 6, 7}).statistic == 0.0);

  const auto small = mann_whitney_u(V{1, 3, 5}, V{2, 4});
  CHECK(small.statistic == 3.0);
  CHECK(small.p_two_sided == 1.0);

  // scipy.stats.mannwhitneyu(a, b, method="asymptotic")
  const V a{0.1, 0.4, 0.4, 0.9, 1.2, 1.2, 1.2, 2.0};
  const V b{0.3, 0.4, 1.2, 1.5, 2.5, 2.5, 3.0};
  const auto r = mann_whitney_u(a, b);
  CHECK(r.statistic == 16.5);
  CHECK(r.p_two_sided == doctest::Approx(0.1969110786731817).epsilon(1e-10));

  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    V x(1 + rng.below(40)), y(1 + rng.below(40));
    for (auto& v : x) v = static_cast<double>(rng.below(6));
    for (auto& v : y) v = static_cast<double>(rng.below(6));
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) &&
        std::all_of(y.begin(), y.end(), [&](double v) { return v == x[0]; })) {
      continue;
    }
    const auto u = mann_whitney_u(x, y);
    REQUIRE(u.statistic == oracle::pairwise_u(x, y));
    REQUIRE(u.statistic + mann_whitney_u(y, x).statistic ==
            static_cast<double>(x.size() * y.size()));
    REQUIRE(u.p_two_sided >= 0.0);
    REQUIRE(u.p_two_sided <= 1.0);
  }

  const auto tied = mann_whitney_u(V{2, 2}, V{2, 2, 2});
  CHECK(tied.degenerate);
  CHECK(tied.p_two_sided == 1.0);
  CHECK_THROWS_AS(mann_whitney_u(V{}, V{1}), Error);
}

TEST_CASE("mean difference") {
  CHECK(mean_diff(V{0.02, 0.04}, V{0.01}) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(mean(V{1, 2, 3, 6}) == 3.0);
}

TEST_CASE("null rejection rate is near nominal") {
  Rng rng(3);
  int t_rej = 0, u_rej = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    V a(60), b(80);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    t_rej += welch_t(a, b).p_two_sided < 0.05;
    u_rej += mann_whitney_u(a, b).p_two_sided < 0.05;
  }
  CHECK(t_rej >= 8);
  CHECK(t_rej <= 34);
  CHECK(u_rej >= 8);
  CHECK(u_rej <= 34);
}

TEST_CASE("shifting both samples leaves the tests unchanged") {
  const V a{0.3, 1.1, 2.4, 0.9, 1.7}, b{1.3, 0.2, 0.8, 2.9};
  V a2 = a, b2 = b;
  for (auto& x : a2) x += 7.5;
  for (auto& x : b2) x += 7.5;
  const auto r1 = welch_t(a, b), r2 = welch_t(a2, b2);
  CHECK(r2.statistic == doctest::Approx(r1.statistic).epsilon(1e-12));
  CHECK(r2.degrees_of_freedom == doctest::Approx(r1.degrees_of_freedom).epsilon(1e-12));
  CHECK(r2.p_two_sided == doctest::Approx(r1.p_two_sided).epsilon(1e-12));
  CHECK(mann_whitney_u(a2, b2).statistic == mann_whitney_u(a, b).statistic);
  CHECK(mann_whitney_u(V{1, 2}, V{3, 4}).statistic == 0.0);
  CHECK(mean_diff(a, b) == -mean_diff(b, a));
  CHECK(mean_diff(a, a) == 0.0);
}
