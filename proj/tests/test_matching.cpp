#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geofair/error.hpp"
#include "geofair/matching.hpp"
#include "geofair/oracles.hpp"
#include "geofair/rng.hpp"
#include "helpers.hpp"

using namespace geofair;
using geofair::testing::village;

namespace {

VillageRecord random_village(Rng& rng, const std::string& id) {
  auto r = village(id);
  r.lat = rng.uniform(8, 32);
  r.lon = rng.uniform(70, 90);
  r.poverty_rate = rng.uniform();
  r.electricity = rng.bernoulli(0.6);
  r.population = static_cast<std::int64_t>(rng.below(5000));
  return r;
}

std::vector<double> raw(const VillageRecord& r) {
  const auto c = match_covariates(r);
  return {c.begin(), c.end()};
}

// Brute-force Mahalanobis nearest neighbour on raw covariates.
std::vector<std::size_t> mahalanobis_scan(const std::vector<VillageRecord>& t,
                                          const std::vector<VillageRecord>& c,
                                          std::vector<double>* dist) {
  const std::size_t d = 5;
  std::vector<std::vector<double>> all;
  for (const auto& r : t) all.push_back(raw(r));
  for (const auto& r : c) all.push_back(raw(r));
  const auto n = static_cast<long double>(all.size());
  std::vector<long double> mu(d, 0);
  for (const auto& v : all)
    for (std::size_t k = 0; k < d; ++k) mu[k] += v[k] / n;
  std::vector<std::vector<long double>> a(d, std::vector<long double>(2 * d, 0));
  for (const auto& v : all)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        a[i][j] += (v[i] - mu[i]) * (v[j] - mu[j]) / (n - 1);
  for (std::size_t i = 0; i < d; ++i) a[i][d + i] = 1;
  for (std::size_t col = 0; col < d; ++col) {  // Gauss-Jordan with pivoting
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    const long double p = a[col][col];
    for (auto& x : a[col]) x /= p;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const long double f = a[r][col];
      for (std::size_t k = 0; k < 2 * d; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<std::size_t> best_idx;
  for (const auto& q : t) {
    const auto qv = raw(q);
    std::size_t best = 0;
    long double best_d = 1e300L;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const auto cv = raw(c[j]);
      long double s = 0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k)
          s += (qv[i] - cv[i]) * a[i][d + k] * (qv[k] - cv[k]);
      if (s < best_d) {
        best_d = s;
        best = j;
      }
    }
    best_idx.push_back(best);
    dist->push_back(static_cast<double>(std::sqrt(std::max(best_d, 0.0L))));
  }
  return best_idx;
}

}  // namespace

TEST_CASE("group assignment uses a strict median cut") {
  std::vector<VillageRecord> rs;
  const double shares[] = {0.1, 0.2, 0.3, 0.4};
  for (int i = 0; i < 4; ++i) {
    rs.push_back(village("v" + std::to_string(i)));
    rs.back().share_sc = shares[i];
  }
  const auto g = assign_groups(Dataset(rs, "t"), Community::SC);
  CHECK(g.median == doctest::Approx(0.25));
  CHECK(g.is_treatment == std::vector<bool>{false, false, true, true});
  CHECK(g.n_treatment == 2);
  CHECK(g.n_control == 2);

  // Median exactly zero for a mostly-absent community: zeros are control.
  std::vector<VillageRecord> st;
  for (int i = 0; i < 5; ++i) {
    st.push_back(village("s" + std::to_string(i)));
    st.back().share_st = i < 3 ? 0.0 : 0.2 * i;
  }
  const auto gst = assign_groups(Dataset(st, "t"), Community::ST);
  CHECK(gst.median == 0.0);
  CHECK(gst.n_treatment == 2);
  CHECK(gst.n_control == 3);
}

TEST_CASE("identical shares leave no treatment group") {
  std::vector<VillageRecord> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(village("v" + std::to_string(i)));
  try {
    assign_groups(Dataset(rs, "t"), Community::SC);
    FAIL("expected AllControl");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllControl);
  }
}

TEST_CASE("match covariates require electricity") {
  auto r = village("a");
  r.electricity.reset();
  CHECK_THROWS_AS(match_covariates(r), Error);
  const auto c = match_covariates(village("b"));
  CHECK(c[3] == 1.0);
  CHECK(c[4] == 800.0);
}

TEST_CASE("exact duplicate matches at distance zero") {
  Rng rng(1);
  std::vector<VillageRecord> control;
  for (int i = 0; i < 50; ++i) control.push_back(random_village(rng, "c" + std::to_string(i)));
  auto t = control[17];
  t.village_id = "t0";
  const std::vector<VillageRecord> treatment{t};
  const auto space = build_match_space(treatment, control);
  const auto m = match(treatment, control, space);
  CHECK(m.pairs[0].control_id == "c17");
  CHECK(m.pairs[0].distance == 0.0);
}

TEST_CASE("kd-tree agrees with a linear scan, ties to the smallest id") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<VillageRecord> treatment, control;
    for (int i = 0; i < 500; ++i)
      control.push_back(random_village(rng, "c" + std::to_string(1000 + i)));
    for (int i = 0; i < 200; ++i) {
      treatment.push_back(random_village(rng, "t" + std::to_string(i)));
      if (i % 7 == 0) {
        treatment.back() = control[static_cast<std::size_t>(3 * i % 500)];
        treatment.back().village_id = "t" + std::to_string(i);
      }
    }
    // Duplicate controls whose ids sort earlier must win the tie.
    for (int i = 0; i < 500; i += 21) {
      auto twin = control[static_cast<std::size_t>(i)];
      twin.village_id = "c0" + std::to_string(i);
      control.push_back(twin);
    }
    std::vector<std::vector<double>> traw, craw;
    std::vector<std::string> ids;
    for (const auto& r : treatment) traw.push_back(raw(r));
    for (const auto& r : control) {
      craw.push_back(raw(r));
      ids.push_back(r.village_id);
    }
    const auto space = build_match_space(treatment, control);
    const auto got = match(treatment, control, space, 1 + trial % 3);
    const auto expected = oracle::scan_nearest(traw, craw, ids);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      REQUIRE(got.pairs[i].control_index == expected[i].control_index);
      REQUIRE(std::abs(got.pairs[i].distance - expected[i].distance) <= 1e-12);
      REQUIRE(got.pairs[i].treatment_index == i);
    }
    std::size_t total = 0;
    for (auto [uses, count] : got.reuse_histogram) total += uses * count;
    CHECK(total == treatment.size());
    CHECK(got.n_control_pool == control.size());
  }
}

TEST_CASE("equidistant candidates resolve to the smaller id") {
  // Latitudes average to exactly 20, so both neighbours sit at 1 / sd.
  auto q = village("t");
  q.lat = 20.0;
  auto left = village("b");
  left.lat = 19.0;
  auto right = village("a");
  right.lat = 21.0;
  auto far = village("c");
  far.lat = 20.0;
  far.lon = 90.0;
  const std::vector<VillageRecord> treatment{q};
  const std::vector<VillageRecord> control{left, right, far};
  const auto m = match(treatment, control, build_match_space(treatment, control));
  CHECK(m.pairs[0].control_id == "a");
}

TEST_CASE("zero-spread covariates are dropped with a warning") {
  Rng rng(3);
  std::vector<VillageRecord> t, c;
  for (int i = 0; i < 20; ++i) {
    t.push_back(random_village(rng, "t" + std::to_string(i)));
    c.push_back(random_village(rng, "c" + std::to_string(i)));
  }
  for (auto* v : {&t, &c})
    for (auto& r : *v) r.population = 500;
  const auto space = build_match_space(t, c);
  CHECK(space.dims() == 4);
  CHECK_FALSE(space.active[4]);
  REQUIRE(space.warnings.size() == 1);
  CHECK(space.warnings[0].find("population") != std::string::npos);
}

TEST_CASE("matching is invariant to covariate units") {
  Rng rng(4);
  std::vector<VillageRecord> t, c;
  for (int i = 0; i < 100; ++i) t.push_back(random_village(rng, "t" + std::to_string(i)));
  for (int i = 0; i < 300; ++i) c.push_back(random_village(rng, "c" + std::to_string(i)));
  const auto base = match(t, c, build_match_space(t, c));
  auto scale = [](std::vector<VillageRecord> v) {
    for (auto& r : v) r.population *= 1000;
    return v;
  };
  const auto t2 = scale(t), c2 = scale(c);
  const auto scaled = match(t2, c2, build_match_space(t2, c2));
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(base.pairs[i].control_index == scaled.pairs[i].control_index);
  }
}

TEST_CASE("a match depends only on its own query and the pool") {
  Rng rng(5);
  std::vector<VillageRecord> t, c;
  for (int i = 0; i < 60; ++i) t.push_back(random_village(rng, "t" + std::to_string(i)));
  for (int i = 0; i < 200; ++i) c.push_back(random_village(rng, "c" + std::to_string(i)));
  const auto space = build_match_space(t, c);
  const auto all = match(t, c, space);
  std::vector<VillageRecord> fewer(t.begin() + 1, t.end());
  const auto rest = match(fewer, c, space);
  for (std::size_t i = 0; i < fewer.size(); ++i) {
    CHECK(rest.pairs[i].control_id == all.pairs[i + 1].control_id);
  }
}

TEST_CASE("Mahalanobis metric matches a brute-force quadratic form") {
  Rng rng(6);
  std::vector<VillageRecord> t, c;
  for (int i = 0; i < 80; ++i) t.push_back(random_village(rng, "t" + std::to_string(i)));
  for (int i = 0; i < 250; ++i) {
    auto r = random_village(rng, "c" + std::to_string(i));
    r.lon = 70 + 0.5 * (r.lat - 8) + rng.uniform(0, 4);  // correlated
    c.push_back(r);
  }
  const auto space = build_match_space(t, c, MatchMetric::Mahalanobis);
  const auto got = match(t, c, space);
  std::vector<double> dist;
  const auto expected = mahalanobis_scan(t, c, &dist);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(got.pairs[i].control_index == expected[i]);
    CHECK(got.pairs[i].distance == doctest::Approx(dist[i]).epsilon(1e-9));
  }
}

TEST_CASE("pairs CSV") {
  auto q = village("t1");
  auto a = village("c1");
  a.lat = 21;
  auto b = village("c2");
  b.lat = 25;
  const std::vector<VillageRecord> t{q}, c{a, b};
  std::ostringstream out;
  write_pairs_csv(match(t, c, build_match_space(t, c)), out);
  CHECK(out.str().rfind("treatment_id,control_id,distance\nt1,c1,", 0) == 0);
}
