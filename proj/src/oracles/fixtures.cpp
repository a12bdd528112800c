#include <cmath>
#include <ostream>
#include <string>

#include "geofair/forest.hpp"
#include "geofair/matching.hpp"
#include "geofair/models.hpp"
#include "geofair/oracles.hpp"
#include "geofair/rng.hpp"
#include "geofair/stats.hpp"

namespace geofair::oracle {

namespace {

VillageRecord village(std::string id, double lat, double lon, double ntl,
                      double poverty) {
  VillageRecord r;
  r.village_id = std::move(id);
  r.state_id = "S0";
  r.lat = lat;
  r.lon = lon;
  r.ntl = ntl;
  r.population = 500;
  r.poverty_rate = poverty;
  r.electricity = true;
  return r;
}

bool check(std::ostream& log, const std::string& name, bool ok,
           const std::string& detail = {}) {
  log << (ok ? "PASS " : "FAIL ") << name;
  if (!detail.empty()) log << "  (" << detail << ")";
  log << '\n';
  return ok;
}

bool ols_fixture(std::ostream& log) {
  const Dataset ds(
      {village("a", 12.0, 75.0, 0.0, 0.61), village("b", 14.5, 79.0, 2.5, 0.42),
       village("c", 20.0, 77.5, 7.0, 0.30), village("d", 25.0, 84.0, 1.0, 0.55),
       village("e", 29.0, 88.0, 15.0, 0.12), village("f", 17.0, 81.0, 4.0, 0.35)},
      "selftest");
  const FeatureRecipe recipe{true, true};
  const auto model = fit_ols(ds, recipe, Target::Poverty);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (const auto& r : ds) {
    rows.push_back({1.0, std::log1p(r.ntl), r.lat, r.lon});
    y.push_back(r.poverty_rate);
  }
  const auto expected = normal_equations(rows, y);
  const auto& got = std::get<OlsModel>(model.model).coefficients;
  double worst = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    worst = std::max(worst, std::abs(expected[i] - got[i]));
  }
  return check(log, "ols-vs-normal-equations", worst <= 1e-8,
               "max |diff| = " + std::to_string(worst));
}

bool nn_fixture(std::ostream& log) {
  Rng rng(20240611);
  std::vector<VillageRecord> treatment, control;
  std::vector<std::vector<double>> traw, craw;
  std::vector<std::string> cids;
  auto make = [&](const std::string& id) {
    VillageRecord r;
    r.village_id = id;
    r.state_id = "S0";
    r.lat = rng.uniform(8, 32);
    r.lon = rng.uniform(70, 90);
    r.poverty_rate = rng.uniform();
    r.electricity = rng.bernoulli(0.6);
    r.population = static_cast<std::int64_t>(rng.below(5000));
    return r;
  };
  auto raw = [](const VillageRecord& r) {
    return std::vector<double>{r.lat, r.lon, r.poverty_rate,
                               *r.electricity ? 1.0 : 0.0,
                               static_cast<double>(r.population)};
  };
  for (int i = 0; i < 500; ++i) {
    control.push_back(make("c" + std::to_string(1000 + i)));
  }
  for (int i = 0; i < 200; ++i) {
    treatment.push_back(make("t" + std::to_string(i)));
    if (i % 10 == 0) {  // exact duplicate of a control, and a tie pair
      auto dup = control[static_cast<std::size_t>(i)];
      dup.village_id = "t" + std::to_string(i);
      treatment.back() = dup;
    }
  }
  auto twin = control[7];
  twin.village_id = "c0007";  // sorts before "c1007"
  control.push_back(twin);
  for (const auto& r : treatment) traw.push_back(raw(r));
  for (const auto& r : control) {
    craw.push_back(raw(r));
    cids.push_back(r.village_id);
  }
  const auto space = build_match_space(treatment, control);
  const auto got = match(treatment, control, space);
  const auto expected = scan_nearest(traw, craw, cids);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (got.pairs[i].control_index != expected[i].control_index ||
        std::abs(got.pairs[i].distance - expected[i].distance) > 1e-12) {
      ++mismatches;
    }
  }
  return check(log, "kdtree-vs-scan", mismatches == 0,
               std::to_string(mismatches) + " mismatches of " +
                   std::to_string(expected.size()));
}

bool u_fixture(std::ostream& log) {
  const std::vector<double> a{1, 3, 5, 5, 2, 2};
  const std::vector<double> b{2, 4, 5, 0, 2};
  const double got = mann_whitney_u(a, b).statistic;
  const double expected = pairwise_u(a, b);
  return check(log, "u-vs-pairwise-count", got == expected,
               std::to_string(got) + " vs " + std::to_string(expected));
}

bool t_fixture(std::ostream& log) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{2, 3, 4};
  const auto r = welch_t(a, b);
  const double p_oracle = 2.0 * t_cdf_quadrature(-std::abs(r.statistic), 4.0);
  const bool ok = std::abs(r.statistic + 1.224745) <= 1e-6 &&
                  std::abs(r.degrees_of_freedom - 4.0) <= 1e-9 &&
                  std::abs(r.p_two_sided - p_oracle) <= 1e-10;
  return check(log, "welch-t-fixture", ok,
               "t=" + std::to_string(r.statistic) +
                   " df=" + std::to_string(r.degrees_of_freedom));
}

bool split_fixture(std::ostream& log) {
  const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
  const std::vector<double> y{1.0, 1.5, 6.0, 5.0};
  Matrix m(4, 1);
  for (std::size_t i = 0; i < 4; ++i) m(i, 0) = x[i];
  const std::vector<std::uint32_t> counts(4, 1);
  const auto tree = grow_tree(m, y, counts, 1, 1);
  const auto expected = exhaustive_split(x, y);
  const bool ok = tree.nodes.size() == 3 &&
                  tree.nodes[0].threshold == expected.threshold &&
                  std::abs(tree.nodes[1].value - expected.left_mean) <= 1e-12 &&
                  std::abs(tree.nodes[2].value - expected.right_mean) <= 1e-12;
  return check(log, "tree-split-vs-exhaustive", ok);
}

}  // namespace

bool run_selftest(std::ostream& log) {
  bool ok = true;
  for (auto* fn : {&ols_fixture, &nn_fixture, &u_fixture, &t_fixture,
                   &split_fixture}) {
    try {
      ok = fn(log) && ok;
    } catch (const std::exception& e) {
      log << "FAIL exception: " << e.what() << '\n';
      ok = false;
    }
  }
  return ok;
}

}  // namespace geofair::oracle
