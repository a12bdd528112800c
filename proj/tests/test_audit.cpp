#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geofair/audit.hpp"
#include "geofair/error.hpp"
#include "geofair/rng.hpp"
#include "helpers.hpp"
#include "pipeline.hpp"

using namespace geofair;
using geofair::testing::village;

namespace {

TrainedModel constant_ols(double c, Target t, std::set<std::string> states = {"TRAIN"}) {
  TrainedModel m;
  m.model = OlsModel{{c, 0.0}};
  m.recipe = {true, false};
  m.target = t;
  m.train_states = std::move(states);
  return m;
}

// Test villages whose poverty equals a known function of ntl.
Dataset exact_dataset(Rng& rng, std::size_t n) {
  std::vector<VillageRecord> rs;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = village("v" + std::to_string(i), "S" + std::to_string(i % 4));
    r.ntl = rng.uniform(0, 20);
    r.poverty_rate = 0.1 + 0.2 * std::log1p(r.ntl);
    r.lat = rng.uniform(8, 32);
    r.lon = rng.uniform(70, 90);
    r.population = 100 + static_cast<std::int64_t>(rng.below(3000));
    r.share_st = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
    r.share_sc = rng.uniform(0, 0.4);
    r.electricity = rng.bernoulli(0.7);
    if (i % 10 == 0) r.electricity.reset();
    rs.push_back(r);
  }
  return Dataset(rs, "exact");
}

}  // namespace

TEST_CASE("residual is prediction minus truth") {
  const Dataset ds({village("a", "S0", 1.0, 0.3), village("b", "S0", 1.0, 0.7)}, "t");
  const auto eps = residuals(constant_ols(0.5, Target::Poverty), ds);
  CHECK(eps[0] == doctest::Approx(0.2));
  CHECK(eps[1] == doctest::Approx(-0.2));

  auto missing = village("c");
  missing.electricity.reset();
  try {
    residuals(constant_ols(0.5, Target::Electricity), Dataset({missing}, "t"));
    FAIL("expected MissingTarget");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTarget);
  }
}

TEST_CASE("a zero-error model shows no difference") {
  Rng rng(1);
  const auto ds = exact_dataset(rng, 400);
  TrainedModel m;
  m.model = OlsModel{{0.1, 0.2}};
  m.recipe = {true, false};
  m.train_states = {"elsewhere"};
  AuditSpec spec;
  spec.model = &m;
  const auto rep = run_audit(ds, spec);
  CHECK(std::abs(rep.mean_residual_diff) <= 1e-12);
  CHECK(rep.p_t == doctest::Approx(1.0));
  CHECK(rep.n_pairs == rep.n_treatment);
  CHECK(rep.n_audited < ds.size());  // rows without electricity are excluded
  CHECK(rep.group_median == 0.0);
}

TEST_CASE("auditing training states is refused unless explicitly allowed") {
  Rng rng(2);
  const auto ds = exact_dataset(rng, 200);
  const auto m = constant_ols(0.4, Target::Poverty, {"S1", "S9"});
  AuditSpec spec;
  spec.model = &m;
  try {
    run_audit(ds, spec);
    FAIL("expected RefusesTrainTestOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RefusesTrainTestOverlap);
    CHECK(std::string(e.what()).find("S1") != std::string::npos);
  }
  spec.options.unsafe_in_sample = true;
  CHECK_NOTHROW(run_audit(ds, spec));
}

TEST_CASE("model and audit targets must agree") {
  Rng rng(3);
  const auto ds = exact_dataset(rng, 100);
  const auto m = constant_ols(0.4, Target::Poverty, {"X"});
  AuditSpec spec;
  spec.model = &m;
  spec.target = Target::Electricity;
  CHECK_THROWS_AS(run_audit(ds, spec), Error);
}

TEST_CASE("matched controls are counted with multiplicity") {
  // Two treatment villages both nearest to control c1; c2 is far away.
  auto t1 = village("t1");
  t1.share_st = 0.5;
  t1.poverty_rate = 0.5;
  auto t2 = t1;
  t2.village_id = "t2";
  t2.lat = 20.2;
  auto c1 = village("c1");
  c1.lat = 20.1;
  c1.poverty_rate = 0.5;
  auto c2 = village("c2");
  c2.lat = 31;
  c2.poverty_rate = 0.1;
  const Dataset ds({t1, t2, c1, c2}, "t");
  const auto m = constant_ols(0.3, Target::Poverty, {"X"});
  AuditSpec spec;
  spec.model = &m;
  const auto rep = run_audit(ds, spec);
  CHECK(rep.n_pairs == 2);
  CHECK(rep.n_control_unique == 1);
  CHECK(rep.max_reuse == 2);
  CHECK(rep.mean_residual_control == doctest::Approx(-0.2));
  CHECK(rep.mean_residual_treatment == doctest::Approx(-0.2));
}

TEST_CASE("audit recovers a planted ST nightlight suppression") {
  SynthConfig cfg;
  cfg.n_villages = 20000;
  cfg.delta_st = 0.3;
  cfg.seed = 5;
  const auto ds = generate(cfg);
  ForestHyper hp;
  hp.n_estimators = 20;
  hp.max_depth = 8;
  hp.min_samples_leaf = 25;
  const auto run = geofair::testing::run_pipeline(ds, cfg.seed, hp);
  const auto matrix = audit_matrix(run.test, run.models, {Community::ST},
                                   {Target::Poverty, Target::Electricity}, {});
  const auto truth = ground_truth_bias(cfg);
  for (ModelKind panel : {ModelKind::Ols, ModelKind::RandomForest}) {
    const auto& pov = matrix.at(panel, Community::ST, Target::Poverty).report;
    const auto& ele = matrix.at(panel, Community::ST, Target::Electricity).report;
    CHECK(pov.mean_residual_diff > 0);
    CHECK(ele.mean_residual_diff < 0);
    CHECK(pov.p_t < 0.01);
    CHECK(ele.p_t < 0.01);
    CHECK(static_cast<int>(truth.st.poverty) == pov.t_sign);
    CHECK(static_cast<int>(truth.st.electricity) == ele.t_sign);
  }
}

TEST_CASE("audit matrix is all-or-nothing") {
  Rng rng(4);
  const auto ds = exact_dataset(rng, 300);
  ModelSet models;
  for (Target t : {Target::Poverty, Target::Electricity}) {
    models[{ModelKind::Ols, t}] = constant_ols(0.4, t, {"X"});
    auto rf = constant_ols(0.4, t, {"X"});
    RandomForestModel f;
    f.forest.trees.push_back(RegressionTree{{TreeNode{}}});
    f.forest.trees[0].nodes[0].value = 0.4;
    f.hp.n_estimators = 1;
    rf.model = f;
    models[{ModelKind::RandomForest, t}] = rf;
  }
  const std::vector<Target> targets{Target::Poverty, Target::Electricity};
  const std::vector<Community> comms{Community::SC, Community::ST};
  const auto full = audit_matrix(ds, models, comms, targets, {});
  CHECK(full.cells.size() == 8);
  CHECK(full.cells[0].panel == ModelKind::Ols);
  CHECK(full.cells[0].community == Community::SC);
  CHECK(full.cells[0].target == Target::Poverty);

  AuditOptions threaded;
  threaded.jobs = 3;
  std::ostringstream a, b;
  write_report_csv(report_rows(full), a);
  write_report_csv(report_rows(audit_matrix(ds, models, comms, targets, threaded)), b);
  CHECK(a.str() == b.str());

  auto missing = models;
  missing.erase({ModelKind::RandomForest, Target::Electricity});
  CHECK_THROWS_AS(audit_matrix(ds, missing, comms, targets, {}), Error);

  auto mixed = models;
  mixed[{ModelKind::Ols, Target::Poverty}].train_states = {"Y"};
  CHECK_THROWS_AS(audit_matrix(ds, mixed, comms, targets, {}), Error);
}

TEST_CASE("report CSV round-trips and renders") {
  std::vector<ReportRow> rows{
      {"LR", Community::ST, Target::Poverty, 0.0123, 4.5, 0.0004, 1234.5, 0.002, 900},
      {"RF", Community::SC, Target::Electricity, -0.01, 1.7, 0.08, 99, 0.3, 12}};
  std::ostringstream out;
  write_report_csv(rows, out);
  std::istringstream in(out.str());
  const auto back = read_report_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].panel == "LR");
  CHECK(back[0].mean_diff == 0.0123);
  CHECK(back[1].n_pairs == 12);
  std::ostringstream again;
  write_report_csv(back, again);
  CHECK(again.str() == out.str());

  std::ostringstream text;
  write_report_text(rows, text);
  CHECK(text.str().find("Panel 1: Linear Regression") != std::string::npos);
  CHECK(text.str().find("Panel 2: Random Forest") != std::string::npos);
  CHECK(text.str().find("0.0123***") != std::string::npos);
  CHECK(text.str().find("-0.0100*") != std::string::npos);

  std::istringstream bad("panel,community\n");
  CHECK_THROWS_AS(read_report_csv(bad), Error);
}

TEST_CASE("significance stars") {
  CHECK(stars(0.001) == "***");
  CHECK(stars(0.01) == "**");
  CHECK(stars(0.049) == "**");
  CHECK(stars(0.05) == "*");
  CHECK(stars(0.1) == "");
}
