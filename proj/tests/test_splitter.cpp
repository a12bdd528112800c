#include <doctest.h>

#include "geofair/error.hpp"
#include "geofair/rng.hpp"
#include "geofair/splitter.hpp"
#include "geofair/synth.hpp"
#include "helpers.hpp"

using namespace geofair;
using geofair::testing::village;

namespace {

StateTotals st(std::string id, std::int64_t pop, std::size_t villages = 1) {
  return {std::move(id), pop, villages};
}

Dataset states_dataset(const std::vector<std::pair<std::string, int>>& pops) {
  std::vector<VillageRecord> rs;
  int n = 0;
  for (const auto& [state, pop] : pops) {
    auto r = village("v" + std::to_string(n++), state);
    r.population = pop;
    rs.push_back(r);
  }
  return Dataset(rs, "t");
}

}  // namespace

TEST_CASE("first crossing of the population threshold") {
  const auto s = split_in_order({st("A", 40), st("B", 35), st("C", 25)}, 2.0 / 3);
  CHECK(s.train_states == std::set<std::string>{"A", "B"});
  CHECK(s.test_states == std::set<std::string>{"C"});
  CHECK(s.achieved_train_pop_frac == doctest::Approx(0.75));
  CHECK_FALSE(s.degenerate);
}

TEST_CASE("exhausting draw moves the last state to test") {
  const auto s = split_in_order({st("first", 50), st("second", 50)}, 2.0 / 3);
  CHECK(s.train_states == std::set<std::string>{"first"});
  CHECK(s.test_states == std::set<std::string>{"second"});
  CHECK(s.degenerate);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("Degenerate") != std::string::npos);
}

TEST_CASE("village fraction is reported next to population fraction") {
  const auto s = split_in_order(
      {st("A", 40, 10), st("B", 35, 30), st("C", 25, 60)}, 2.0 / 3);
  CHECK(s.achieved_train_village_frac == doctest::Approx(0.4));
}

TEST_CASE("a single state cannot be split") {
  CHECK_THROWS_AS(spatial_split(states_dataset({{"A", 5}, {"A", 7}}), 2.0 / 3, 1),
                  Error);
  try {
    split_in_order({st("A", 1)}, 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleState);
  }
}

TEST_CASE("greedy folds balance population") {
  const auto f = assign_folds_in_order(
      {st("a", 50), st("b", 30), st("c", 20), st("d", 10), st("e", 5)}, 3);
  CHECK(f.states_in(0) == std::vector<std::string>{"a"});
  CHECK(f.states_in(1) == std::vector<std::string>{"b", "e"});
  CHECK(f.states_in(2) == std::vector<std::string>{"c", "d"});
}

TEST_CASE("three training states give one per fold") {
  const auto f = assign_folds_in_order({st("x", 1), st("y", 100), st("z", 3)}, 3);
  for (int k = 0; k < 3; ++k) CHECK(f.states_in(k).size() == 1);
  const auto zero = assign_folds_in_order({st("x", 0), st("y", 0), st("z", 0)}, 3);
  for (int k = 0; k < 3; ++k) CHECK(zero.states_in(k).size() == 1);
}

TEST_CASE("too few training states for k folds") {
  const auto ds = states_dataset({{"A", 10}, {"B", 10}, {"C", 10}});
  const auto split = spatial_split(ds, 0.5, 3);
  try {
    spatial_folds(ds, split, 3, 3);
    FAIL("expected TooFewStates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewStates);
  }
}

TEST_CASE("split contract holds across seeds and ignores row order") {
  SynthConfig cfg;
  cfg.n_villages = 3000;
  cfg.n_states = 20;
  cfg.seed = 4;
  const auto ds = generate(cfg);
  std::vector<VillageRecord> shuffled(ds.begin(), ds.end());
  Rng rng(8);
  rng.shuffle(std::span<VillageRecord>(shuffled));
  const Dataset permuted(shuffled, "perm");
  const auto totals = state_totals(ds);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = spatial_split(ds, 2.0 / 3, seed);
    REQUIRE_FALSE(s.test_states.empty());
    REQUIRE_FALSE(s.train_states.empty());
    REQUIRE(s.train_states.size() + s.test_states.size() == 20);
    for (const auto& t : s.train_states) REQUIRE_FALSE(s.test_states.contains(t));
    if (!s.degenerate) REQUIRE(s.achieved_train_pop_frac >= 2.0 / 3);

    const auto again = spatial_split(permuted, 2.0 / 3, seed);
    REQUIRE(again.train_states == s.train_states);
    REQUIRE(again.draw_order == s.draw_order);

    const auto folds = spatial_folds(ds, s, 3, seed);
    REQUIRE(folds.fold_of_state.size() == s.train_states.size());
    for (int k = 0; k < 3; ++k) REQUIRE_FALSE(folds.states_in(k).empty());
  }
}

TEST_CASE("split artifact JSON round-trip") {
  SplitArtifact a;
  a.split = split_in_order({st("A", 40), st("B", 35), st("C", 25), st("D", 3)},
                           2.0 / 3);
  a.split.seed = 42;
  a.folds = assign_folds_in_order({st("A", 40), st("B", 35)}, 2);
  const auto text = split_to_json(a);
  const auto back = split_from_json(text);
  CHECK(back.split.train_states == a.split.train_states);
  CHECK(back.split.test_states == a.split.test_states);
  CHECK(back.split.seed == 42);
  CHECK(back.split.achieved_train_pop_frac == a.split.achieved_train_pop_frac);
  REQUIRE(back.folds.has_value());
  CHECK(back.folds->fold_of_state == a.folds->fold_of_state);
  CHECK(split_to_json(back) == text);

  CHECK_THROWS_AS(split_from_json("{\"format\":\"other\"}"), Error);
  CHECK_THROWS_AS(split_from_json("not json"), Error);
}
