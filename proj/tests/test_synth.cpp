#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "geofair/error.hpp"
#include "geofair/stats.hpp"
#include "geofair/synth.hpp"

using namespace geofair;

namespace {

SynthConfig small(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_villages = 1000;
  cfg.n_states = 10;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  SynthConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_states = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.n_villages = 299;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.noise_sd = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.delta_st = std::nan("");
  CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("config file parsing") {
  std::istringstream in(
      "# synthetic run\n"
      "n_states = 12\n"
      "n_villages=2400  # small\n"
      "seed = 7\n"
      "delta_st = 0.3\n"
      "delta_sc = -0.2\n");
  const auto cfg = SynthConfig::from_config(KeyValueConfig::parse(in, "t"));
  CHECK(cfg.n_states == 12);
  CHECK(cfg.n_villages == 2400);
  CHECK(cfg.seed == 7);
  CHECK(cfg.delta_st == 0.3);
  CHECK(cfg.delta_sc == -0.2);
  CHECK(cfg.noise_sd == 0.5);

  std::istringstream bad("n_statez = 3\n");
  CHECK_THROWS_AS(SynthConfig::from_config(KeyValueConfig::parse(bad, "t")),
                  Error);
  std::istringstream junk("seed = seven\n");
  CHECK_THROWS_AS(SynthConfig::from_config(KeyValueConfig::parse(junk, "t")),
                  Error);
}

TEST_CASE("noise-free generation follows the closed form") {
  auto cfg = small(11);
  cfg.noise_sd = 0.0;
  cfg.delta_st = 0.0;
  cfg.delta_sc = 0.0;
  const auto ds = generate(cfg);
  for (const auto& r : ds) {
    const double e = r.electricity.value_or(false) ? 1.0 : 0.0;
    const double expected = std::clamp(
        std::exp(0.4 + 1.2 * (1.0 - r.poverty_rate) + 0.5 * e +
                 0.15 * std::log(1.0 + static_cast<double>(r.population))) -
            1.0,
        0.0, 63.0);
    REQUIRE(r.ntl == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("noise-free generation applies both bias channels") {
  auto cfg = small(12);
  cfg.noise_sd = 0.0;
  cfg.delta_st = 0.3;
  cfg.delta_sc = 0.2;
  const auto ds = generate(cfg);
  std::vector<double> sc;
  for (const auto& r : ds) sc.push_back(r.share_sc);
  const double sc_median = median(sc);
  for (const auto& r : ds) {
    const double e = r.electricity.value_or(false) ? 1.0 : 0.0;
    double log_ntl = 0.4 + 1.2 * (1.0 - r.poverty_rate) + 0.5 * e +
                     0.15 * std::log(1.0 + static_cast<double>(r.population));
    if (r.share_st > 0) log_ntl -= 0.3;
    if (r.share_sc > sc_median) log_ntl += 0.2;
    REQUIRE(r.ntl ==
            doctest::Approx(std::clamp(std::exp(log_ntl) - 1.0, 0.0, 63.0))
                .epsilon(1e-12));
  }
}

TEST_CASE("same seed, same data; different seed, different data") {
  SynthConfig cfg;
  cfg.seed = 1;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(a == b);
  cfg.seed = 2;
  CHECK_FALSE(generate(cfg) == a);
}

TEST_CASE("records are valid and well-shaped for 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto cfg = small(seed);
    const auto ds = generate(cfg);  // Dataset construction validates
    REQUIRE(ds.size() == cfg.n_villages);
    REQUIRE(ds.state_ids().size() == cfg.n_states);
    for (const auto& r : ds) {
      REQUIRE(r.lat >= 8.0 - 5.0);
      REQUIRE(r.lat <= 32.0 + 5.0);
      REQUIRE(r.lon >= 70.0 - 5.0);
      REQUIRE(r.lon <= 90.0 + 5.0);
    }
  }
}

TEST_CASE("default generator lands near the calibration targets") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto t = summarize(generate(cfg));
    CHECK(std::abs(t.at("poverty_rate").mean - 0.35) <= 0.03);
    CHECK(std::abs(t.at("share_sc").mean - 0.18) <= 0.03);
    CHECK(t.at("share_st").p50 == 0.0);
    const double coverage =
        static_cast<double>(t.at("electricity").n) / cfg.n_villages;
    CHECK(coverage == doctest::Approx(0.7).epsilon(0.03));
  }
}

TEST_CASE("unbiased generator does not leak ST membership into light") {
  // Within one covariate stratum, log(1 + ntl) must not differ between
  // villages with and without ST population.
  int rejections = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_villages = 20'000;
    const auto ds = generate(cfg);
    std::vector<double> with_st, without_st;
    for (const auto& r : ds) {
      if (!r.electricity || !*r.electricity) continue;
      if (r.poverty_rate < 0.25 || r.poverty_rate >= 0.45) continue;
      if (r.population < 400 || r.population >= 1600) continue;
      (r.share_st > 0 ? with_st : without_st).push_back(std::log1p(r.ntl));
    }
    if (welch_t(with_st, without_st).p_two_sided < 0.01) ++rejections;
  }
  CHECK(rejections <= 1);  // rate <= 0.05 over 20 seeds
}

TEST_CASE("ground-truth signs") {
  SynthConfig cfg;
  auto g = ground_truth_bias(cfg);
  CHECK(g.st.poverty == Sign::None);
  CHECK(g.st.electricity == Sign::None);
  CHECK(g.sc.poverty == Sign::None);
  CHECK(g.sc.electricity == Sign::None);

  cfg.delta_st = 0.3;
  g = ground_truth_bias(cfg);
  CHECK(g.st.poverty == Sign::Positive);
  CHECK(g.st.electricity == Sign::Negative);
  CHECK(g.sc.poverty == Sign::None);

  cfg.delta_st = 0.0;
  cfg.delta_sc = 0.3;
  g = ground_truth_bias(cfg);
  CHECK(g.sc.poverty == Sign::Negative);
  CHECK(g.sc.electricity == Sign::Positive);
  CHECK(g.st.poverty == Sign::None);
}
