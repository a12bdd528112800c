#include "geofair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "geofair/csv.hpp"
#include "geofair/error.hpp"
#include "geofair/rng.hpp"

namespace geofair {

namespace {

constexpr std::uint64_t kStreamLayout = 1;
constexpr std::uint64_t kStreamState = 2;

constexpr double kLatMin = 8.0, kLatMax = 32.0;
constexpr double kLonMin = 70.0, kLonMax = 90.0;
constexpr double kCoordSd = 0.5;
constexpr std::uint32_t kMinVillagesPerState = 10;

double clip(double x, double lo, double hi) { return std::clamp(x, lo, hi); }

template <typename T>
T parse_number(const KeyValueConfig& kv, std::string_view key, T fallback) {
  auto text = kv.get(key);
  if (!text) return fallback;
  if constexpr (std::is_floating_point_v<T>) {
    double v = 0.0;
    if (!csv::parse_double(*text, v)) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string(key) + ": not a number: '" + *text + "'");
    }
    return v;
  } else {
    long long v = 0;
    if (!csv::parse_int64(*text, v) || v < 0) {
      throw Error(ErrorCode::InvalidConfig, std::string(key) +
                                                ": not a non-negative integer: '" +
                                                *text + "'");
    }
    return static_cast<T>(v);
  }
}

Sign sign_of(double x) {
  if (x > 0) return Sign::Positive;
  if (x < 0) return Sign::Negative;
  return Sign::None;
}

std::string zero_pad(std::uint32_t value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return digits;
}

Sign flip(Sign s) { return static_cast<Sign>(-static_cast<int>(s)); }

struct Village {
  VillageRecord record;
  double noise = 0.0;
};

}  // namespace

void SynthConfig::validate() const {
  if (n_states < 3) {
    throw Error(ErrorCode::InvalidConfig, "n_states must be >= 3");
  }
  if (static_cast<std::uint64_t>(n_villages) <
      std::uint64_t{kMinVillagesPerState} * n_states) {
    throw Error(ErrorCode::InvalidConfig, "n_villages must be >= 10 * n_states");
  }
  if (!std::isfinite(delta_st) || !std::isfinite(delta_sc)) {
    throw Error(ErrorCode::InvalidConfig, "deltas must be finite");
  }
  if (!std::isfinite(noise_sd) || noise_sd < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "noise_sd must be finite and >= 0");
  }
}

SynthConfig SynthConfig::from_config(const KeyValueConfig& kv) {
  static constexpr std::string_view known[] = {
      "n_states", "n_villages", "seed", "delta_st", "delta_sc", "noise_sd"};
  for (const auto& [key, value] : kv.entries()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error(ErrorCode::InvalidConfig, "unknown synth key '" + key + "'");
    }
  }
  SynthConfig cfg;
  cfg.n_states = parse_number<std::uint32_t>(kv, "n_states", cfg.n_states);
  cfg.n_villages = parse_number<std::uint32_t>(kv, "n_villages", cfg.n_villages);
  cfg.seed = parse_number<std::uint64_t>(kv, "seed", cfg.seed);
  cfg.delta_st = parse_number<double>(kv, "delta_st", cfg.delta_st);
  cfg.delta_sc = parse_number<double>(kv, "delta_sc", cfg.delta_sc);
  cfg.noise_sd = parse_number<double>(kv, "noise_sd", cfg.noise_sd);
  return cfg;
}

double synth_log_ntl_mean(const VillageRecord& r, const SynthConfig& cfg,
                          bool sc_above_median) {
  const double elec = r.electricity.value_or(false) ? 1.0 : 0.0;
  return 0.4 + 1.2 * (1.0 - r.poverty_rate) + 0.5 * elec +
         0.15 * std::log1p(static_cast<double>(r.population)) -
         cfg.delta_st * (r.share_st > 0.0 ? 1.0 : 0.0) +
         cfg.delta_sc * (sc_above_median ? 1.0 : 0.0);
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::uint32_t n_states = cfg.n_states;

  // Layout: state centers, effects and sizes from one stream.
  Rng layout(derive_seed(cfg.seed, kStreamLayout));
  const auto rows = static_cast<std::uint32_t>(
      std::ceil(std::sqrt(static_cast<double>(n_states))));
  const std::uint32_t cols = (n_states + rows - 1) / rows;
  const double dlat = (kLatMax - kLatMin) / rows;
  const double dlon = (kLonMax - kLonMin) / cols;

  std::vector<double> center_lat(n_states), center_lon(n_states);
  std::vector<double> effect(n_states), weight(n_states);
  for (std::uint32_t s = 0; s < n_states; ++s) {
    const std::uint32_t r = s / cols;
    const std::uint32_t c = s % cols;
    center_lat[s] = kLatMin + (r + 0.5 + layout.uniform(-0.25, 0.25)) * dlat;
    center_lon[s] = kLonMin + (c + 0.5 + layout.uniform(-0.25, 0.25)) * dlon;
    effect[s] = layout.normal();
    weight[s] = layout.gamma(2.0);
  }

  // Village counts: a floor of 10 per state, remainder by largest remainder
  // on the drawn weights.
  std::vector<std::uint32_t> count(n_states, kMinVillagesPerState);
  {
    const std::uint32_t spare = cfg.n_villages - kMinVillagesPerState * n_states;
    const double total_w = std::accumulate(weight.begin(), weight.end(), 0.0);
    std::vector<double> remainder(n_states);
    std::uint32_t assigned = 0;
    for (std::uint32_t s = 0; s < n_states; ++s) {
      const double share = spare * weight[s] / total_w;
      const auto whole = static_cast<std::uint32_t>(std::floor(share));
      count[s] += whole;
      assigned += whole;
      remainder[s] = share - whole;
    }
    std::vector<std::uint32_t> order(n_states);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return remainder[a] > remainder[b];
    });
    for (std::uint32_t i = 0; assigned < spare; ++i, ++assigned) {
      ++count[order[i % n_states]];
    }
  }

  // Centre the state effects on their village-weighted mean so the drawn
  // regional mix cannot shift the overall poverty level.
  {
    double sum = 0.0;
    for (std::uint32_t s = 0; s < n_states; ++s) sum += effect[s] * count[s];
    const double mean = sum / cfg.n_villages;
    for (auto& e : effect) e -= mean;
  }

  std::vector<Village> villages;
  villages.reserve(cfg.n_villages);
  const int id_width = static_cast<int>(std::to_string(cfg.n_villages).size());
  const int state_width = std::max(2, static_cast<int>(std::to_string(n_states).size()));
  std::uint32_t global = 0;
  for (std::uint32_t s = 0; s < n_states; ++s) {
    Rng rng(derive_seed(cfg.seed, kStreamState, s));
    const std::string state_id = "S" + zero_pad(s, state_width);
    for (std::uint32_t i = 0; i < count[s]; ++i, ++global) {
      Village v;
      auto& r = v.record;
      r.village_id = "V" + zero_pad(global, id_width);
      r.state_id = state_id;
      r.lat = clip(rng.normal(center_lat[s], kCoordSd), -90.0, 90.0);
      r.lon = clip(rng.normal(center_lon[s], kCoordSd), -180.0, 180.0);
      r.population = std::llround(rng.lognormal(6.65, 1.0));
      r.share_sc = rng.beta(1.2, 5.5);
      r.share_st = rng.bernoulli(0.55) ? 0.0 : rng.beta(0.8, 1.6);
      r.poverty_rate =
          clip(0.35 + 0.15 * effect[s] + rng.normal(0.0, 0.18), 0.0, 1.0);
      const double p_elec = clip(0.9 - 0.8 * r.poverty_rate, 0.05, 0.95);
      r.electricity = rng.bernoulli(p_elec);
      if (rng.bernoulli(0.3)) r.electricity.reset();
      v.noise = cfg.noise_sd * rng.normal();
      villages.push_back(std::move(v));
    }
  }

  std::vector<double> sc;
  sc.reserve(villages.size());
  for (const auto& v : villages) sc.push_back(v.record.share_sc);
  const double sc_median = median(std::move(sc));

  std::vector<VillageRecord> records;
  records.reserve(villages.size());
  for (auto& v : villages) {
    auto& r = v.record;
    const double log_ntl =
        synth_log_ntl_mean(r, cfg, r.share_sc > sc_median) + v.noise;
    r.ntl = clip(std::expm1(log_ntl), 0.0, kNtlMax);
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records),
                 "synth(seed=" + std::to_string(cfg.seed) + ")");
}

GroundTruthBias ground_truth_bias(const SynthConfig& cfg) {
  GroundTruthBias g;
  // Suppressed light (delta_st > 0) => poverty over-predicted, electricity
  // under-predicted.
  g.st.poverty = sign_of(cfg.delta_st);
  g.st.electricity = flip(g.st.poverty);
  // Inflated light (delta_sc > 0) => the opposite.
  g.sc.electricity = sign_of(cfg.delta_sc);
  g.sc.poverty = flip(g.sc.electricity);
  return g;
}

}  // namespace geofair
