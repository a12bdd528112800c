#pragma once

// Synthetic village generator with injectable nightlight bias.
//
// Per village, in order:
//   coordinates  ~ Normal(state center, 0.5 deg) per axis
//   population   = round(LogNormal(6.65, 1.0))
//   share_sc     ~ Beta(1.2, 5.5)
//   share_st     = 0 w.p. 0.55, else Beta(0.8, 1.6)
//   poverty_rate = clip(0.35 + 0.15 * state_effect + Normal(0, 0.18), 0, 1)
//   electricity  ~ Bernoulli(clip(0.9 - 0.8 * poverty_rate, 0.05, 0.95)),
//                  then blanked w.p. 0.3
//   log(1 + ntl) = 0.4 + 1.2 * (1 - poverty_rate) + 0.5 * electricity_or_zero
//                  + 0.15 * log(1 + population)
//                  - delta_st * [share_st > 0]
//                  + delta_sc * [share_sc > median(share_sc)]
//                  + Normal(0, noise_sd),   ntl clipped to [0, 63]
//
// State centers sit on a jittered grid over lat [8, 32] x lon [70, 90].
// Every village's draws come from a per-state substream derived from
// (seed, state index), so the output is a pure function of the config.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "geofair/config.hpp"
#include "geofair/data.hpp"
#include "geofair/types.hpp"

namespace geofair {

struct SynthConfig {
  std::uint32_t n_states = 30;
  std::uint32_t n_villages = 50'000;
  std::uint64_t seed = 0;
  double delta_st = 0.0;  // ST nightlight suppression
  double delta_sc = 0.0;  // SC nightlight inflation
  double noise_sd = 0.5;

  /// Throws InvalidConfig unless n_states >= 3, n_villages >= 10 * n_states,
  /// and the deltas and noise_sd are finite with noise_sd >= 0.
  void validate() const;

  /// Reads the SynthConfig keys (n_states, n_villages, seed, delta_st,
  /// delta_sc, noise_sd) from a key-value file; unknown keys are an error.
  static SynthConfig from_config(const KeyValueConfig& kv);
};

/// Noise-free part of log(1 + ntl) for one village.
double synth_log_ntl_mean(const VillageRecord& r, const SynthConfig& cfg,
                          bool sc_above_median);

Dataset generate(const SynthConfig& cfg);

struct ExpectedBias {
  Sign poverty = Sign::None;
  Sign electricity = Sign::None;
};

struct GroundTruthBias {
  ExpectedBias sc;
  ExpectedBias st;

  const ExpectedBias& at(Community c) const {
    return c == Community::SC ? sc : st;
  }
};

/// Expected sign of the matched residual difference (treatment minus
/// control) implied by the configured deltas. Lower light reads as higher
/// predicted poverty and lower predicted electrification.
GroundTruthBias ground_truth_bias(const SynthConfig& cfg);

}  // namespace geofair
