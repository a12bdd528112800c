#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geofair/data.hpp"
#include "geofair/types.hpp"

namespace geofair {

/// Treatment (s) = community share strictly above the subset median;
/// control (not s) = the rest.
struct GroupAssignment {
  Community community = Community::ST;
  double median = 0.0;
  std::vector<bool> is_treatment;  // aligned with the audited subset
  std::size_t n_treatment = 0;
  std::size_t n_control = 0;
};

/// Throws AllTreatment / AllControl when one side comes out empty.
GroupAssignment assign_groups(const Dataset& subset, Community community);

enum class MatchMetric { Euclidean, Mahalanobis };
std::string_view to_string(MatchMetric m);

inline constexpr std::array<std::string_view, 5> kMatchFeatures = {
    "lat", "lon", "poverty_rate", "electricity", "population"};

/// Raw match covariates of a record; throws MissingFeature when
/// electricity is absent.
std::array<double, 5> match_covariates(const VillageRecord& r);

/// z-standardisation parameters taken from the pooled treatment and control
/// villages. Features with zero spread are dropped.
struct MatchSpace {
  std::array<double, 5> mean{};
  std::array<double, 5> sd{};
  std::array<bool, 5> active{};
  MatchMetric metric = MatchMetric::Euclidean;
  /// Lower-triangular inverse Cholesky factor of the standardised active
  /// covariates' covariance (Mahalanobis only), row-major active x active.
  std::vector<double> whitening;
  std::vector<std::string> warnings;

  std::size_t dims() const;
  /// Coordinates in which Euclidean distance is the matching distance.
  std::vector<double> embed(const VillageRecord& r) const;
};

MatchSpace build_match_space(std::span<const VillageRecord> treatment,
                             std::span<const VillageRecord> control,
                             MatchMetric metric = MatchMetric::Euclidean);

struct MatchedPair {
  std::size_t treatment_index = 0;  // into the treatment span
  std::size_t control_index = 0;    // into the control span
  std::string treatment_id;
  std::string control_id;
  double distance = 0.0;
};

struct MatchedPairSet {
  std::vector<MatchedPair> pairs;  // one per treatment village, same order
  std::size_t n_treatment = 0;
  std::size_t n_control_pool = 0;
  std::size_t n_control_unique = 0;
  /// times-used -> number of controls used that many times
  std::map<std::size_t, std::size_t> reuse_histogram;
  std::size_t max_reuse = 0;
};

/// Exact nearest control for every treatment village, with replacement.
/// Equidistant controls resolve to the lexicographically smallest
/// village_id.
MatchedPairSet match(std::span<const VillageRecord> treatment,
                     std::span<const VillageRecord> control,
                     const MatchSpace& space, unsigned jobs = 1);

/// CSV `treatment_id,control_id,distance`.
void write_pairs_csv(const MatchedPairSet& pairs, std::ostream& out);

}  // namespace geofair
