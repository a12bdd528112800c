#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "geofair/data.hpp"

namespace geofair {

/// Population and village count aggregated per state.
struct StateTotals {
  std::string state_id;
  std::int64_t population = 0;
  std::size_t villages = 0;
};

/// Sorted by state_id.
std::vector<StateTotals> state_totals(const Dataset& ds);

struct SplitAssignment {
  std::set<std::string> train_states;
  std::set<std::string> test_states;
  std::uint64_t seed = 0;
  double threshold = 2.0 / 3.0;
  std::vector<std::string> draw_order;  // full shuffled state order
  double achieved_train_pop_frac = 0.0;
  double achieved_train_village_frac = 0.0;
  /// Set when the draw consumed every state and the last one was moved to
  /// the test set; the population fraction may then fall below threshold.
  bool degenerate = false;
  std::vector<std::string> warnings;

  bool is_train(const std::string& state_id) const {
    return train_states.contains(state_id);
  }
};

/// Appends states in `order` to the training set until the cumulative
/// population first reaches threshold * total.
SplitAssignment split_in_order(const std::vector<StateTotals>& order,
                               double threshold);

/// Shuffles the sorted state ids by `seed` and applies split_in_order.
/// Throws SingleState when fewer than two states are present.
SplitAssignment spatial_split(const Dataset& ds, double threshold,
                              std::uint64_t seed);

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of_state;

  std::vector<std::string> states_in(int fold) const;
};

/// Greedy population balancing: each state in `order` goes to the fold with
/// the smallest population so far (then fewest states, then lowest index).
FoldAssignment assign_folds_in_order(const std::vector<StateTotals>& order,
                                     int k);

/// Throws TooFewStates when fewer than k training states exist.
FoldAssignment spatial_folds(const Dataset& ds, const SplitAssignment& split,
                             int k, std::uint64_t seed);

/// Versioned JSON document holding the split and (optionally) its folds.
struct SplitArtifact {
  SplitAssignment split;
  std::optional<FoldAssignment> folds;
};

std::string split_to_json(const SplitArtifact& artifact);
SplitArtifact split_from_json(const std::string& text);
void save_split(const SplitArtifact& artifact,
                const std::filesystem::path& path);
SplitArtifact load_split(const std::filesystem::path& path);

}  // namespace geofair
