#include "geofair/splitter.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "geofair/error.hpp"
#include "geofair/rng.hpp"

namespace geofair {

namespace {

constexpr std::uint64_t kStreamSplit = 11;
constexpr std::uint64_t kStreamFolds = 12;
constexpr int kSplitFormatVersion = 1;

std::vector<StateTotals> shuffled(std::vector<StateTotals> states,
                                  std::uint64_t seed, std::uint64_t stream) {
  Rng rng(derive_seed(seed, stream));
  rng.shuffle(std::span<StateTotals>(states));
  return states;
}

}  // namespace

std::vector<StateTotals> state_totals(const Dataset& ds) {
  std::map<std::string, StateTotals> by_state;
  for (const auto& r : ds) {
    auto& t = by_state[r.state_id];
    t.state_id = r.state_id;
    t.population += r.population;
    ++t.villages;
  }
  std::vector<StateTotals> out;
  out.reserve(by_state.size());
  for (auto& [id, t] : by_state) out.push_back(std::move(t));
  return out;
}

SplitAssignment split_in_order(const std::vector<StateTotals>& order,
                               double threshold) {
  if (order.size() < 2) {
    throw Error(ErrorCode::SingleState,
                "need at least two states to split, got " +
                    std::to_string(order.size()));
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1]");
  }
  std::int64_t total_pop = 0;
  std::size_t total_villages = 0;
  for (const auto& s : order) {
    total_pop += s.population;
    total_villages += s.villages;
  }
  if (total_pop <= 0) {
    throw Error(ErrorCode::InvalidArgument, "total population is zero");
  }

  SplitAssignment out;
  out.threshold = threshold;
  const double target = threshold * static_cast<double>(total_pop);
  std::int64_t cum = 0;
  std::size_t drawn = 0;
  while (drawn < order.size()) {
    cum += order[drawn].population;
    ++drawn;
    if (static_cast<double>(cum) >= target) break;
  }
  if (drawn == order.size()) {
    --drawn;
    cum -= order[drawn].population;
    out.degenerate = true;
    out.warnings.push_back("Degenerate: draw consumed every state; moved '" +
                           order[drawn].state_id + "' to the test set");
  }
  std::size_t train_villages = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.draw_order.push_back(order[i].state_id);
    if (i < drawn) {
      out.train_states.insert(order[i].state_id);
      train_villages += order[i].villages;
    } else {
      out.test_states.insert(order[i].state_id);
    }
  }
  out.achieved_train_pop_frac =
      static_cast<double>(cum) / static_cast<double>(total_pop);
  out.achieved_train_village_frac =
      static_cast<double>(train_villages) / static_cast<double>(total_villages);
  return out;
}

SplitAssignment spatial_split(const Dataset& ds, double threshold,
                              std::uint64_t seed) {
  auto totals = state_totals(ds);
  if (totals.size() < 2) {
    throw Error(ErrorCode::SingleState, "dataset contains a single state");
  }
  auto out = split_in_order(shuffled(std::move(totals), seed, kStreamSplit),
                            threshold);
  out.seed = seed;
  return out;
}

std::vector<std::string> FoldAssignment::states_in(int fold) const {
  std::vector<std::string> out;
  for (const auto& [state, f] : fold_of_state) {
    if (f == fold) out.push_back(state);
  }
  return out;
}

FoldAssignment assign_folds_in_order(const std::vector<StateTotals>& order,
                                     int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (order.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewStates,
                std::to_string(order.size()) + " training states for " +
                    std::to_string(k) + " folds");
  }
  FoldAssignment out;
  out.k = k;
  std::vector<std::int64_t> load(k, 0);
  std::vector<std::size_t> members(k, 0);
  for (const auto& s : order) {
    int best = 0;
    for (int f = 1; f < k; ++f) {
      if (load[f] < load[best] ||
          (load[f] == load[best] && members[f] < members[best])) {
        best = f;
      }
    }
    load[best] += s.population;
    ++members[best];
    out.fold_of_state[s.state_id] = best;
  }
  return out;
}

FoldAssignment spatial_folds(const Dataset& ds, const SplitAssignment& split,
                             int k, std::uint64_t seed) {
  std::vector<StateTotals> train;
  for (auto& t : state_totals(ds)) {
    if (split.is_train(t.state_id)) train.push_back(std::move(t));
  }
  return assign_folds_in_order(shuffled(std::move(train), seed, kStreamFolds),
                               k);
}

std::string split_to_json(const SplitArtifact& artifact) {
  const auto& s = artifact.split;
  nlohmann::ordered_json j;
  j["format"] = "geofair-split";
  j["version"] = kSplitFormatVersion;
  j["seed"] = s.seed;
  j["threshold"] = s.threshold;
  j["train_states"] = s.train_states;
  j["test_states"] = s.test_states;
  j["draw_order"] = s.draw_order;
  j["achieved_train_pop_frac"] = s.achieved_train_pop_frac;
  j["achieved_train_village_frac"] = s.achieved_train_village_frac;
  j["degenerate"] = s.degenerate;
  j["warnings"] = s.warnings;
  if (artifact.folds) {
    j["k"] = artifact.folds->k;
    nlohmann::ordered_json folds = nlohmann::ordered_json::object();
    for (const auto& [state, fold] : artifact.folds->fold_of_state) {
      folds[state] = fold;
    }
    j["fold_of_state"] = std::move(folds);
  }
  return j.dump(2) + "\n";
}

SplitArtifact split_from_json(const std::string& text) {
  SplitArtifact out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "geofair-split") {
      throw Error(ErrorCode::ModelFormat, "not a split document");
    }
    if (j.at("version").get<int>() != kSplitFormatVersion) {
      throw Error(ErrorCode::ModelFormat, "unsupported split version");
    }
    auto& s = out.split;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.threshold = j.at("threshold").get<double>();
    s.train_states = j.at("train_states").get<std::set<std::string>>();
    s.test_states = j.at("test_states").get<std::set<std::string>>();
    s.draw_order = j.value("draw_order", std::vector<std::string>{});
    s.achieved_train_pop_frac = j.at("achieved_train_pop_frac").get<double>();
    s.achieved_train_village_frac =
        j.at("achieved_train_village_frac").get<double>();
    s.degenerate = j.value("degenerate", false);
    s.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("fold_of_state")) {
      FoldAssignment f;
      f.k = j.at("k").get<int>();
      f.fold_of_state = j.at("fold_of_state").get<std::map<std::string, int>>();
      out.folds = std::move(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ModelFormat, std::string("split JSON: ") + e.what());
  }
  for (const auto& state : out.split.train_states) {
    if (out.split.test_states.contains(state)) {
      throw Error(ErrorCode::ModelFormat,
                  "state '" + state + "' is in both train and test");
    }
  }
  return out;
}

void save_split(const SplitArtifact& artifact,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << split_to_json(artifact);
}

SplitArtifact load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return split_from_json(buf.str());
}

}  // namespace geofair
