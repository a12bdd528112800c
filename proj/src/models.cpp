#include "geofair/models.hpp"

#include <climits>
#include <cmath>
#include <tuple>

#include "geofair/error.hpp"
#include "geofair/ols.hpp"
#include "geofair/rng.hpp"

namespace geofair {

namespace {

constexpr std::uint64_t kStreamGrid = 31;

void fill_features(const VillageRecord& r, const FeatureRecipe& recipe,
                   NtlScale scale, Matrix& x, std::size_t row) {
  std::size_t c = 0;
  if (recipe.use_ntl) {
    x(row, c++) = scale == NtlScale::Log1p ? std::log1p(r.ntl) : r.ntl;
  }
  if (recipe.use_coords) {
    x(row, c++) = r.lat;
    x(row, c++) = r.lon;
  }
}

}  // namespace

void FeatureRecipe::validate() const {
  if (arity() == 0) {
    throw Error(ErrorCode::InvalidArgument, "recipe enables no features");
  }
}

std::vector<std::string> FeatureRecipe::names() const {
  std::vector<std::string> out;
  if (use_ntl) out.emplace_back("ntl");
  if (use_coords) {
    out.emplace_back("lat");
    out.emplace_back("lon");
  }
  return out;
}

std::string_view to_string(ModelKind k) {
  return k == ModelKind::Ols ? "ols" : "rf";
}

Matrix feature_matrix(const Dataset& ds, const FeatureRecipe& recipe,
                      NtlScale scale) {
  recipe.validate();
  Matrix x(ds.size(), recipe.arity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    fill_features(ds[i], recipe, scale, x, i);
  }
  return x;
}

TrainingData training_data(const Dataset& ds, const FeatureRecipe& recipe,
                           Target target, NtlScale scale) {
  recipe.validate();
  std::vector<const VillageRecord*> rows;
  std::vector<double> y;
  std::set<std::string> states;
  for (const auto& r : ds) {
    if (auto v = target_value(r, target)) {
      rows.push_back(&r);
      y.push_back(*v);
      states.insert(r.state_id);
    }
  }
  Matrix x(rows.size(), recipe.arity());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fill_features(*rows[i], recipe, scale, x, i);
  }
  return {std::move(x), std::move(y), std::move(states)};
}

TrainedModel fit_ols(const Dataset& train, const FeatureRecipe& recipe,
                     Target target) {
  auto data = training_data(train, recipe, target, NtlScale::Log1p);
  const std::size_t n = data.y.size();
  const std::size_t p = recipe.arity() + 1;
  if (n < p) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(n) + " rows with a " +
                    std::string(to_string(target)) + " value for " +
                    std::to_string(p) + " coefficients");
  }
  Matrix design(n, p, 1.0);
  for (std::size_t c = 1; c < p; ++c) {
    const auto src = data.x.col(c - 1);
    std::copy(src.begin(), src.end(), design.col(c).begin());
  }
  TrainedModel m;
  m.model = OlsModel{least_squares_qr(std::move(design), data.y)};
  m.recipe = recipe;
  m.target = target;
  m.train_states = std::move(data.states);
  return m;
}

TrainedModel fit_rf(const Dataset& train, const FeatureRecipe& recipe,
                    Target target, const ForestHyper& hp, std::uint64_t seed,
                    unsigned jobs) {
  hp.validate();
  auto data = training_data(train, recipe, target, NtlScale::Raw);
  if (data.y.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "need at least 2 rows with a " +
                    std::string(to_string(target)) + " value");
  }
  TrainedModel m;
  m.model = RandomForestModel{fit_forest(data.x, data.y, hp, seed, jobs), hp,
                              seed};
  m.recipe = recipe;
  m.target = target;
  m.train_states = std::move(data.states);
  return m;
}

std::vector<double> predict(const TrainedModel& model, const Dataset& ds) {
  const bool ols = model.kind() == ModelKind::Ols;
  const Matrix x = feature_matrix(ds, model.recipe,
                                  ols ? NtlScale::Log1p : NtlScale::Raw);
  std::vector<double> out(ds.size());
  std::vector<double> row(x.cols());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] = x(i, c);
    if (ols) {
      const auto& beta = std::get<OlsModel>(model.model).coefficients;
      double v = beta[0];
      for (std::size_t c = 0; c < row.size(); ++c) v += beta[c + 1] * row[c];
      out[i] = v;
    } else {
      out[i] = std::get<RandomForestModel>(model.model).forest.predict(row);
    }
  }
  return out;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw Error(ErrorCode::InvalidArgument, "r_squared length mismatch");
  }
  if (y.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "r_squared needs >= 2 values");
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  }
  if (ss_tot == 0.0) {
    throw Error(ErrorCode::ConstantTarget, "target has zero variance");
  }
  return 1.0 - ss_res / ss_tot;
}

std::vector<ForestHyper> ForestGrid::combinations() const {
  std::vector<ForestHyper> out;
  for (const auto& depth : max_depth) {
    for (int trees : n_estimators) {
      for (int leaf : min_samples_leaf) {
        ForestHyper hp;
        hp.max_depth = depth;
        hp.n_estimators = trees;
        hp.min_samples_leaf = leaf;
        out.push_back(hp);
      }
    }
  }
  return out;
}

bool simpler(const ForestHyper& a, const ForestHyper& b) {
  // Unlimited depth sorts after every finite depth.
  auto depth_key = [](const ForestHyper& h) {
    return h.max_depth ? static_cast<long long>(*h.max_depth) : LLONG_MAX;
  };
  return std::make_tuple(depth_key(a), a.n_estimators, -a.min_samples_leaf) <
         std::make_tuple(depth_key(b), b.n_estimators, -b.min_samples_leaf);
}

GridSearchResult grid_search(const Dataset& train, const FoldAssignment& folds,
                             const FeatureRecipe& recipe, Target target,
                             const ForestGrid& grid, std::uint64_t seed,
                             unsigned jobs) {
  const auto combos = grid.combinations();
  if (combos.empty()) {
    throw Error(ErrorCode::InvalidArgument, "hyperparameter grid is empty");
  }
  if (folds.k < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid search needs k >= 2 folds");
  }
  for (const auto& r : train) {
    if (!folds.fold_of_state.contains(r.state_id)) {
      throw Error(ErrorCode::InvalidArgument,
                  "state '" + r.state_id + "' has no fold");
    }
  }

  struct FoldData {
    Dataset fit;
    Dataset held_out;
    std::vector<double> y;
  };
  std::vector<FoldData> fold_data;
  for (int f = 0; f < folds.k; ++f) {
    auto in_fold = [&](const VillageRecord& r) {
      return folds.fold_of_state.at(r.state_id) == f;
    };
    auto fit = train.filter([&](const auto& r) { return !in_fold(r); },
                            "fold-fit");
    auto held = train.filter(
        [&](const auto& r) { return in_fold(r) && target_value(r, target); },
        "fold-held-out");
    std::vector<double> y;
    for (const auto& r : held) y.push_back(*target_value(r, target));
    fold_data.push_back({std::move(fit), std::move(held), std::move(y)});
  }

  GridSearchResult result;
  for (const auto& hp : combos) {
    GridPoint point;
    point.hp = hp;
    for (int f = 0; f < folds.k; ++f) {
      const auto& fd = fold_data[static_cast<std::size_t>(f)];
      const auto model = fit_rf(fd.fit, recipe, target, hp,
                                derive_seed(seed, kStreamGrid, f), jobs);
      point.fold_r2.push_back(r_squared(fd.y, predict(model, fd.held_out)));
    }
    double sum = 0.0;
    for (double r2 : point.fold_r2) sum += r2;
    point.mean_r2 = sum / static_cast<double>(point.fold_r2.size());
    result.points.push_back(std::move(point));
  }

  const GridPoint* best = &result.points.front();
  for (const auto& point : result.points) {
    if (point.mean_r2 > best->mean_r2 ||
        (point.mean_r2 == best->mean_r2 && simpler(point.hp, best->hp))) {
      best = &point;
    }
  }
  result.best = best->hp;
  return result;
}

}  // namespace geofair
