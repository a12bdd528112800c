#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "geofair/data.hpp"
#include "geofair/forest.hpp"
#include "geofair/matrix.hpp"
#include "geofair/splitter.hpp"
#include "geofair/types.hpp"

namespace geofair {

/// Model inputs. Feature order is [ntl, lat, lon] restricted to the enabled
/// ones. OLS sees log(1 + ntl); the forest sees raw ntl.
struct FeatureRecipe {
  bool use_ntl = true;
  bool use_coords = false;

  void validate() const;
  std::size_t arity() const { return (use_ntl ? 1 : 0) + (use_coords ? 2 : 0); }
  std::vector<std::string> names() const;
  bool operator==(const FeatureRecipe&) const = default;
};

enum class NtlScale { Log1p, Raw };

/// n x arity feature matrix for all records of `ds`.
Matrix feature_matrix(const Dataset& ds, const FeatureRecipe& recipe,
                      NtlScale scale);

struct OlsModel {
  std::vector<double> coefficients;  // [intercept, features...]
  bool operator==(const OlsModel&) const = default;
};

struct RandomForestModel {
  Forest forest;
  ForestHyper hp;
  std::uint64_t seed = 0;
};

enum class ModelKind { Ols, RandomForest };
std::string_view to_string(ModelKind k);

struct TrainedModel {
  std::variant<OlsModel, RandomForestModel> model;
  FeatureRecipe recipe;
  Target target = Target::Poverty;
  /// States whose villages were used for fitting (anti-leakage guard).
  std::set<std::string> train_states;

  ModelKind kind() const {
    return std::holds_alternative<OlsModel>(model) ? ModelKind::Ols
                                                   : ModelKind::RandomForest;
  }
};

/// Rows of `ds` with a present target, and the target as doubles.
struct TrainingData {
  Matrix x;
  std::vector<double> y;
  std::set<std::string> states;
};
TrainingData training_data(const Dataset& ds, const FeatureRecipe& recipe,
                           Target target, NtlScale scale);

TrainedModel fit_ols(const Dataset& train, const FeatureRecipe& recipe,
                     Target target);

TrainedModel fit_rf(const Dataset& train, const FeatureRecipe& recipe,
                    Target target, const ForestHyper& hp, std::uint64_t seed,
                    unsigned jobs = 1);

/// One prediction per record, in record order. OLS output is not clipped.
std::vector<double> predict(const TrainedModel& model, const Dataset& ds);

/// 1 - SS_res / SS_tot. Throws ConstantTarget when y has no spread.
double r_squared(std::span<const double> y, std::span<const double> y_hat);

struct ForestGrid {
  std::vector<std::optional<int>> max_depth{2, 4, 8, 16, std::nullopt};
  std::vector<int> n_estimators{50, 100, 200};
  std::vector<int> min_samples_leaf{1, 5, 25};

  std::vector<ForestHyper> combinations() const;
};

struct GridPoint {
  ForestHyper hp;
  double mean_r2 = 0.0;
  std::vector<double> fold_r2;
};

struct GridSearchResult {
  ForestHyper best;
  std::vector<GridPoint> points;  // in combinations() order
};

/// True when `a` is the simpler model: shallower, then fewer trees, then a
/// larger leaf minimum.
bool simpler(const ForestHyper& a, const ForestHyper& b);

/// Mean out-of-fold R^2 per combination over the spatial folds of `train`;
/// the best mean wins, exact ties go to the simpler model. Fold f is fitted
/// with substream f of `seed` for every combination.
GridSearchResult grid_search(const Dataset& train, const FoldAssignment& folds,
                             const FeatureRecipe& recipe, Target target,
                             const ForestGrid& grid, std::uint64_t seed,
                             unsigned jobs = 1);

/// Versioned JSON model document.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace geofair
