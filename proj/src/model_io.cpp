#include <fstream>
#include <json.hpp>
#include <sstream>

#include "geofair/error.hpp"
#include "geofair/models.hpp"

namespace geofair {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kModelFormatVersion = 1;

ojson tree_to_json(const RegressionTree& tree) {
  ojson feature = ojson::array(), threshold = ojson::array(),
        left = ojson::array(), right = ojson::array(), value = ojson::array(),
        samples = ojson::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    samples.push_back(n.samples);
  }
  ojson j;
  j["feature"] = std::move(feature);
  j["threshold"] = std::move(threshold);
  j["left"] = std::move(left);
  j["right"] = std::move(right);
  j["value"] = std::move(value);
  j["samples"] = std::move(samples);
  return j;
}

RegressionTree tree_from_json(const nlohmann::json& j, std::size_t arity) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto samples = j.at("samples").get<std::vector<std::uint64_t>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n ||
      right.size() != n || value.size() != n || samples.size() != n) {
    throw Error(ErrorCode::ModelFormat, "tree arrays have inconsistent sizes");
  }
  RegressionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = tree.nodes[i];
    node.feature = feature[i];
    node.threshold = threshold[i];
    node.left = left[i];
    node.right = right[i];
    node.value = value[i];
    node.samples = samples[i];
    if (!node.is_leaf()) {
      // Children must come after the parent, which also rules out cycles.
      const auto ok = [&](int c) {
        return c > static_cast<int>(i) && c < static_cast<int>(n);
      };
      if (static_cast<std::size_t>(node.feature) >= arity || !ok(node.left) ||
          !ok(node.right)) {
        throw Error(ErrorCode::ModelFormat, "malformed tree node");
      }
    }
  }
  return tree;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  ojson j;
  j["format"] = "geofair-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(model.kind());
  j["target"] = to_string(model.target);
  j["recipe"] = {{"use_ntl", model.recipe.use_ntl},
                 {"use_coords", model.recipe.use_coords},
                 {"features", model.recipe.names()}};
  j["train_states"] = model.train_states;
  if (const auto* ols = std::get_if<OlsModel>(&model.model)) {
    j["coefficients"] = ols->coefficients;
  } else {
    const auto& rf = std::get<RandomForestModel>(model.model);
    ojson hp;
    hp["n_estimators"] = rf.hp.n_estimators;
    hp["max_depth"] =
        rf.hp.max_depth ? ojson(*rf.hp.max_depth) : ojson(nullptr);
    hp["min_samples_leaf"] = rf.hp.min_samples_leaf;
    hp["bootstrap"] = rf.hp.bootstrap;
    j["hyperparameters"] = std::move(hp);
    j["seed"] = rf.seed;
    ojson trees = ojson::array();
    for (const auto& t : rf.forest.trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
  }
  return j.dump() + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  TrainedModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "geofair-model") {
      throw Error(ErrorCode::ModelFormat, "not a model document");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::ModelFormat, "unsupported model version");
    }
    auto target = parse_target(j.at("target").get<std::string>());
    if (!target) throw Error(ErrorCode::ModelFormat, "unknown target");
    m.target = *target;
    m.recipe.use_ntl = j.at("recipe").at("use_ntl").get<bool>();
    m.recipe.use_coords = j.at("recipe").at("use_coords").get<bool>();
    m.recipe.validate();
    m.train_states = j.at("train_states").get<std::set<std::string>>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ols") {
      OlsModel ols{j.at("coefficients").get<std::vector<double>>()};
      if (ols.coefficients.size() != m.recipe.arity() + 1) {
        throw Error(ErrorCode::ModelFormat,
                    "coefficient count does not match recipe");
      }
      m.model = std::move(ols);
    } else if (kind == "rf") {
      RandomForestModel rf;
      const auto& hp = j.at("hyperparameters");
      rf.hp.n_estimators = hp.at("n_estimators").get<int>();
      if (!hp.at("max_depth").is_null()) {
        rf.hp.max_depth = hp.at("max_depth").get<int>();
      }
      rf.hp.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
      rf.hp.bootstrap = hp.at("bootstrap").get<bool>();
      rf.hp.validate();
      rf.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& t : j.at("trees")) {
        rf.forest.trees.push_back(tree_from_json(t, m.recipe.arity()));
      }
      if (rf.forest.trees.size() !=
          static_cast<std::size_t>(rf.hp.n_estimators)) {
        throw Error(ErrorCode::ModelFormat, "tree count != n_estimators");
      }
      m.model = std::move(rf);
    } else {
      throw Error(ErrorCode::ModelFormat, "unknown model kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ModelFormat, std::string("model JSON: ") + e.what());
  }
  return m;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << model_to_json(model);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace geofair
