// geofair command-line front end.
//
// Every subcommand reads a shared key-value config (--config) and lets flags
// override individual keys. Exit codes: 0 ok, 1 usage, 2 data/validation,
// 3 internal.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geofair/audit.hpp"
#include "geofair/config.hpp"
#include "geofair/csv.hpp"
#include "geofair/data.hpp"
#include "geofair/error.hpp"
#include "geofair/models.hpp"
#include "geofair/oracles.hpp"
#include "geofair/splitter.hpp"
#include "geofair/synth.hpp"

namespace fs = std::filesystem;
using namespace geofair;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keys accepted in a config file. Anything else is rejected so typos surface.
const std::vector<std::string> kKnownKeys = {
    "seed", "jobs", "log_level", "strict",
    // synth
    "n_states", "n_villages", "delta_st", "delta_sc", "noise_sd",
    // split
    "threshold", "folds",
    // train
    "model", "target", "features", "grid", "n_estimators", "max_depth",
    "min_samples_leaf", "grid_max_depth", "grid_n_estimators",
    "grid_min_samples_leaf",
    // audit
    "communities", "targets", "metric", "variance", "test", "unsafe_in_sample",
    // paths
    "in", "out", "split", "models"};

class Settings {
 public:
  void load_file(const std::string& path) {
    file_ = KeyValueConfig::load(path);
    for (const auto& [key, value] : file_.entries()) {
      if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
        throw Error(ErrorCode::InvalidConfig,
                    "unknown key '" + key + "' in " + path);
      }
    }
  }

  // Flag storage: CLI11 writes into these strings, then apply() overlays
  // the ones actually given on the command line.
  std::string& slot(const std::string& key) { return flags_[key]; }

  void apply(const std::map<std::string, CLI::Option*>& given) {
    for (const auto& [key, opt] : given) {
      if (opt->count() > 0) file_.set(key, flags_[key]);
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    return file_.get(key);
  }

  std::string str(const std::string& key, std::string fallback) const {
    return get(key).value_or(std::move(fallback));
  }

  std::string required(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) {
      throw UsageError("missing required setting '" + key +
                       "' (flag --" + dashed(key) + " or config key)");
    }
    return *v;
  }

  template <class T>
  T number(const std::string& key, T fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    return parse_number<T>(key, *v);
  }

  template <class T>
  T required_number(const std::string& key) const {
    return parse_number<T>(key, required(key));
  }

  bool flag(const std::string& key) const {
    const auto v = get(key);
    if (!v) return false;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw Error(ErrorCode::InvalidConfig, "'" + key + "' must be true or false");
  }

  static std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }

 private:
  template <class T>
  static T parse_number(const std::string& key, const std::string& text) {
    T value{};
    bool ok = false;
    if constexpr (std::is_floating_point_v<T>) {
      ok = csv::parse_double(text, value);
    } else {
      const auto* end = text.data() + text.size();
      const auto res = std::from_chars(text.data(), end, value);
      ok = res.ec == std::errc() && res.ptr == end;
    }
    if (!ok) {
      throw Error(ErrorCode::InvalidConfig,
                  "'" + key + "' is not a valid number: '" + text + "'");
    }
    return value;
  }

  KeyValueConfig file_;
  std::map<std::string, std::string> flags_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Community> parse_communities(const std::string& text) {
  std::vector<Community> out;
  for (const auto& s : split_list(text)) {
    const auto c = parse_community(s);
    if (!c) throw UsageError("unknown community '" + s + "' (use sc, st)");
    out.push_back(*c);
  }
  if (out.empty()) throw UsageError("no communities given");
  return out;
}

std::vector<Target> parse_targets(const std::string& text) {
  std::vector<Target> out;
  for (const auto& s : split_list(text)) {
    const auto t = parse_target(s);
    if (!t) throw UsageError("unknown target '" + s + "' (use poverty, electricity)");
    out.push_back(*t);
  }
  if (out.empty()) throw UsageError("no targets given");
  return out;
}

FeatureRecipe parse_features(const std::string& text) {
  if (text == "ntl") return {true, false};
  if (text == "ntl+coords") return {true, true};
  if (text == "coords") return {false, true};
  throw UsageError("unknown feature set '" + text + "' (use ntl, ntl+coords)");
}

std::optional<int> parse_depth(const std::string& text) {
  if (text == "none" || text == "unlimited") return std::nullopt;
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::InvalidConfig, "bad max_depth '" + text + "'");
  }
  return v;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& s : split_list(text)) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw Error(ErrorCode::InvalidConfig, "bad value '" + s + "' in " + key);
    }
    out.push_back(v);
  }
  return out;
}

std::string model_file_name(ModelKind kind, Target target) {
  return std::string(kind == ModelKind::Ols ? "ols" : "rf") + "-" +
         std::string(to_string(target)) + ".json";
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Dataset read_dataset(const Settings& s) {
  const std::string path = s.required("in");
  auto res = ingest_csv(path, s.flag("strict"));
  const auto& d = res.diagnostics;
  spdlog::info("read {} rows from {}, kept {}", d.rows_read, path, res.dataset.size());
  if (d.rows_dropped > 0) spdlog::warn("dropped {} invalid rows", d.rows_dropped);
  for (std::size_t i = 0; i < d.issues.size() && i < 10; ++i) {
    spdlog::warn("line {}, field {}: {}", d.issues[i].line, d.issues[i].field, d.issues[i].reason);
  }
  if (d.zero_population > 0) {
    spdlog::warn("{} villages have zero population", d.zero_population);
  }
  return std::move(res.dataset);
}

Dataset states_subset(const Dataset& ds, const SplitAssignment& split, bool train) {
  return ds.filter(
      [&](const VillageRecord& r) { return split.is_train(r.state_id) == train; },
      ds.provenance() + (train ? " [train]" : " [test]"));
}

// --- subcommands -----------------------------------------------------------

int cmd_synth(const Settings& s) {
  KeyValueConfig kv;
  kv.set("seed", s.required("seed"));
  for (const char* key : {"n_states", "n_villages", "delta_st", "delta_sc", "noise_sd"}) {
    if (auto v = s.get(key)) kv.set(key, *v);
  }
  const auto cfg = SynthConfig::from_config(kv);
  const std::string out = s.required("out");
  const auto ds = generate(cfg);
  std::ostringstream buf;
  write_csv(ds, buf);
  write_text_file(out, buf.str());
  spdlog::info("wrote {} villages in {} states to {}", ds.size(), cfg.n_states, out);
  return 0;
}

int cmd_summarize(const Settings& s) {
  const auto ds = read_dataset(s);
  write_summary_csv(summarize(ds), std::cout);
  return 0;
}

int cmd_split(const Settings& s) {
  const auto ds = read_dataset(s);
  const auto seed = s.required_number<std::uint64_t>("seed");
  const double threshold = s.number<double>("threshold", 2.0 / 3.0);
  const int k = s.number<int>("folds", 3);
  const std::string out = s.required("out");
  SplitArtifact artifact;
  artifact.split = spatial_split(ds, threshold, seed);
  for (const auto& w : artifact.split.warnings) spdlog::warn("{}", w);
  artifact.folds = spatial_folds(ds, artifact.split, k, seed);
  write_text_file(out, split_to_json(artifact));
  spdlog::info("{} train states ({:.4f} of population), {} test states -> {}",
               artifact.split.train_states.size(),
               artifact.split.achieved_train_pop_frac,
               artifact.split.test_states.size(), out);
  return 0;
}

ForestGrid grid_from(const Settings& s) {
  ForestGrid grid;
  if (auto v = s.get("grid_max_depth")) {
    grid.max_depth.clear();
    for (const auto& item : split_list(*v)) grid.max_depth.push_back(parse_depth(item));
  }
  if (auto v = s.get("grid_n_estimators")) grid.n_estimators = parse_ints("grid_n_estimators", *v);
  if (auto v = s.get("grid_min_samples_leaf")) {
    grid.min_samples_leaf = parse_ints("grid_min_samples_leaf", *v);
  }
  return grid;
}

int cmd_train(const Settings& s) {
  const auto ds = read_dataset(s);
  const auto artifact = load_split(s.required("split"));
  const std::string kind = s.required("model");
  const auto target = parse_target(s.required("target"));
  if (!target) throw UsageError("unknown target '" + s.required("target") + "'");
  const auto recipe = parse_features(s.str("features", "ntl"));
  const std::string out = s.required("out");
  const auto jobs = s.number<unsigned>("jobs", 1);

  const auto train = states_subset(ds, artifact.split, true);
  const auto test = states_subset(ds, artifact.split, false);
  spdlog::info("training on {} villages from {} states", train.size(),
               artifact.split.train_states.size());

  TrainedModel model;
  if (kind == "ols") {
    model = fit_ols(train, recipe, *target);
  } else if (kind == "rf") {
    const auto seed = s.required_number<std::uint64_t>("seed");
    ForestHyper hp;
    if (s.get("grid").value_or("true") != "false") {
      if (!artifact.folds) {
        throw Error(ErrorCode::InvalidConfig,
                    "split file has no folds; grid search needs them");
      }
      const auto res =
          grid_search(train, *artifact.folds, recipe, *target, grid_from(s), seed, jobs);
      for (const auto& p : res.points) {
        spdlog::debug("grid depth={} trees={} leaf={} mean R2={:.5f}",
                      p.hp.max_depth ? std::to_string(*p.hp.max_depth) : "none",
                      p.hp.n_estimators, p.hp.min_samples_leaf, p.mean_r2);
      }
      hp = res.best;
    } else {
      hp.n_estimators = s.number<int>("n_estimators", hp.n_estimators);
      if (auto v = s.get("max_depth")) hp.max_depth = parse_depth(*v);
      hp.min_samples_leaf = s.number<int>("min_samples_leaf", hp.min_samples_leaf);
    }
    spdlog::info("forest: {} trees, max depth {}, min leaf {}", hp.n_estimators,
                 hp.max_depth ? std::to_string(*hp.max_depth) : "none",
                 hp.min_samples_leaf);
    model = fit_rf(train, recipe, *target, hp, seed, jobs);
  } else {
    throw UsageError("unknown model '" + kind + "' (use ols, rf)");
  }

  std::vector<double> y;
  for (const auto& r : train) {
    if (auto v = target_value(r, *target)) y.push_back(*v);
  }
  try {
    const auto complete = train.filter(
        [&](const VillageRecord& r) { return target_value(r, *target).has_value(); },
        "complete");
    spdlog::info("in-sample R2 {:.4f}", r_squared(y, predict(model, complete)));
  } catch (const Error& e) {
    spdlog::warn("in-sample R2 unavailable: {}", e.what());
  }
  write_text_file(out, model_to_json(model));
  spdlog::info("model written to {}", out);
  return 0;
}

ModelSet load_models(const fs::path& dir, const std::vector<Target>& targets) {
  ModelSet models;
  for (ModelKind kind : {ModelKind::Ols, ModelKind::RandomForest}) {
    for (Target t : targets) {
      const auto path = dir / model_file_name(kind, t);
      models[{kind, t}] = load_model(path);
      spdlog::info("loaded {}", path.string());
    }
  }
  return models;
}

int cmd_audit(const Settings& s) {
  const auto ds = read_dataset(s);
  const auto artifact = load_split(s.required("split"));
  const fs::path models_dir = s.required("models");
  const fs::path out_dir = s.required("out");
  const auto communities = parse_communities(s.str("communities", "sc,st"));
  const auto targets = parse_targets(s.str("targets", "poverty,electricity"));

  AuditOptions opt;
  opt.jobs = s.number<unsigned>("jobs", 1);
  opt.unsafe_in_sample = s.flag("unsafe_in_sample");
  const auto metric = s.str("metric", "euclidean");
  if (metric == "mahalanobis") {
    opt.metric = MatchMetric::Mahalanobis;
  } else if (metric != "euclidean") {
    throw UsageError("unknown metric '" + metric + "'");
  }
  const auto variance = s.str("variance", "welch");
  if (variance == "pooled") {
    opt.variance = TVariance::Pooled;
  } else if (variance != "welch") {
    throw UsageError("unknown variance '" + variance + "'");
  }
  const auto test = s.str("test", "two-sample");
  if (test == "paired") {
    opt.mode = TestMode::Paired;
  } else if (test != "two-sample") {
    throw UsageError("unknown test '" + test + "'");
  }
  if (opt.unsafe_in_sample) {
    spdlog::warn("in-sample audit requested: training villages may be audited");
  }

  const auto models = load_models(models_dir, targets);
  const auto audited = states_subset(ds, artifact.split, false);
  spdlog::info("auditing {} villages from {} test states", audited.size(),
               artifact.split.test_states.size());
  const auto matrix = audit_matrix(audited, models, communities, targets, opt);
  for (const auto& cell : matrix.cells) {
    for (const auto& w : cell.report.warnings) {
      spdlog::warn("{} {} {}: {}", panel_name(cell.panel), to_string(cell.community),
                   to_string(cell.target), w);
    }
  }
  const auto rows = report_rows(matrix);
  std::ostringstream csv_out, text_out, quality_out;
  write_report_csv(rows, csv_out);
  write_report_text(rows, text_out);
  write_match_quality_csv(matrix, quality_out);
  fs::create_directories(out_dir);
  write_text_file(out_dir / "report.csv", csv_out.str());
  write_text_file(out_dir / "report.txt", text_out.str());
  write_text_file(out_dir / "match_quality.csv", quality_out.str());
  spdlog::info("audit reports written to {}", out_dir.string());
  return 0;
}

int cmd_report(const Settings& s) {
  if (auto in = s.get("in"); in && !s.get("models")) {
    std::ifstream f(*in, std::ios::binary);
    if (!f) throw Error(ErrorCode::FileNotFound, "cannot open " + *in);
    write_report_text(read_report_csv(f), std::cout);
    return 0;
  }
  // Out-of-sample R^2 table for every model in the directory.
  const auto ds = read_dataset(s);
  const auto artifact = load_split(s.required("split"));
  const fs::path dir = s.required("models");
  const auto test = states_subset(ds, artifact.split, false);
  std::cout << "model,target,features,n_test,r2\n";
  for (ModelKind kind : {ModelKind::Ols, ModelKind::RandomForest}) {
    for (Target t : {Target::Poverty, Target::Electricity}) {
      const auto path = dir / model_file_name(kind, t);
      if (!fs::exists(path)) continue;
      const auto model = load_model(path);
      const auto complete = test.filter(
          [&](const VillageRecord& r) { return target_value(r, t).has_value(); },
          "complete");
      std::vector<double> y;
      for (const auto& r : complete) y.push_back(*target_value(r, t));
      std::string features;
      for (const auto& n : model.recipe.names()) features += (features.empty() ? "" : "+") + n;
      std::cout << panel_name(kind) << ',' << to_string(t) << ',' << features << ','
                << y.size() << ','
                << csv::format_double(r_squared(y, predict(model, complete))) << '\n';
    }
  }
  return 0;
}

int cmd_selftest() {
  return oracle::run_selftest(std::cout) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("geofair");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);

  CLI::App app{"geofair: spatially held-out fairness audits of nightlight poverty models"};
  app.require_subcommand(1);
  Settings settings;
  std::string config_path;
  std::string log_level = "info";
  app.add_option("--config", config_path, "key = value settings file");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  std::map<std::string, std::map<std::string, CLI::Option*>> given;
  auto opt = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    given[sub->get_name()][key] =
        sub->add_option("--" + Settings::dashed(key), settings.slot(key), help);
  };
  auto switch_ = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    auto* o = sub->add_flag_callback(
        "--" + Settings::dashed(key), [&settings, key] { settings.slot(key) = "true"; },
        help);
    given[sub->get_name()][key] = o;
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic village dataset");
  opt(synth, "seed", "random seed (required)");
  opt(synth, "out", "output CSV");
  opt(synth, "n_states", "number of states");
  opt(synth, "n_villages", "number of villages");
  opt(synth, "delta_st", "log-nightlight shift for ST villages");
  opt(synth, "delta_sc", "log-nightlight shift for above-median SC villages");
  opt(synth, "noise_sd", "log-nightlight noise");

  auto* summarize_cmd = app.add_subcommand("summarize", "summary statistics as CSV on stdout");
  opt(summarize_cmd, "in", "input CSV");
  switch_(summarize_cmd, "strict", "fail on the first invalid row");

  auto* split = app.add_subcommand("split", "spatial train/test split with CV folds");
  opt(split, "in", "input CSV");
  opt(split, "seed", "random seed (required)");
  opt(split, "threshold", "train population fraction (default 2/3)");
  opt(split, "folds", "number of CV folds over train states (default 3)");
  opt(split, "out", "output split JSON");
  switch_(split, "strict", "fail on the first invalid row");

  auto* train = app.add_subcommand("train", "fit an OLS or random-forest model");
  for (const char* key : {"in", "split", "model", "target", "features", "seed", "out",
                          "jobs", "n_estimators", "max_depth", "min_samples_leaf",
                          "grid_max_depth", "grid_n_estimators", "grid_min_samples_leaf"}) {
    opt(train, key, key);
  }
  train->add_flag_callback("--no-grid", [&settings] { settings.slot("grid") = "false"; },
                           "use fixed forest hyperparameters instead of grid search");
  given["train"]["grid"] = train->get_option("--no-grid");
  switch_(train, "strict", "fail on the first invalid row");

  auto* audit = app.add_subcommand("audit", "matched residual audit on held-out states");
  for (const char* key : {"in", "split", "models", "out", "communities", "targets",
                          "metric", "variance", "test", "jobs"}) {
    opt(audit, key, key);
  }
  switch_(audit, "unsafe_in_sample", "allow auditing villages from training states");
  switch_(audit, "strict", "fail on the first invalid row");

  auto* report = app.add_subcommand("report", "render report.csv, or an R2 table");
  for (const char* key : {"in", "split", "models"}) opt(report, key, key);

  auto* selftest = app.add_subcommand("selftest", "run the embedded oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const auto level = spdlog::level::from_str(log_level);
  if (level == spdlog::level::off && log_level != "off") {
    std::cerr << "unknown log level '" << log_level << "'\n";
    return 1;
  }
  spdlog::set_level(level);

  try {
    if (!config_path.empty()) settings.load_file(config_path);
    CLI::App* sub = app.get_subcommands().front();
    settings.apply(given[sub->get_name()]);
    if (sub == synth) return cmd_synth(settings);
    if (sub == summarize_cmd) return cmd_summarize(settings);
    if (sub == split) return cmd_split(settings);
    if (sub == train) return cmd_train(settings);
    if (sub == audit) return cmd_audit(settings);
    if (sub == report) return cmd_report(settings);
    if (sub == selftest) return cmd_selftest();
    return 1;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 3;
  }
}
