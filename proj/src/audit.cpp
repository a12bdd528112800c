#include "geofair/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "geofair/csv.hpp"
#include "geofair/error.hpp"
#include "geofair/parallel.hpp"

namespace geofair {

std::vector<double> residuals(const TrainedModel& model, const Dataset& ds) {
  const auto y_hat = predict(model, ds);
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto y = target_value(ds[i], model.target);
    if (!y) {
      throw Error(ErrorCode::MissingTarget,
                  "village '" + ds[i].village_id + "' has no " +
                      std::string(to_string(model.target)));
    }
    out[i] = y_hat[i] - *y;
  }
  return out;
}

Dataset audit_subset(const Dataset& ds) {
  return ds.filter([](const VillageRecord& r) { return r.electricity.has_value(); },
                   ds.provenance() + " [feature-complete]");
}

AuditReport run_audit(const Dataset& ds, const AuditSpec& spec) {
  if (spec.model == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "audit has no model");
  }
  const TrainedModel& model = *spec.model;
  if (model.target != spec.target) {
    throw Error(ErrorCode::InvalidArgument,
                "model predicts " + std::string(to_string(model.target)) +
                    ", audit asks for " + std::string(to_string(spec.target)));
  }
  if (!spec.options.unsafe_in_sample) {
    std::set<std::string> overlap;
    for (const auto& r : ds) {
      if (model.train_states.contains(r.state_id)) overlap.insert(r.state_id);
    }
    if (!overlap.empty()) {
      std::string names;
      for (const auto& s : overlap) names += (names.empty() ? "" : ", ") + s;
      throw Error(ErrorCode::RefusesTrainTestOverlap,
                  "audited villages come from training states: " + names);
    }
  }

  const Dataset subset = audit_subset(ds);
  const GroupAssignment groups = assign_groups(subset, spec.community);
  const std::vector<double> eps = residuals(model, subset);

  std::vector<VillageRecord> treatment;
  std::vector<VillageRecord> control;
  std::vector<double> eps_treatment;
  std::vector<double> eps_control_pool;
  treatment.reserve(groups.n_treatment);
  control.reserve(groups.n_control);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (groups.is_treatment[i]) {
      treatment.push_back(subset[i]);
      eps_treatment.push_back(eps[i]);
    } else {
      control.push_back(subset[i]);
      eps_control_pool.push_back(eps[i]);
    }
  }

  const MatchSpace space =
      build_match_space(treatment, control, spec.options.metric);
  const MatchedPairSet pairs =
      match(treatment, control, space, spec.options.jobs);

  std::vector<double> eps_matched;
  std::vector<double> distances;
  eps_matched.reserve(pairs.pairs.size());
  distances.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    eps_matched.push_back(eps_control_pool[p.control_index]);
    distances.push_back(p.distance);
  }

  AuditReport rep;
  rep.community = spec.community;
  rep.target = spec.target;
  rep.model_kind = model.kind();
  rep.mean_residual_treatment = mean(eps_treatment);
  rep.mean_residual_control = mean(eps_matched);
  rep.mean_residual_diff = mean_diff(eps_treatment, eps_matched);

  const TestResult t =
      spec.options.mode == TestMode::Paired
          ? paired_t(eps_treatment, eps_matched)
          : welch_t(eps_treatment, eps_matched, spec.options.variance);
  rep.t_statistic = t.statistic;
  rep.t_abs = std::abs(t.statistic);
  rep.t_sign = t.statistic > 0 ? 1 : (t.statistic < 0 ? -1 : 0);
  rep.t_df = t.degrees_of_freedom;
  rep.p_t = t.p_two_sided;
  rep.t_degenerate = t.degenerate;
  const TestResult u = mann_whitney_u(eps_treatment, eps_matched);
  rep.u_statistic = u.statistic;
  rep.u_z = u.z;
  rep.p_u = u.p_two_sided;

  rep.n_audited = subset.size();
  rep.n_pairs = pairs.pairs.size();
  rep.n_treatment = treatment.size();
  rep.n_control_pool = control.size();
  rep.n_control_unique = pairs.n_control_unique;
  rep.group_median = groups.median;
  std::sort(distances.begin(), distances.end());
  rep.distance_p50 = percentile_sorted(distances, 0.5);
  rep.distance_p90 = percentile_sorted(distances, 0.9);
  rep.distance_max = distances.back();
  rep.max_reuse = pairs.max_reuse;
  rep.warnings = space.warnings;
  if (t.degenerate) {
    rep.warnings.push_back("t test degenerate: residual samples are constant");
  }
  return rep;
}

const AuditCell& AuditMatrix::at(ModelKind panel, Community c,
                                 Target t) const {
  for (const auto& cell : cells) {
    if (cell.panel == panel && cell.community == c && cell.target == t) {
      return cell;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no such audit cell");
}

AuditMatrix audit_matrix(const Dataset& ds, const ModelSet& models,
                         const std::vector<Community>& communities,
                         const std::vector<Target>& targets,
                         const AuditOptions& options) {
  static constexpr ModelKind panels[] = {ModelKind::Ols,
                                         ModelKind::RandomForest};
  const std::set<std::string>* train_states = nullptr;
  for (ModelKind panel : panels) {
    for (Target t : targets) {
      const auto it = models.find({panel, t});
      if (it == models.end()) {
        throw Error(ErrorCode::InvalidArgument,
                    "missing " + std::string(panel_name(panel)) + " model for " +
                        std::string(to_string(t)));
      }
      if (it->second.kind() != panel || it->second.target != t) {
        throw Error(ErrorCode::InvalidArgument,
                    "model registered as " + std::string(panel_name(panel)) +
                        "/" + std::string(to_string(t)) + " is not one");
      }
      if (train_states && *train_states != it->second.train_states) {
        throw Error(ErrorCode::InvalidArgument,
                    "models were not trained on the same split");
      }
      train_states = &it->second.train_states;
    }
  }

  AuditMatrix out;
  for (ModelKind panel : panels) {
    for (Community c : communities) {
      for (Target t : targets) {
        out.cells.push_back({panel, c, t, {}});
      }
    }
  }
  AuditOptions cell_options = options;
  cell_options.jobs = 1;
  parallel_for(out.cells.size(), options.jobs, [&](std::size_t i) {
    auto& cell = out.cells[i];
    AuditSpec spec;
    spec.community = cell.community;
    spec.target = cell.target;
    spec.model = &models.at({cell.panel, cell.target});
    spec.options = cell_options;
    cell.report = run_audit(ds, spec);
  });
  return out;
}

std::string_view panel_name(ModelKind k) {
  return k == ModelKind::Ols ? "LR" : "RF";
}

std::vector<ReportRow> report_rows(const AuditMatrix& matrix) {
  std::vector<ReportRow> rows;
  for (const auto& cell : matrix.cells) {
    const auto& r = cell.report;
    rows.push_back({std::string(panel_name(cell.panel)), cell.community,
                    cell.target, r.mean_residual_diff, r.t_abs, r.p_t,
                    r.u_statistic, r.p_u, r.n_pairs});
  }
  return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << "panel,community,target,mean_diff,t_abs,p_t,u,p_u,n_pairs\n";
  for (const auto& r : rows) {
    out << r.panel << ',' << to_string(r.community) << ','
        << to_string(r.target) << ',' << csv::format_double(r.mean_diff) << ','
        << csv::format_double(r.t_abs) << ',' << csv::format_double(r.p_t)
        << ',' << csv::format_double(r.u) << ',' << csv::format_double(r.p_u)
        << ',' << r.n_pairs << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaMismatch, "empty report");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "panel,community,target,mean_diff,t_abs,p_t,u,p_u,n_pairs") {
    throw Error(ErrorCode::SchemaMismatch, "unexpected report header");
  }
  std::vector<ReportRow> rows;
  std::vector<std::string> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto bad = [&](std::string_view what) {
      return Error(ErrorCode::RowInvalid, "report line " +
                                              std::to_string(line_no) + ": " +
                                              std::string(what));
    };
    if (!csv::split_record(line, cells) || cells.size() != 9) {
      throw bad("expected 9 cells");
    }
    ReportRow r;
    r.panel = cells[0];
    if (r.panel != "LR" && r.panel != "RF") throw bad("panel");
    auto c = parse_community(cells[1]);
    auto t = parse_target(cells[2]);
    if (!c || !t) throw bad("community/target");
    r.community = *c;
    r.target = *t;
    long long n = 0;
    if (!csv::parse_double(cells[3], r.mean_diff) ||
        !csv::parse_double(cells[4], r.t_abs) ||
        !csv::parse_double(cells[5], r.p_t) ||
        !csv::parse_double(cells[6], r.u) ||
        !csv::parse_double(cells[7], r.p_u) || !csv::parse_int64(cells[8], n) ||
        n < 0) {
      throw bad("numeric field");
    }
    r.n_pairs = static_cast<std::size_t>(n);
    rows.push_back(r);
  }
  return rows;
}

std::string_view stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.0000" || s == "-0.000") s.erase(0, 1);
  return s;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string_view community_label(Community c) {
  return c == Community::ST ? "Scheduled Tribes" : "Scheduled Castes";
}

}  // namespace

void write_report_text(const std::vector<ReportRow>& rows, std::ostream& out) {
  constexpr std::size_t label_w = 20;
  constexpr std::size_t col_w = 16;
  std::vector<Target> targets;
  std::vector<Community> communities;
  for (const auto& r : rows) {
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) {
      targets.push_back(r.target);
    }
    if (std::find(communities.begin(), communities.end(), r.community) ==
        communities.end()) {
      communities.push_back(r.community);
    }
  }
  auto find = [&](std::string_view panel, Community c,
                  Target t) -> const ReportRow* {
    for (const auto& r : rows) {
      if (r.panel == panel && r.community == c && r.target == t) return &r;
    }
    return nullptr;
  };

  out << "Residual difference relative to matched villages"
         " (treatment minus matched control)\n\n";
  std::string header = pad("", label_w);
  for (Target t : targets) {
    header += lpad("e(" + std::string(to_string(t)) + ")", col_w);
  }
  out << header << '\n';

  int panel_no = 0;
  for (std::string_view panel : {std::string_view("LR"), std::string_view("RF")}) {
    bool any = false;
    for (const auto& r : rows) any = any || r.panel == panel;
    if (!any) continue;
    ++panel_no;
    out << '\n'
        << "Panel " << panel_no << ": "
        << (panel == "LR" ? "Linear Regression" : "Random Forest") << '\n'
        << std::string(label_w + col_w * targets.size(), '-') << '\n';
    for (Community c : communities) {
      std::string coef = pad(std::string(community_label(c)), label_w);
      std::string tline = pad("  |t-stat|", label_w);
      std::string pline = pad("  p", label_w);
      std::string uline = pad("  p (U test)", label_w);
      for (Target t : targets) {
        const ReportRow* r = find(panel, c, t);
        if (!r) {
          for (auto* s : {&coef, &tline, &pline, &uline}) {
            *s += lpad("", col_w);
          }
          continue;
        }
        coef += lpad(fixed(r->mean_diff, 4) + std::string(stars(r->p_t)), col_w);
        tline += lpad(fixed(r->t_abs, 4), col_w);
        pline += lpad(fixed(r->p_t, 3), col_w);
        uline += lpad(fixed(r->p_u, 3), col_w);
      }
      out << coef << '\n' << tline << '\n' << pline << '\n' << uline << '\n';
    }
  }

  out << '\n' << std::string(label_w + col_w * targets.size(), '-') << '\n';
  for (Community c : communities) {
    std::string nline =
        pad("N pairs (" + std::string(to_string(c)) + ")", label_w);
    for (Target t : targets) {
      const ReportRow* r = find("LR", c, t);
      if (!r) r = find("RF", c, t);
      nline += lpad(r ? std::to_string(r->n_pairs) : "", col_w);
    }
    out << nline << '\n';
  }
  out << "* p<0.1, ** p<0.05, *** p<0.01 (Welch t test unless configured "
         "otherwise)\n";
}

void write_match_quality_csv(const AuditMatrix& matrix, std::ostream& out) {
  out << "panel,community,target,t_sign,t_df,n_audited,n_treatment,"
         "n_control_pool,n_control_unique,group_median,distance_p50,"
         "distance_p90,distance_max,max_reuse,u_z\n";
  for (const auto& cell : matrix.cells) {
    const auto& r = cell.report;
    out << panel_name(cell.panel) << ',' << to_string(cell.community) << ','
        << to_string(cell.target) << ',' << r.t_sign << ','
        << csv::format_double(r.t_df) << ',' << r.n_audited << ','
        << r.n_treatment << ',' << r.n_control_pool << ','
        << r.n_control_unique << ',' << csv::format_double(r.group_median)
        << ',' << csv::format_double(r.distance_p50) << ','
        << csv::format_double(r.distance_p90) << ','
        << csv::format_double(r.distance_max) << ',' << r.max_reuse << ','
        << csv::format_double(r.u_z) << '\n';
  }
}

}  // namespace geofair
