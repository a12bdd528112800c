#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geofair/data.hpp"
#include "geofair/matching.hpp"
#include "geofair/models.hpp"
#include "geofair/stats.hpp"
#include "geofair/types.hpp"

namespace geofair {

/// Prediction minus truth, per record. Positive poverty residual means
/// poverty was over-predicted. Throws MissingTarget if any record lacks the
/// model's target.
std::vector<double> residuals(const TrainedModel& model, const Dataset& ds);

enum class TestMode { TwoSample, Paired };

struct AuditOptions {
  MatchMetric metric = MatchMetric::Euclidean;
  TVariance variance = TVariance::Welch;
  TestMode mode = TestMode::TwoSample;
  /// Permit auditing villages from the model's training states.
  bool unsafe_in_sample = false;
  unsigned jobs = 1;
};

struct AuditSpec {
  Community community = Community::ST;
  Target target = Target::Poverty;
  const TrainedModel* model = nullptr;
  AuditOptions options;
};

struct AuditReport {
  Community community = Community::ST;
  Target target = Target::Poverty;
  ModelKind model_kind = ModelKind::Ols;

  double mean_residual_treatment = 0.0;
  double mean_residual_control = 0.0;  // matched controls, with multiplicity
  double mean_residual_diff = 0.0;     // treatment minus control
  double t_statistic = 0.0;
  double t_abs = 0.0;
  int t_sign = 0;
  double t_df = 0.0;
  double p_t = 1.0;
  bool t_degenerate = false;
  double u_statistic = 0.0;
  double u_z = 0.0;
  double p_u = 1.0;

  std::size_t n_audited = 0;
  std::size_t n_pairs = 0;
  std::size_t n_treatment = 0;
  std::size_t n_control_pool = 0;
  std::size_t n_control_unique = 0;
  double group_median = 0.0;
  double distance_p50 = 0.0;
  double distance_p90 = 0.0;
  double distance_max = 0.0;
  std::size_t max_reuse = 0;
  std::vector<std::string> warnings;

  /// The only bias signal: the matched-group t test at level alpha.
  bool significant(double alpha) const { return p_t < alpha; }
};

/// Villages usable by an audit: those carrying every match covariate.
Dataset audit_subset(const Dataset& ds);

/// Filter -> groups -> residuals -> match -> tests. Throws
/// RefusesTrainTestOverlap when an audited village's state was used for
/// training (unless options.unsafe_in_sample).
AuditReport run_audit(const Dataset& ds, const AuditSpec& spec);

struct AuditCell {
  ModelKind panel = ModelKind::Ols;
  Community community = Community::ST;
  Target target = Target::Poverty;
  AuditReport report;
};

struct AuditMatrix {
  std::vector<AuditCell> cells;  // panel-major, then community, then target

  const AuditCell& at(ModelKind panel, Community c, Target t) const;
};

using ModelSet = std::map<std::pair<ModelKind, Target>, TrainedModel>;

/// Runs every (panel, community, target) cell. All required models must be
/// present and share one set of training states; otherwise nothing is run.
AuditMatrix audit_matrix(const Dataset& ds, const ModelSet& models,
                         const std::vector<Community>& communities,
                         const std::vector<Target>& targets,
                         const AuditOptions& options);

/// Minimal per-cell record, the content of report.csv.
struct ReportRow {
  std::string panel;  // "LR" or "RF"
  Community community = Community::ST;
  Target target = Target::Poverty;
  double mean_diff = 0.0;
  double t_abs = 0.0;
  double p_t = 1.0;
  double u = 0.0;
  double p_u = 1.0;
  std::size_t n_pairs = 0;
};

std::string_view panel_name(ModelKind k);
std::vector<ReportRow> report_rows(const AuditMatrix& matrix);

/// `panel,community,target,mean_diff,t_abs,p_t,u,p_u,n_pairs`
void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out);
std::vector<ReportRow> read_report_csv(std::istream& in);

/// Significance stars: * p<0.1, ** p<0.05, *** p<0.01.
std::string_view stars(double p);

/// Aligned plain-text table, one panel per model family.
void write_report_text(const std::vector<ReportRow>& rows, std::ostream& out);

/// Per-cell diagnostics beyond report.csv (degrees of freedom, group sizes,
/// match quality).
void write_match_quality_csv(const AuditMatrix& matrix, std::ostream& out);

}  // namespace geofair
