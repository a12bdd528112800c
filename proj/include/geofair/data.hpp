#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geofair {

inline constexpr double kNtlMax = 63.0;

/// Exact CSV header of a village table.
inline constexpr std::string_view kVillageCsvHeader =
    "village_id,state_id,lat,lon,ntl,population,poverty_rate,electricity,"
    "share_sc,share_st";

struct VillageRecord {
  std::string village_id;
  std::string state_id;
  double lat = 0.0;
  double lon = 0.0;
  double ntl = 0.0;  // DMSP digital number, [0, 63]
  std::int64_t population = 0;
  double poverty_rate = 0.0;
  std::optional<bool> electricity;  // all households fully electrified
  double share_sc = 0.0;
  double share_st = 0.0;

  bool operator==(const VillageRecord&) const = default;
};

/// Returns the name of the first field violating the record invariants, or
/// an empty view when the record is valid.
std::string_view first_invalid_field(const VillageRecord& r);

/// Immutable, non-empty, ordered collection of villages with unique ids.
class Dataset {
 public:
  /// Validates every record; throws Error on an empty list, an invalid
  /// record, or a duplicate village_id.
  Dataset(std::vector<VillageRecord> records, std::string provenance);

  std::span<const VillageRecord> records() const { return records_; }
  const VillageRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  const std::string& provenance() const { return provenance_; }

  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  /// Sorted distinct state ids.
  std::vector<std::string> state_ids() const;

  /// Records satisfying `keep`, in original order. Throws EmptyDataset if
  /// nothing survives.
  Dataset filter(const std::function<bool(const VillageRecord&)>& keep,
                 std::string provenance) const;

  bool operator==(const Dataset& other) const {
    return records_ == other.records_;
  }

 private:
  std::vector<VillageRecord> records_;
  std::string provenance_;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string field;
  std::string reason;
};

struct IngestDiagnostics {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t zero_population = 0;
  std::vector<RowIssue> issues;  // one per dropped row
};

struct IngestResult {
  Dataset dataset;
  IngestDiagnostics diagnostics;
};

/// Reads a village CSV. In strict mode the first invalid row raises
/// RowInvalid; otherwise invalid rows are dropped and reported.
IngestResult ingest_csv(const std::filesystem::path& path, bool strict);
IngestResult ingest_csv(std::istream& in, bool strict,
                        std::string provenance = "stream");

void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Percentile by linear interpolation between order statistics of a sorted
/// sample: position q * (n - 1).
double percentile_sorted(std::span<const double> sorted, double q);
double percentile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct VariableSummary {
  std::string variable;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator; 0 when n == 1
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SummaryTable {
  std::vector<VariableSummary> rows;

  const VariableSummary& at(std::string_view variable) const;
};

/// Per-variable statistics over poverty_rate, electricity, ntl, population,
/// share_sc, share_st. Missing electricity is excluded from its own row only.
SummaryTable summarize(const Dataset& ds);

/// CSV with header `variable,n,mean,std,p25,p50,p75`.
void write_summary_csv(const SummaryTable& table, std::ostream& out);

}  // namespace geofair
