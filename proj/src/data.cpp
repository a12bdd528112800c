#include "geofair/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_set>

#include "geofair/csv.hpp"
#include "geofair/error.hpp"

namespace geofair {

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

constexpr std::size_t kColumns = 10;

std::string row_error(std::size_t line, std::string_view field,
                      std::string_view reason) {
  return "line " + std::to_string(line) + ", field '" + std::string(field) +
         "': " + std::string(reason);
}

// Parses one data row. On failure fills `field`/`reason` and returns false.
bool parse_row(const std::vector<std::string>& cells, VillageRecord& r,
               std::string& field, std::string& reason) {
  if (cells.size() != kColumns) {
    field = "<row>";
    reason = "expected " + std::to_string(kColumns) + " cells, got " +
             std::to_string(cells.size());
    return false;
  }
  static constexpr std::string_view names[kColumns] = {
      "village_id", "state_id",     "lat",         "lon",      "ntl",
      "population", "poverty_rate", "electricity", "share_sc", "share_st"};
  for (std::size_t i = 0; i < kColumns; ++i) {
    if (cells[i].empty() && names[i] != "electricity") {
      field = names[i];
      reason = "missing value";
      return false;
    }
  }
  r.village_id = cells[0];
  r.state_id = cells[1];
  auto num = [&](std::size_t i, double& out) {
    if (!csv::parse_double(cells[i], out)) {
      field = names[i];
      reason = "not a number: '" + cells[i] + "'";
      return false;
    }
    return true;
  };
  if (!num(2, r.lat) || !num(3, r.lon) || !num(4, r.ntl) ||
      !num(6, r.poverty_rate) || !num(8, r.share_sc) || !num(9, r.share_st)) {
    return false;
  }
  long long pop = 0;
  if (!csv::parse_int64(cells[5], pop)) {
    field = "population";
    reason = "not an integer: '" + cells[5] + "'";
    return false;
  }
  r.population = pop;
  if (cells[7].empty()) {
    r.electricity.reset();
  } else if (cells[7] == "0") {
    r.electricity = false;
  } else if (cells[7] == "1") {
    r.electricity = true;
  } else {
    field = "electricity";
    reason = "expected 0, 1 or empty: '" + cells[7] + "'";
    return false;
  }
  if (auto bad = first_invalid_field(r); !bad.empty()) {
    field = bad;
    reason = "value out of range";
    return false;
  }
  return true;
}

}  // namespace

std::string_view first_invalid_field(const VillageRecord& r) {
  if (r.village_id.empty()) return "village_id";
  if (r.state_id.empty()) return "state_id";
  if (!std::isfinite(r.lat) || r.lat < -90.0 || r.lat > 90.0) return "lat";
  if (!std::isfinite(r.lon) || r.lon < -180.0 || r.lon > 180.0) return "lon";
  if (!std::isfinite(r.ntl) || r.ntl < 0.0 || r.ntl > kNtlMax) return "ntl";
  if (r.population < 0) return "population";
  if (!in_unit(r.poverty_rate)) return "poverty_rate";
  if (!in_unit(r.share_sc)) return "share_sc";
  if (!in_unit(r.share_st)) return "share_st";
  return {};
}

Dataset::Dataset(std::vector<VillageRecord> records, std::string provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
  if (records_.empty()) {
    throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (auto bad = first_invalid_field(r); !bad.empty()) {
      throw Error(ErrorCode::RowInvalid, "record " + std::to_string(i) +
                                             " (" + r.village_id +
                                             "): invalid " + std::string(bad));
    }
    if (!seen.insert(r.village_id).second) {
      throw Error(ErrorCode::DuplicateId,
                  "village_id '" + r.village_id + "' appears more than once");
    }
  }
}

std::vector<std::string> Dataset::state_ids() const {
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.state_id);
  return {ids.begin(), ids.end()};
}

Dataset Dataset::filter(const std::function<bool(const VillageRecord&)>& keep,
                        std::string provenance) const {
  std::vector<VillageRecord> kept;
  for (const auto& r : records_) {
    if (keep(r)) kept.push_back(r);
  }
  return Dataset(std::move(kept), std::move(provenance));
}

IngestResult ingest_csv(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::FileNotFound, path.string());
    }
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return ingest_csv(in, strict, path.string());
}

IngestResult ingest_csv(std::istream& in, bool strict, std::string provenance) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaMismatch, "missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kVillageCsvHeader) {
    throw Error(ErrorCode::SchemaMismatch,
                "header must be exactly '" + std::string(kVillageCsvHeader) +
                    "', got '" + line + "'");
  }

  IngestDiagnostics diag;
  std::vector<VillageRecord> records;
  std::unordered_set<std::string> seen;
  std::vector<std::string> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++diag.rows_read;
    VillageRecord r;
    std::string field;
    std::string reason;
    bool ok = csv::split_record(line, cells);
    if (!ok) {
      field = "<row>";
      reason = "unterminated quoted field";
    } else {
      ok = parse_row(cells, r, field, reason);
    }
    if (ok && seen.contains(r.village_id)) {
      ok = false;
      field = "village_id";
      reason = "duplicate id '" + r.village_id + "'";
    }
    if (!ok) {
      if (strict) {
        throw Error(ErrorCode::RowInvalid, row_error(line_no, field, reason));
      }
      ++diag.rows_dropped;
      diag.issues.push_back({line_no, field, reason});
      continue;
    }
    if (r.population == 0) ++diag.zero_population;
    seen.insert(r.village_id);
    records.push_back(std::move(r));
  }
  if (records.empty()) {
    throw Error(ErrorCode::EmptyDataset,
                "no valid rows in " + provenance + " (" +
                    std::to_string(diag.rows_dropped) + " dropped)");
  }
  return {Dataset(std::move(records), std::move(provenance)), std::move(diag)};
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << kVillageCsvHeader << '\n';
  for (const auto& r : ds) {
    out << csv::quote(r.village_id) << ',' << csv::quote(r.state_id) << ','
        << csv::format_double(r.lat) << ',' << csv::format_double(r.lon) << ','
        << csv::format_double(r.ntl) << ',' << r.population << ','
        << csv::format_double(r.poverty_rate) << ',';
    if (r.electricity) out << (*r.electricity ? '1' : '0');
    out << ',' << csv::format_double(r.share_sc) << ','
        << csv::format_double(r.share_st) << '\n';
  }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_csv(ds, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) {
    throw Error(ErrorCode::InvalidArgument, "percentile of empty sample");
  }
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, q);
}

double median(std::vector<double> values) {
  return percentile(std::move(values), 0.5);
}

const VariableSummary& SummaryTable::at(std::string_view variable) const {
  for (const auto& row : rows) {
    if (row.variable == variable) return row;
  }
  throw Error(ErrorCode::InvalidArgument,
              "no summary row '" + std::string(variable) + "'");
}

namespace {

// Statistics are taken over the sorted sample so results do not depend on
// record order, down to the last bit.
VariableSummary describe(std::string name, std::vector<double> values) {
  VariableSummary s;
  s.variable = std::move(name);
  s.n = values.size();
  if (values.empty()) {
    const double nan = std::nan("");
    s.mean = s.std = s.p25 = s.p50 = s.p75 = s.min = s.max = nan;
    return s;
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  s.p25 = percentile_sorted(values, 0.25);
  s.p50 = percentile_sorted(values, 0.50);
  s.p75 = percentile_sorted(values, 0.75);
  s.min = values.front();
  s.max = values.back();
  return s;
}

}  // namespace

SummaryTable summarize(const Dataset& ds) {
  std::vector<double> poverty, electricity, ntl, population, sc, st;
  for (const auto& r : ds) {
    poverty.push_back(r.poverty_rate);
    if (r.electricity) electricity.push_back(*r.electricity ? 1.0 : 0.0);
    ntl.push_back(r.ntl);
    population.push_back(static_cast<double>(r.population));
    sc.push_back(r.share_sc);
    st.push_back(r.share_st);
  }
  SummaryTable t;
  t.rows.push_back(describe("poverty_rate", std::move(poverty)));
  t.rows.push_back(describe("electricity", std::move(electricity)));
  t.rows.push_back(describe("ntl", std::move(ntl)));
  t.rows.push_back(describe("population", std::move(population)));
  t.rows.push_back(describe("share_sc", std::move(sc)));
  t.rows.push_back(describe("share_st", std::move(st)));
  return t;
}

void write_summary_csv(const SummaryTable& table, std::ostream& out) {
  out << "variable,n,mean,std,p25,p50,p75\n";
  for (const auto& r : table.rows) {
    out << r.variable << ',' << r.n << ',' << csv::format_double(r.mean) << ','
        << csv::format_double(r.std) << ',' << csv::format_double(r.p25) << ','
        << csv::format_double(r.p50) << ',' << csv::format_double(r.p75)
        << '\n';
  }
}

}  // namespace geofair
