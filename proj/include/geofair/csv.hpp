#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace geofair::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and doubled
/// quotes; embedded newlines are not supported. A trailing '\r' is ignored.
/// Returns false when a quoted field is left unterminated.
bool split_record(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string quote(std::string_view field);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict full-field number parsing; no leading/trailing whitespace accepted.
bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, long long& out);

}  // namespace geofair::csv
