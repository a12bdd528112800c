#pragma once

#include <optional>
#include <string_view>

#include "geofair/data.hpp"

namespace geofair {

enum class Community { SC, ST };
enum class Target { Poverty, Electricity };
enum class Sign { Negative = -1, None = 0, Positive = 1 };

std::string_view to_string(Community c);
std::string_view to_string(Target t);
std::string_view to_string(Sign s);

/// Accepts "sc"/"st" (case-insensitive).
std::optional<Community> parse_community(std::string_view text);
/// Accepts "poverty"/"poverty_rate" and "electricity".
std::optional<Target> parse_target(std::string_view text);

/// Column name of the target in the village table.
std::string_view target_column(Target t);

double community_share(const VillageRecord& r, Community c);
/// Poverty rate, or electricity as 0/1; nullopt when electricity is missing.
std::optional<double> target_value(const VillageRecord& r, Target t);

}  // namespace geofair
