#include "geofair/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace geofair {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view to_string(Community c) {
  return c == Community::SC ? "SC" : "ST";
}

std::string_view to_string(Target t) {
  return t == Target::Poverty ? "poverty" : "electricity";
}

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Negative: return "-";
    case Sign::Positive: return "+";
    case Sign::None: break;
  }
  return "none";
}

std::optional<Community> parse_community(std::string_view text) {
  const auto t = lower(text);
  if (t == "sc") return Community::SC;
  if (t == "st") return Community::ST;
  return std::nullopt;
}

std::optional<Target> parse_target(std::string_view text) {
  const auto t = lower(text);
  if (t == "poverty" || t == "poverty_rate") return Target::Poverty;
  if (t == "electricity") return Target::Electricity;
  return std::nullopt;
}

std::string_view target_column(Target t) {
  return t == Target::Poverty ? "poverty_rate" : "electricity";
}

double community_share(const VillageRecord& r, Community c) {
  return c == Community::SC ? r.share_sc : r.share_st;
}

std::optional<double> target_value(const VillageRecord& r, Target t) {
  if (t == Target::Poverty) return r.poverty_rate;
  if (!r.electricity) return std::nullopt;
  return *r.electricity ? 1.0 : 0.0;
}

}  // namespace geofair
