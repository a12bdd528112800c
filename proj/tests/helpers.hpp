#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geofair/data.hpp"

namespace geofair::testing {

inline VillageRecord village(std::string id, std::string state = "S0",
                             double ntl = 1.0, double poverty = 0.3) {
  VillageRecord r;
  r.village_id = std::move(id);
  r.state_id = std::move(state);
  r.lat = 20.0;
  r.lon = 80.0;
  r.ntl = ntl;
  r.population = 800;
  r.poverty_rate = poverty;
  r.electricity = true;
  r.share_sc = 0.1;
  r.share_st = 0.0;
  return r;
}

inline Dataset dataset(std::vector<VillageRecord> records) {
  return Dataset(std::move(records), "test");
}

}  // namespace geofair::testing
