#include <json.hpp>

#include "bevdrive/env/environment.hpp"

namespace bevdrive::env {

std::string scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["town_seed"] = s.town_seed;
  j["town"] = {{"grid_rows", s.town_spec.grid_rows},
               {"grid_cols", s.town_spec.grid_cols},
               {"block_m", s.town_spec.block_m},
               {"lane_width", s.town_spec.lane_width},
               {"lanes", s.town_spec.lanes},
               {"junction_fraction", s.town_spec.junction_fraction},
               {"box_clearance_m", s.town_spec.box_clearance_m},
               {"green_s", s.town_spec.green_s},
               {"yellow_s", s.town_spec.yellow_s},
               {"red_s", s.town_spec.red_s}};
  auto mission = nlohmann::ordered_json::array();
  for (const auto& g : s.mission) {
    mission.push_back({g.longitude, g.latitude, g.altitude});
  }
  j["mission"] = mission;
  j["traffic"] = s.traffic_count;
  j["pedestrians"] = s.pedestrian_count;
  j["step_limit"] = s.step_limit;
  j["variant"] = variant_name(s.variant);
  return j.dump();
}

Scenario scenario_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Scenario s;
  s.town_seed = j.at("town_seed").get<uint64_t>();
  const auto& t = j.at("town");
  s.town_spec.grid_rows = t.at("grid_rows").get<int>();
  s.town_spec.grid_cols = t.at("grid_cols").get<int>();
  s.town_spec.block_m = t.at("block_m").get<double>();
  s.town_spec.lane_width = t.at("lane_width").get<double>();
  s.town_spec.lanes = t.at("lanes").get<int>();
  s.town_spec.junction_fraction = t.at("junction_fraction").get<double>();
  s.town_spec.box_clearance_m = t.at("box_clearance_m").get<double>();
  s.town_spec.green_s = t.at("green_s").get<double>();
  s.town_spec.yellow_s = t.at("yellow_s").get<double>();
  s.town_spec.red_s = t.at("red_s").get<double>();
  for (const auto& g : j.at("mission")) {
    s.mission.push_back({g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>()});
  }
  s.traffic_count = j.at("traffic").get<int>();
  s.pedestrian_count = j.at("pedestrians").get<int>();
  s.step_limit = j.at("step_limit").get<int>();
  s.variant = variant_from_name(j.at("variant").get<std::string>());
  return s;
}

}  // namespace bevdrive::env
