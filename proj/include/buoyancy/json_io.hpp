#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "buoyancy/engine.hpp"
#include "buoyancy/model.hpp"
#include "buoyancy/plant.hpp"

namespace buoyancy {

// Conversions between domain types and JSON. Readers throw ConfigError with
// the offending key in the message.

nlohmann::json to_json(const CacheTopology& topology);
CacheTopology topology_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ResourceScores& scores);
nlohmann::json to_json(const BuoyancyReport& report);
nlohmann::json to_json(const NodeReport& report);

// {"<workload_id>": {"kpi_name": ..., "slo_value": ...}, ...}
std::map<std::string, SloSpec> slos_from_json(const nlohmann::json& j);

PlantConfig plant_config_from_json(const nlohmann::json& j);
Allocation allocation_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

}  // namespace buoyancy
