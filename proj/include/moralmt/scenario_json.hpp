#pragma once

#include <json.hpp>

#include "moralmt/scenario.hpp"

// Lossless JSON mirror of the scenario model, for tooling.
namespace moralmt {

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AttributeProfile& p);
AttributeProfile profile_from_json(const nlohmann::json& j);

}  // namespace moralmt
