#include "moralmt/registry.hpp"

#include <json.hpp>

#include "moralmt/builtin_data.hpp"
#include "moralmt/error.hpp"

namespace moralmt {

using nlohmann::json;

namespace {

AttributeProfile profile_from(const std::string& model, const json& j) {
  AttributeProfile p;
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw Error("model '" + model + "' lacks '" + key + "'");
    return j.at(key);
  };
  const auto age = parse_age_group(need("age_group").get<std::string>());
  const auto gender = parse_gender(need("gender").get<std::string>());
  const auto tone = parse_skin_tone(need("skin_tone").get<std::string>());
  if (!age || !gender || !tone) throw Error("model '" + model + "' has an unknown attribute");
  p.age_group = *age;
  p.gender = *gender;
  p.skin_tone = *tone;
  p.height = need("height").get<double>();
  return p;
}

}  // namespace

const Registry& Registry::builtin() {
  static const Registry r = from_json(builtin::kModelsJson, builtin::kMapsJson);
  return r;
}

Registry Registry::from_json(std::string_view models_json, std::string_view maps_json) {
  Registry r;
  try {
    if (!models_json.empty()) {
      const json models = json::parse(models_json);
      if (models.contains("pedestrians")) {
        for (const auto& [name, p] : models.at("pedestrians").items()) {
          r.peds_[name] = profile_from(name, p);
        }
      }
      if (models.contains("animals")) {
        for (const auto& [kind, cls] : models.at("animals").items()) {
          const auto c = cls.get<std::string>();
          if (c == "pet") {
            r.animals_[kind] = SpeciesKind::Pet;
          } else if (c == "wild") {
            r.animals_[kind] = SpeciesKind::WildAnimal;
          } else {
            throw Error("animal '" + kind + "' has unknown class '" + c + "'");
          }
        }
      }
    }
    if (!maps_json.empty()) {
      const json maps = json::parse(maps_json);
      for (const auto& [name, m] : maps.items()) {
        MapSpec spec;
        spec.name = name;
        spec.lane_count = m.at("lane_count").get<int>();
        spec.lane_width = m.at("lane_width").get<double>();
        spec.crossing_distance = m.at("crossing_distance").get<double>();
        spec.heading = m.value("heading", 0.0);
        r.maps_[name] = spec;
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("registry: ") + e.what());
  }
  return r;
}

void Registry::merge(const Registry& other) {
  for (const auto& [k, v] : other.peds_) peds_[k] = v;
  for (const auto& [k, v] : other.animals_) animals_[k] = v;
  for (const auto& [k, v] : other.maps_) maps_[k] = v;
}

std::optional<AttributeProfile> Registry::pedestrian(std::string_view model) const {
  if (auto it = peds_.find(model); it != peds_.end()) return it->second;
  return std::nullopt;
}

std::optional<SpeciesKind> Registry::animal(std::string_view kind) const {
  if (auto it = animals_.find(kind); it != animals_.end()) return it->second;
  return std::nullopt;
}

std::optional<MapSpec> Registry::map(std::string_view name) const {
  if (auto it = maps_.find(name); it != maps_.end()) return it->second;
  return std::nullopt;
}

}  // namespace moralmt
