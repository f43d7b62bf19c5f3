#include "moralmt/scenario_json.hpp"

#include "moralmt/error.hpp"

namespace moralmt {

using nlohmann::json;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }
Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <class E, class F>
E enum_from(const json& j, F parse, const char* what) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw Error(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

std::optional<SpeciesKind> parse_species(std::string_view s) {
  if (s == "human") return SpeciesKind::Human;
  if (s == "pet") return SpeciesKind::Pet;
  if (s == "wild") return SpeciesKind::WildAnimal;
  return std::nullopt;
}

}  // namespace

json to_json(const AttributeProfile& p) {
  return {{"age_group", to_string(p.age_group)},
          {"gender", to_string(p.gender)},
          {"skin_tone", to_string(p.skin_tone)},
          {"height", p.height}};
}

AttributeProfile profile_from_json(const json& j) {
  return {enum_from<AgeGroup>(j.at("age_group"), parse_age_group, "age_group"),
          enum_from<Gender>(j.at("gender"), parse_gender, "gender"),
          enum_from<SkinTone>(j.at("skin_tone"), parse_skin_tone, "skin_tone"),
          j.at("height").get<double>()};
}

json to_json(const Scenario& s) {
  json chars = json::array();
  for (const auto& c : s.characters) {
    chars.push_back({{"slot", c.slot},
                     {"species", to_string(c.species.kind)},
                     {"animal_kind", c.species.animal_kind},
                     {"profile", to_json(c.profile)},
                     {"lane", c.lane},
                     {"position", vec(c.position)},
                     {"walk_speed", c.walk_speed},
                     {"heading", c.heading},
                     {"compliance", c.compliance},
                     {"body_radius", c.body_radius},
                     {"model", c.model}});
  }
  json signals = json::array();
  for (auto v : s.signals) signals.push_back(to_string(v));
  json j = {{"id", s.id},
            {"map",
             {{"name", s.map.name},
              {"lane_count", s.map.lane_count},
              {"lane_width", s.map.lane_width},
              {"crossing_distance", s.map.crossing_distance},
              {"heading", s.map.heading}}},
            {"ego",
             {{"model_name", s.ego.model_name},
              {"init_position", vec(s.ego.init_position)},
              {"init_speed", s.ego.init_speed},
              {"init_lane", s.ego.init_lane},
              {"max_brake_decel", s.ego.max_brake_decel},
              {"max_lateral_speed", s.ego.max_lateral_speed},
              {"body_radius", s.ego.body_radius},
              {"max_accel", s.ego.max_accel}}},
            {"characters", std::move(chars)},
            {"signals", std::move(signals)}};
  j["seed_slot"] = s.seed_slot ? json(*s.seed_slot) : json(nullptr);
  return j;
}

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.id = j.at("id").get<std::string>();
    const auto& m = j.at("map");
    s.map = {m.at("name").get<std::string>(), m.at("lane_count").get<int>(),
             m.at("lane_width").get<double>(), m.at("crossing_distance").get<double>(),
             m.at("heading").get<double>()};
    const auto& e = j.at("ego");
    s.ego = {e.at("model_name").get<std::string>(), vec_from(e.at("init_position")),
             e.at("init_speed").get<double>(),      e.at("init_lane").get<int>(),
             e.at("max_brake_decel").get<double>(), e.at("max_lateral_speed").get<double>(),
             e.at("body_radius").get<double>(),     e.at("max_accel").get<double>()};
    for (const auto& c : j.at("characters")) {
      Character ch;
      ch.slot = c.at("slot").get<std::size_t>();
      ch.species = {enum_from<SpeciesKind>(c.at("species"), parse_species, "species"),
                    c.at("animal_kind").get<std::string>()};
      ch.profile = profile_from_json(c.at("profile"));
      ch.lane = c.at("lane").get<int>();
      ch.position = vec_from(c.at("position"));
      ch.walk_speed = c.at("walk_speed").get<double>();
      ch.heading = c.at("heading").get<double>();
      ch.compliance = c.at("compliance").get<bool>();
      ch.body_radius = c.at("body_radius").get<double>();
      ch.model = c.at("model").get<std::string>();
      s.characters.push_back(std::move(ch));
    }
    for (const auto& v : j.at("signals")) {
      s.signals.push_back(enum_from<SignalState>(v, parse_signal, "signal"));
    }
    if (j.contains("seed_slot") && !j.at("seed_slot").is_null()) {
      s.seed_slot = j.at("seed_slot").get<std::uint64_t>();
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("scenario json: ") + e.what());
  }
}

}  // namespace moralmt
