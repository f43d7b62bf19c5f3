#include <charconv>
#include <sstream>

#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"

namespace moralmt::dsl {

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string pos(Vec2 p) { return "(" + format_number(p.x) + ", " + format_number(p.y) + ")"; }

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

std::string serialize(const Scenario& s) {
  std::ostringstream os;
  const auto& m = s.map;
  const auto& e = s.ego;
  os << "// " << s.id << "\n";
  os << "mts_map = " << quote(m.name) << ";\n";
  os << "mts_ego = AV((" << pos(e.init_position) << ", , " << format_number(e.init_speed) << "), "
     << e.init_lane << ", (" << format_number(e.max_brake_decel) << ", "
     << format_number(e.max_lateral_speed) << ", " << format_number(e.body_radius) << ", "
     << format_number(e.max_accel) << "), " << quote(e.model_name) << ");\n";

  for (const auto& c : s.characters) {
    os << "mts_c" << c.slot << " = ";
    const std::string init = "(" + pos(c.position) + ", " + format_number(c.heading) + ", " +
                             format_number(c.walk_speed) + ")";
    if (c.species.is_human()) {
      const auto& p = c.profile;
      os << "Pedestrian(" << init << ", " << c.lane << ", "
         << quote(c.compliance ? "compliant" : "violating") << ", (" << quote(to_string(p.age_group))
         << ", " << quote(to_string(p.gender)) << ", " << quote(to_string(p.skin_tone)) << ", "
         << format_number(p.height) << "), " << format_number(c.body_radius) << ", "
         << quote(c.model) << ");\n";
    } else {
      os << "Animal(" << init << ", " << c.lane << ", " << quote(c.species.animal_kind) << ", "
         << quote(c.species.kind == SpeciesKind::Pet ? "pet" : "wild") << ", "
         << format_number(c.body_radius) << ");\n";
    }
  }

  os << s.id << " = CreateScenario{load(mts_map, (" << m.lane_count << ", "
     << format_number(m.lane_width) << ", " << format_number(m.crossing_distance) << ", "
     << format_number(m.heading) << "));\n";
  os << "    mts_ego;\n    {";
  for (std::size_t i = 0; i < s.characters.size(); ++i) {
    os << (i ? ", " : "") << "mts_c" << s.characters[i].slot;
  }
  os << "};\n    signals(";
  for (std::size_t i = 0; i < s.signals.size(); ++i) {
    os << (i ? ", " : "") << quote(to_string(s.signals[i]));
  }
  os << ")";
  if (s.seed_slot) os << ";\n    seed(" << *s.seed_slot << ")";
  os << "};\n";
  return os.str();
}

}  // namespace moralmt::dsl
