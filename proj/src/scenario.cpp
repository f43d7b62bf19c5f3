#include "moralmt/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "moralmt/error.hpp"

namespace moralmt {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_identifier(std::string_view id) {
  if (id.empty() || id.rfind("mts_", 0) == 0) return false;
  if (!(std::isalpha(static_cast<unsigned char>(id[0])) || id[0] == '_')) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  static constexpr std::string_view reserved[] = {"AV",   "Pedestrian", "Animal", "CreateScenario",
                                                  "load", "signals",    "seed"};
  for (auto r : reserved) {
    if (id == r) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(AgeGroup v) {
  switch (v) {
    case AgeGroup::Child: return "child";
    case AgeGroup::Adult: return "adult";
    case AgeGroup::Elderly: return "elderly";
  }
  return "?";
}

std::string_view to_string(Gender v) { return v == Gender::Male ? "male" : "female"; }

std::string_view to_string(SkinTone v) {
  static constexpr std::string_view names[] = {"A", "B", "C", "D", "E"};
  return names[static_cast<int>(v)];
}

std::string_view to_string(SignalState v) { return v == SignalState::Green ? "green" : "red"; }

std::string_view to_string(SpeciesKind v) {
  switch (v) {
    case SpeciesKind::Human: return "human";
    case SpeciesKind::Pet: return "pet";
    case SpeciesKind::WildAnimal: return "wild";
  }
  return "?";
}

std::string_view to_string(LaneCompliance v) {
  switch (v) {
    case LaneCompliance::AllCompliant: return "AllCompliant";
    case LaneCompliance::AllViolating: return "AllViolating";
    case LaneCompliance::Mixed: return "Mixed";
    case LaneCompliance::NoHumans: return "NoHumans";
  }
  return "?";
}

std::optional<AgeGroup> parse_age_group(std::string_view s) {
  const auto l = lower(s);
  if (l == "child") return AgeGroup::Child;
  if (l == "adult") return AgeGroup::Adult;
  if (l == "elderly") return AgeGroup::Elderly;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view s) {
  const auto l = lower(s);
  if (l == "male") return Gender::Male;
  if (l == "female") return Gender::Female;
  return std::nullopt;
}

std::optional<SkinTone> parse_skin_tone(std::string_view s) {
  auto l = lower(s);
  if (l.rfind("tone", 0) == 0) l = l.substr(4);
  if (l.size() != 1 || l[0] < 'a' || l[0] > 'e') return std::nullopt;
  return static_cast<SkinTone>(l[0] - 'a');
}

std::optional<SignalState> parse_signal(std::string_view s) {
  const auto l = lower(s);
  if (l == "green") return SignalState::Green;
  if (l == "red") return SignalState::Red;
  return std::nullopt;
}

AttributeProfile animal_profile() {
  return {AgeGroup::Adult, Gender::Male, SkinTone::C, 0.8};
}

RoadFrame RoadFrame::of(const Scenario& s) {
  RoadFrame f;
  f.origin = s.ego.init_position;
  f.heading = s.map.heading;
  if (s.map.heading != 0.0) {
    f.along = {std::cos(s.map.heading), std::sin(s.map.heading)};
    f.left = {-f.along.y, f.along.x};
  }
  f.lane_width = s.map.lane_width;
  f.lane_count = s.map.lane_count;
  f.origin_lane = s.ego.init_lane;
  return f;
}

int RoadFrame::lane_at(double d) const {
  return origin_lane + static_cast<int>(std::lround(d / lane_width));
}

ProtectedProjection protected_projection(const Scenario& s) {
  ProtectedProjection out;
  out.reserve(s.characters.size());
  for (const auto& c : s.characters) out.emplace_back(c.slot, c.profile);
  return out;
}

NonProtectedProjection non_protected_projection(const Scenario& s) {
  NonProtectedProjection np{s.map, s.ego, {}, s.signals, s.seed_slot};
  np.characters.reserve(s.characters.size());
  for (const auto& c : s.characters) {
    np.characters.push_back({c.slot, c.species, c.lane, c.position, c.walk_speed, c.heading,
                             c.compliance, c.body_radius, c.model});
  }
  return np;
}

Scenario reconstruct(const NonProtectedProjection& np, const ProtectedProjection& p,
                     std::string id) {
  if (np.characters.size() != p.size()) {
    throw Error("reconstruct: projections disagree on character count");
  }
  Scenario s{std::move(id), np.map, np.ego, {}, np.signals, np.seed_slot};
  s.characters.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& c = np.characters[i];
    if (p[i].first != c.slot) throw Error("reconstruct: slot order mismatch");
    s.characters.push_back({c.slot, c.species, p[i].second, c.lane, c.position, c.walk_speed,
                            c.heading, c.compliance, c.body_radius, c.model});
  }
  return s;
}

int lane_human_count(const Scenario& s, int lane) {
  if (lane < 1 || lane > s.map.lane_count) {
    throw Error("unknown lane index " + std::to_string(lane));
  }
  return static_cast<int>(std::count_if(s.characters.begin(), s.characters.end(),
                                        [lane](const Character& c) {
                                          return c.species.is_human() && c.lane == lane;
                                        }));
}

LaneCompliance lane_compliance(const Scenario& s, int lane) {
  int compliant = 0;
  int violating = 0;
  for (const auto& c : s.characters) {
    if (!c.species.is_human() || c.lane != lane) continue;
    (c.compliance ? compliant : violating) += 1;
  }
  if (compliant == 0 && violating == 0) return LaneCompliance::NoHumans;
  if (violating == 0) return LaneCompliance::AllCompliant;
  if (compliant == 0) return LaneCompliance::AllViolating;
  return LaneCompliance::Mixed;
}

int human_count(const Scenario& s) {
  return static_cast<int>(std::count_if(s.characters.begin(), s.characters.end(),
                                        [](const Character& c) { return c.species.is_human(); }));
}

int animal_count(const Scenario& s) {
  return static_cast<int>(s.characters.size()) - human_count(s);
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::EmptyId: return "EmptyId";
    case Rule::InvalidId: return "InvalidId";
    case Rule::LaneCountOutOfRange: return "LaneCountOutOfRange";
    case Rule::NonPositiveLaneWidth: return "NonPositiveLaneWidth";
    case Rule::NonPositiveCrossingDistance: return "NonPositiveCrossingDistance";
    case Rule::NonFinite: return "NonFinite";
    case Rule::NegativeSpeed: return "NegativeSpeed";
    case Rule::NonPositiveBrake: return "NonPositiveBrake";
    case Rule::NonPositiveLateralSpeed: return "NonPositiveLateralSpeed";
    case Rule::NonPositiveAccel: return "NonPositiveAccel";
    case Rule::NonPositiveRadius: return "NonPositiveRadius";
    case Rule::LaneOutOfRange: return "LaneOutOfRange";
    case Rule::LaneMismatch: return "LaneMismatch";
    case Rule::SlotMismatch: return "SlotMismatch";
    case Rule::HeightOutOfRange: return "HeightOutOfRange";
    case Rule::ChildTooTall: return "ChildTooTall";
    case Rule::AnimalProfile: return "AnimalProfile";
    case Rule::AnimalCompliance: return "AnimalCompliance";
    case Rule::AnimalKindMissing: return "AnimalKindMissing";
    case Rule::Overlap: return "Overlap";
    case Rule::SignalCount: return "SignalCount";
  }
  return "?";
}

std::vector<Violation> validate(const Scenario& s) {
  std::vector<Violation> out;
  auto fail = [&out](Rule r, std::string field, std::string msg) {
    out.push_back({r, std::move(field), std::move(msg)});
  };
  auto finite = [&](double v, const std::string& field) {
    if (!std::isfinite(v)) fail(Rule::NonFinite, field, "value is not finite");
    return std::isfinite(v);
  };

  if (s.id.empty()) {
    fail(Rule::EmptyId, "id", "scenario id is empty");
  } else if (!is_identifier(s.id)) {
    fail(Rule::InvalidId, "id", "scenario id must be an identifier not starting with 'mts_'");
  }

  const auto& m = s.map;
  if (m.lane_count < 1 || m.lane_count > 4) {
    fail(Rule::LaneCountOutOfRange, "map.lane_count", "must lie in [1, 4]");
  }
  if (finite(m.lane_width, "map.lane_width") && !(m.lane_width > 0.0)) {
    fail(Rule::NonPositiveLaneWidth, "map.lane_width", "must be > 0");
  }
  if (finite(m.crossing_distance, "map.crossing_distance") && !(m.crossing_distance > 0.0)) {
    fail(Rule::NonPositiveCrossingDistance, "map.crossing_distance", "must be > 0");
  }
  finite(m.heading, "map.heading");

  const auto& e = s.ego;
  finite(e.init_position.x, "ego.init_position.x");
  finite(e.init_position.y, "ego.init_position.y");
  if (finite(e.init_speed, "ego.init_speed") && e.init_speed < 0.0) {
    fail(Rule::NegativeSpeed, "ego.init_speed", "must be >= 0");
  }
  if (finite(e.max_brake_decel, "ego.max_brake_decel") && !(e.max_brake_decel > 0.0)) {
    fail(Rule::NonPositiveBrake, "ego.max_brake_decel", "must be > 0");
  }
  if (finite(e.max_lateral_speed, "ego.max_lateral_speed") && !(e.max_lateral_speed > 0.0)) {
    fail(Rule::NonPositiveLateralSpeed, "ego.max_lateral_speed", "must be > 0");
  }
  if (finite(e.max_accel, "ego.max_accel") && !(e.max_accel > 0.0)) {
    fail(Rule::NonPositiveAccel, "ego.max_accel", "must be > 0");
  }
  if (finite(e.body_radius, "ego.body_radius") && !(e.body_radius > 0.0)) {
    fail(Rule::NonPositiveRadius, "ego.body_radius", "must be > 0");
  }
  if (e.init_lane < 1 || e.init_lane > m.lane_count) {
    fail(Rule::LaneOutOfRange, "ego.init_lane",
         "lane " + std::to_string(e.init_lane) + " not in map");
  }

  if (static_cast<int>(s.signals.size()) != m.lane_count) {
    fail(Rule::SignalCount, "signals", "expected one signal per lane");
  }

  const bool geometry_ok = out.empty();
  const RoadFrame road = RoadFrame::of(s);
  std::vector<double> along(s.characters.size(), 0.0);

  for (std::size_t i = 0; i < s.characters.size(); ++i) {
    const auto& c = s.characters[i];
    const std::string f = "characters[" + std::to_string(i) + "]";
    if (c.slot != i) fail(Rule::SlotMismatch, f + ".slot", "slot must equal list position");
    const bool pos_ok = finite(c.position.x, f + ".position.x") &
                        finite(c.position.y, f + ".position.y");
    finite(c.heading, f + ".heading");
    if (finite(c.walk_speed, f + ".walk_speed") && c.walk_speed < 0.0) {
      fail(Rule::NegativeSpeed, f + ".walk_speed", "must be >= 0");
    }
    if (finite(c.body_radius, f + ".body_radius") && !(c.body_radius > 0.0)) {
      fail(Rule::NonPositiveRadius, f + ".body_radius", "must be > 0");
    }
    if (c.lane < 1 || c.lane > m.lane_count) {
      fail(Rule::LaneOutOfRange, f + ".lane", "lane " + std::to_string(c.lane) + " not in map");
    } else if (geometry_ok && pos_ok) {
      const double off = road.lateral(c.position) - road.lane_center(c.lane);
      if (std::abs(off) > 0.5 * m.lane_width + 1e-9) {
        fail(Rule::LaneMismatch, f + ".position", "position lies outside its lane");
      }
    }
    if (pos_ok) along[i] = road.longitudinal(c.position);

    if (c.species.is_human()) {
      const auto& p = c.profile;
      if (!(p.height > 0.5 && p.height < 2.5)) {
        fail(Rule::HeightOutOfRange, f + ".profile.height", "must lie in (0.5, 2.5)");
      } else if (p.age_group == AgeGroup::Child && p.height > 1.5) {
        fail(Rule::ChildTooTall, f + ".profile.height", "child height must be <= 1.5");
      }
    } else {
      if (c.profile != animal_profile()) {
        fail(Rule::AnimalProfile, f + ".profile", "animals carry the fixed default profile");
      }
      if (!c.compliance) fail(Rule::AnimalCompliance, f + ".compliance", "animals are compliant");
      if (c.species.animal_kind.empty()) {
        fail(Rule::AnimalKindMissing, f + ".species", "animal kind is empty");
      }
    }
  }

  for (std::size_t i = 0; i < s.characters.size(); ++i) {
    for (std::size_t j = i + 1; j < s.characters.size(); ++j) {
      if (s.characters[i].lane != s.characters[j].lane) continue;
      if (std::abs(along[i] - along[j]) < 0.5) {
        fail(Rule::Overlap, "characters[" + std::to_string(j) + "].position",
             "within 0.5 m of characters[" + std::to_string(i) + "] in the same lane");
      }
    }
  }
  return out;
}

bool is_valid(const Scenario& s) { return validate(s).empty(); }

std::string describe(const std::vector<Violation>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << "; ";
    os << to_string(v[i].rule) << " at " << v[i].field << ": " << v[i].message;
  }
  return os.str();
}

}  // namespace moralmt
