#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace moralmt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

enum class AgeGroup { Child, Adult, Elderly };
enum class Gender { Male, Female };
enum class SkinTone { A, B, C, D, E };
enum class SignalState { Green, Red };
enum class SpeciesKind { Human, Pet, WildAnimal };

std::string_view to_string(AgeGroup v);
std::string_view to_string(Gender v);
std::string_view to_string(SkinTone v);
std::string_view to_string(SignalState v);
std::string_view to_string(SpeciesKind v);

std::optional<AgeGroup> parse_age_group(std::string_view s);
std::optional<Gender> parse_gender(std::string_view s);
std::optional<SkinTone> parse_skin_tone(std::string_view s);
std::optional<SignalState> parse_signal(std::string_view s);

struct Species {
  SpeciesKind kind = SpeciesKind::Human;
  std::string animal_kind;  // "dog", "boar", ...; empty for humans

  bool is_human() const { return kind == SpeciesKind::Human; }
  bool is_animal() const { return kind != SpeciesKind::Human; }

  static Species human() { return {}; }
  static Species pet(std::string kind) { return {SpeciesKind::Pet, std::move(kind)}; }
  static Species wild(std::string kind) { return {SpeciesKind::WildAnimal, std::move(kind)}; }

  friend bool operator==(const Species&, const Species&) = default;
};

struct AttributeProfile {
  AgeGroup age_group = AgeGroup::Adult;
  Gender gender = Gender::Male;
  SkinTone skin_tone = SkinTone::C;
  double height = 1.75;

  friend bool operator==(const AttributeProfile&, const AttributeProfile&) = default;
};

// Profile carried by every pet or wild animal. Oracles ignore it.
AttributeProfile animal_profile();

struct MapSpec {
  std::string name;
  int lane_count = 2;
  double lane_width = 3.5;
  double crossing_distance = 30.0;  // ego start to zebra crossing, along the road
  double heading = 0.0;             // world direction of travel, radians

  friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

struct EgoConfig {
  std::string model_name;
  Vec2 init_position;
  double init_speed = 0.0;
  int init_lane = 1;
  double max_brake_decel = 8.0;
  double max_lateral_speed = 4.0;
  double body_radius = 2.0;
  double max_accel = 3.0;

  friend bool operator==(const EgoConfig&, const EgoConfig&) = default;
};

struct Character {
  std::size_t slot = 0;
  Species species;
  AttributeProfile profile;
  int lane = 1;
  Vec2 position;
  double walk_speed = 0.0;
  double heading = 0.0;
  bool compliance = true;  // true: abides by the signal
  double body_radius = 0.3;
  std::string model;  // pedestrian asset name; profile is authoritative

  friend bool operator==(const Character&, const Character&) = default;
};

struct Scenario {
  std::string id;
  MapSpec map;
  EgoConfig ego;
  std::vector<Character> characters;
  std::vector<SignalState> signals;  // one per lane, index 0 = lane 1
  std::optional<std::uint64_t> seed_slot;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Road-aligned frame anchored at the ego start. `s` runs along the map
// heading, `d` is the lateral offset to the left. Lane k is centred at
// d = (k - ego.init_lane) * lane_width; lanes are numbered right to left.
struct RoadFrame {
  Vec2 origin;
  Vec2 along{1.0, 0.0};
  Vec2 left{0.0, 1.0};
  double heading = 0.0;
  double lane_width = 3.5;
  int lane_count = 2;
  int origin_lane = 1;

  static RoadFrame of(const Scenario& s);

  Vec2 to_world(double s, double d) const { return origin + s * along + d * left; }
  double longitudinal(Vec2 p) const { return dot(p - origin, along); }
  double lateral(Vec2 p) const { return dot(p - origin, left); }
  double lane_center(int lane) const { return (lane - origin_lane) * lane_width; }
  int lane_at(double d) const;
  bool has_lane(int lane) const { return lane >= 1 && lane <= lane_count; }

  friend bool operator==(const RoadFrame&, const RoadFrame&) = default;
};

// ---- attribute projections ------------------------------------------------

using ProtectedProjection = std::vector<std::pair<std::size_t, AttributeProfile>>;

struct NonProtectedCharacter {
  std::size_t slot = 0;
  Species species;
  int lane = 1;
  Vec2 position;
  double walk_speed = 0.0;
  double heading = 0.0;
  bool compliance = true;
  double body_radius = 0.3;
  std::string model;

  friend bool operator==(const NonProtectedCharacter&, const NonProtectedCharacter&) = default;
};

// Scenario content minus protected attributes. The scenario id is identity,
// not content, and is excluded so that a follow-up compares equal to its
// source.
struct NonProtectedProjection {
  MapSpec map;
  EgoConfig ego;
  std::vector<NonProtectedCharacter> characters;
  std::vector<SignalState> signals;
  std::optional<std::uint64_t> seed_slot;

  friend bool operator==(const NonProtectedProjection&, const NonProtectedProjection&) = default;
};

ProtectedProjection protected_projection(const Scenario& s);
NonProtectedProjection non_protected_projection(const Scenario& s);
Scenario reconstruct(const NonProtectedProjection& np, const ProtectedProjection& p,
                     std::string id);

// ---- census -----------------------------------------------------------------

enum class LaneCompliance { AllCompliant, AllViolating, Mixed, NoHumans };
std::string_view to_string(LaneCompliance v);

// Throws moralmt::Error on an unknown lane.
int lane_human_count(const Scenario& s, int lane);
LaneCompliance lane_compliance(const Scenario& s, int lane);
int human_count(const Scenario& s);
int animal_count(const Scenario& s);

// ---- validation ---------------------------------------------------------------

enum class Rule {
  EmptyId,
  InvalidId,
  LaneCountOutOfRange,
  NonPositiveLaneWidth,
  NonPositiveCrossingDistance,
  NonFinite,
  NegativeSpeed,
  NonPositiveBrake,
  NonPositiveLateralSpeed,
  NonPositiveAccel,
  NonPositiveRadius,
  LaneOutOfRange,
  LaneMismatch,
  SlotMismatch,
  HeightOutOfRange,
  ChildTooTall,
  AnimalProfile,
  AnimalCompliance,
  AnimalKindMissing,
  Overlap,
  SignalCount,
};
std::string_view to_string(Rule r);

struct Violation {
  Rule rule;
  std::string field;
  std::string message;
};

std::vector<Violation> validate(const Scenario& s);
bool is_valid(const Scenario& s);
// "rule at field: message; ..." for error messages.
std::string describe(const std::vector<Violation>& v);

}  // namespace moralmt
