#pragma once

#include <optional>

#include "moralmt/scenario.hpp"

namespace moralmt {

struct Control {
  double accel = 0.0;               // clamped to [-max_brake_decel, max_accel]
  std::optional<int> lane_request;  // ignored while a maneuver is active or at rest
};

// Ego state in the road frame (see RoadFrame).
struct EgoState {
  double s = 0.0;
  double d = 0.0;
  double speed = 0.0;
  int lane = 1;                       // committed lane: target lane once a change starts
  std::optional<int> maneuver_target;  // set while a lane change is in progress

  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct CharacterState {
  double s = 0.0;
  double d = 0.0;
  bool hit = false;

  friend bool operator==(const CharacterState&, const CharacterState&) = default;
};

// Constant road-frame velocity of a character.
struct CharacterMotion {
  double vs = 0.0;
  double vd = 0.0;
  double radius = 0.3;
};

EgoState initial_ego(const Scenario& s, const RoadFrame& f);
CharacterState initial_character(const Character& c, const RoadFrame& f);
CharacterMotion character_motion(const Character& c, const RoadFrame& f);

// One fixed step. Speed is v' = max(0, v + a dt) and position advances by
// the midpoint rule. A lane change moves d toward the target lane centre at
// max_lateral_speed and cannot be aborted.
EgoState step_ego(const EgoState& e, const Control& u, const EgoConfig& limits,
                  const RoadFrame& f, double dt);

// Hit characters stay where they were struck.
CharacterState step_character(const CharacterState& c, const CharacterMotion& m, double dt);

inline bool in_contact(const EgoState& e, double ego_radius, const CharacterState& c,
                       double char_radius) {
  const double ds = e.s - c.s;
  const double dd = e.d - c.d;
  const double r = ego_radius + char_radius;
  return ds * ds + dd * dd <= r * r;
}

double stopping_distance(double speed, double decel);
double lane_change_time(const Scenario& s);

}  // namespace moralmt
