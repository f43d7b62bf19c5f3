#include "moralmt/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace moralmt {

EgoState initial_ego(const Scenario& s, const RoadFrame&) {
  EgoState e;
  e.speed = s.ego.init_speed;
  e.lane = s.ego.init_lane;
  return e;
}

CharacterState initial_character(const Character& c, const RoadFrame& f) {
  return {f.longitudinal(c.position), f.lateral(c.position), false};
}

CharacterMotion character_motion(const Character& c, const RoadFrame& f) {
  const double rel = c.heading - f.heading;
  return {c.walk_speed * std::cos(rel), c.walk_speed * std::sin(rel), c.body_radius};
}

EgoState step_ego(const EgoState& e, const Control& u, const EgoConfig& limits,
                  const RoadFrame& f, double dt) {
  EgoState n = e;
  const double a = std::clamp(u.accel, -limits.max_brake_decel, limits.max_accel);
  n.speed = std::max(0.0, e.speed + a * dt);
  n.s = e.s + 0.5 * (e.speed + n.speed) * dt;

  if (!n.maneuver_target && u.lane_request && *u.lane_request != e.lane &&
      f.has_lane(*u.lane_request) && e.speed > 0.0) {
    n.maneuver_target = *u.lane_request;
    n.lane = *u.lane_request;
  }
  if (n.maneuver_target) {
    const double target = f.lane_center(*n.maneuver_target);
    const double step = limits.max_lateral_speed * dt;
    if (std::abs(target - n.d) <= step) {
      n.d = target;
      n.maneuver_target.reset();
    } else {
      n.d += target > n.d ? step : -step;
    }
  }
  return n;
}

CharacterState step_character(const CharacterState& c, const CharacterMotion& m, double dt) {
  if (c.hit) return c;
  return {c.s + m.vs * dt, c.d + m.vd * dt, false};
}

double stopping_distance(double speed, double decel) { return speed * speed / (2.0 * decel); }

double lane_change_time(const Scenario& s) { return s.map.lane_width / s.ego.max_lateral_speed; }

}  // namespace moralmt
