#include "moralmt/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "moralmt/error.hpp"

namespace moralmt {

std::set<std::size_t> Trace::hit_slots() const {
  std::set<std::size_t> out;
  for (const auto& e : events) out.insert(e.slot);
  return out;
}

Vec2 Trace::ego_world(std::size_t i) const {
  const auto& e = states.at(i).ego;
  return frame.to_world(e.s, e.d);
}

namespace {

bool finite(const WorldState& w) {
  if (!std::isfinite(w.ego.s) || !std::isfinite(w.ego.d) || !std::isfinite(w.ego.speed)) {
    return false;
  }
  return std::all_of(w.characters.begin(), w.characters.end(), [](const CharacterState& c) {
    return std::isfinite(c.s) && std::isfinite(c.d);
  });
}

void check_params(const SimParams& p) {
  if (!(p.dt > 0.0) || !std::isfinite(p.dt)) throw SimulationError("dt must be positive");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon)) {
    throw SimulationError("horizon must be positive");
  }
  if (p.horizon / p.dt > 1e8) throw SimulationError("horizon / dt exceeds 1e8 steps");
}

void detect_collisions(Trace& tr, WorldState& w, std::size_t step, const Scenario& s) {
  for (std::size_t i = 0; i < w.characters.size(); ++i) {
    auto& c = w.characters[i];
    if (c.hit) continue;
    if (in_contact(w.ego, s.ego.body_radius, c, s.characters[i].body_radius)) {
      c.hit = true;
      tr.events.push_back({w.t, step, i, w.ego.speed});
    }
  }
}

}  // namespace

Trace run(const Scenario& s, const AdsPolicy& policy, std::uint64_t seed, const SimParams& params) {
  if (auto v = validate(s); !v.empty()) {
    throw SimulationError("invalid scenario '" + s.id + "': " + describe(v));
  }
  check_params(params);

  Trace tr;
  tr.scenario_id = s.id;
  tr.seed = seed;
  tr.policy = policy.name();
  tr.params = params;
  tr.frame = RoadFrame::of(s);
  tr.detected = detection_mask(s, policy.perception(), seed);

  std::vector<CharacterMotion> motion;
  WorldState w;
  w.ego = initial_ego(s, tr.frame);
  for (const auto& c : s.characters) {
    w.characters.push_back(initial_character(c, tr.frame));
    motion.push_back(character_motion(c, tr.frame));
  }
  detect_collisions(tr, w, 0, s);

  const auto steps = static_cast<std::size_t>(std::llround(params.horizon / params.dt));
  tr.states.reserve(steps + 1);
  tr.states.push_back(w);

  PerceivedState p;
  p.limits = &s.ego;
  p.frame = &tr.frame;
  p.params = &params;
  for (std::size_t k = 0; k < steps; ++k) {
    p.t = w.t;
    p.ego = w.ego;
    p.characters.clear();
    for (std::size_t i = 0; i < s.characters.size(); ++i) {
      if (!tr.detected[i] || w.characters[i].hit) continue;
      const auto& c = s.characters[i];
      p.characters.push_back(
          {c.slot, c.species, c.profile, c.lane, c.compliance, w.characters[i], motion[i]});
    }
    const Control u = policy.decide(p);

    w.ego = step_ego(w.ego, u, s.ego, tr.frame, params.dt);
    for (std::size_t i = 0; i < w.characters.size(); ++i) {
      w.characters[i] = step_character(w.characters[i], motion[i], params.dt);
    }
    w.t = static_cast<double>(k + 1) * params.dt;
    if (!finite(w)) {
      throw SimulationError("non-finite state at step " + std::to_string(k + 1) + " of '" +
                            s.id + "'");
    }
    detect_collisions(tr, w, k + 1, s);
    tr.states.push_back(w);
  }
  return tr;
}

namespace {

void check_belongs(const Trace& tr, const Scenario& s) {
  if (tr.scenario_id != s.id) {
    throw Error("trace of '" + tr.scenario_id + "' does not belong to scenario '" + s.id + "'");
  }
  for (const auto& e : tr.events) {
    if (e.slot >= s.characters.size()) {
      throw Error("trace event slot " + std::to_string(e.slot) + " not in scenario '" + s.id +
                  "'");
    }
  }
}

}  // namespace

int casualties(const Trace& tr, const Scenario& s) {
  check_belongs(tr, s);
  int n = 0;
  for (const auto& e : tr.events) n += s.characters[e.slot].species.is_human() ? 1 : 0;
  return n;
}

bool hit_human(const Trace& tr, const Scenario& s) { return casualties(tr, s) > 0; }

bool hit_animal(const Trace& tr, const Scenario& s) {
  check_belongs(tr, s);
  return std::any_of(tr.events.begin(), tr.events.end(), [&](const CollisionEvent& e) {
    return s.characters[e.slot].species.is_animal();
  });
}

bool hit_human_in_lane(const Trace& tr, const Scenario& s, int lane) {
  check_belongs(tr, s);
  return std::any_of(tr.events.begin(), tr.events.end(), [&](const CollisionEvent& e) {
    const auto& c = s.characters[e.slot];
    return c.species.is_human() && c.lane == lane;
  });
}

namespace {

// Time to cover x metres under full braking, or the stop time if the ego
// stops first.
double time_to_cover(double v, double a, double x) {
  if (v <= 0.0) return 0.0;
  const double disc = v * v - 2.0 * a * x;
  if (disc <= 0.0) return v / a;
  return (v - std::sqrt(disc)) / a;
}

}  // namespace

std::vector<int> reachable_lanes(const Scenario& s) {
  const double v = s.ego.init_speed;
  const double a = s.ego.max_brake_decel;
  const double stop = stopping_distance(v, a);
  const double window = time_to_cover(v, a, std::min(s.map.crossing_distance, stop));
  const double per_lane = lane_change_time(s);
  std::vector<int> out;
  for (int k = 1; k <= s.map.lane_count; ++k) {
    const int hops = std::abs(k - s.ego.init_lane);
    if (hops == 0 || (v > 0.0 && hops * per_lane <= window)) out.push_back(k);
  }
  return out;
}

bool is_unavoidable(const Scenario& s, const SimParams& params) {
  const double stop = stopping_distance(s.ego.init_speed, s.ego.max_brake_decel);
  if (!(stop > s.map.crossing_distance - params.safety_margin)) return false;
  const RoadFrame f = RoadFrame::of(s);
  for (int lane : reachable_lanes(s)) {
    const bool blocked = std::any_of(s.characters.begin(), s.characters.end(), [&](const Character& c) {
      if (c.lane != lane) return false;
      const double ahead = f.longitudinal(c.position);
      return ahead > 0.0 && ahead <= stop + s.ego.body_radius + c.body_radius;
    });
    if (!blocked) return false;
  }
  return true;
}

}  // namespace moralmt
