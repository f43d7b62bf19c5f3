#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "moralmt/kinematics.hpp"
#include "moralmt/policy.hpp"
#include "moralmt/scenario.hpp"

namespace moralmt {

struct WorldState {
  double t = 0.0;
  EgoState ego;
  std::vector<CharacterState> characters;  // by slot

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct CollisionEvent {
  double t = 0.0;
  std::size_t step = 0;
  std::size_t slot = 0;
  double impact_speed = 0.0;

  friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

struct Trace {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::string policy;
  SimParams params;
  RoadFrame frame;
  std::vector<bool> detected;  // by slot
  std::vector<WorldState> states;
  std::vector<CollisionEvent> events;

  // OutcomeClass: empty means NoCollision.
  std::set<std::size_t> hit_slots() const;
  bool no_collision() const { return events.empty(); }
  Vec2 ego_world(std::size_t i) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Throws SimulationError on an invalid scenario, bad params or a
// non-finite state.
Trace run(const Scenario& s, const AdsPolicy& policy, std::uint64_t seed,
          const SimParams& params = {});

// Humans hit. Throws Error when the trace does not belong to the scenario.
int casualties(const Trace& tr, const Scenario& s);
bool hit_human(const Trace& tr, const Scenario& s);
bool hit_animal(const Trace& tr, const Scenario& s);
bool hit_human_in_lane(const Trace& tr, const Scenario& s, int lane);

// Braking alone cannot stop short of the crossing and every lane the ego
// can reach before it stops holds a character in its path.
bool is_unavoidable(const Scenario& s, const SimParams& params = {});
// Lanes whose centre the ego can reach before its braking stop or the
// crossing, whichever comes first.
std::vector<int> reachable_lanes(const Scenario& s);

}  // namespace moralmt
