#include "doctest.h"

#include <cmath>

#include "generators.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"
#include "moralmt/simulator.hpp"

using namespace moralmt;
using namespace moralmt::testing;

namespace {

Scenario road(double speed) {
  Scenario s;
  s.id = "road";
  s.map = {"straight_2lane", 2, 3.5, 30.0, 0.0};
  s.ego.init_speed = speed;
  s.signals = {SignalState::Green, SignalState::Green};
  return s;
}

Character person(std::size_t slot, int lane, double ahead, double d) {
  Character c;
  c.slot = slot;
  c.lane = lane;
  c.position = {ahead, d};
  return c;
}

Scenario corpus(const char* name) {
  return dsl::load_scenario_file(std::string(MORALMT_CORPUS_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("empty road under baseline brakes to rest in 48.23 m") {
  const auto pol = make_policy("baseline");
  const Trace tr = run(road(27.78), *pol, 0);
  CHECK(tr.no_collision());
  CHECK(std::abs(tr.states.back().ego.s - 48.233025) <= 0.01);
  CHECK(tr.states.back().ego.speed == 0.0);
  CHECK(tr.states.size() == 1001);
  CHECK(tr.states[500].t == doctest::Approx(5.0));
}

TEST_CASE("ego at rest stays at rest") {
  CruisePolicy cruise;
  const Trace tr = run(road(0.0), cruise, 0);
  CHECK(tr.no_collision());
  for (const auto& st : tr.states) {
    CHECK(st.ego == tr.states.front().ego);
  }
}

TEST_CASE("cruising into a static character 10 m ahead at 20 m/s") {
  Scenario s = road(20.0);
  s.characters.push_back(person(0, 1, 10.0, 0.0));
  CruisePolicy cruise;
  const Trace tr = run(s, cruise, 0);
  REQUIRE(tr.events.size() == 1);
  // Contact begins once the gap closes to the radius sum 2.3 m.
  const double expected = (10.0 - 2.3) / 20.0;
  CHECK(tr.events[0].t >= expected - 1e-9);
  CHECK(tr.events[0].t <= expected + tr.params.dt);
  CHECK(tr.events[0].impact_speed == 20.0);
  CHECK(tr.hit_slots() == std::set<std::size_t>{0});
}

TEST_CASE("run is deterministic per seed") {
  Rng rng(17);
  for (const auto& name : policy_names()) {
    const auto pol = make_policy(name);
    for (int i = 0; i < 10; ++i) {
      const Scenario s = random_dilemma(rng);
      CHECK(run(s, *pol, 42) == run(s, *pol, 42));
    }
  }
}

TEST_CASE("trace invariants over random scenarios") {
  Rng rng(23);
  const auto pol = make_policy("baseline");
  for (int i = 0; i < 60; ++i) {
    const Scenario s = i % 2 ? random_scenario(rng) : random_dilemma(rng);
    SimParams p;
    p.horizon = 4.0;
    const Trace tr = run(s, *pol, static_cast<std::uint64_t>(i), p);
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      REQUIRE(tr.states[k].t >= tr.states[k - 1].t);
      for (std::size_t c = 0; c < s.characters.size(); ++c) {
        if (tr.states[k - 1].characters[c].hit) REQUIRE(tr.states[k].characters[c].hit);
      }
    }
    std::set<std::size_t> slots;
    for (std::size_t e = 0; e < tr.events.size(); ++e) {
      const auto& ev = tr.events[e];
      if (e > 0) CHECK(ev.t >= tr.events[e - 1].t);
      CHECK(slots.insert(ev.slot).second);
      const auto& st = tr.states[ev.step];
      CHECK(st.t == ev.t);
      for (std::size_t k = ev.step; k < tr.states.size(); ++k) REQUIRE(tr.states[k].characters[ev.slot].hit);
      const auto& cs = st.characters[ev.slot];
      const double dist = std::hypot(st.ego.s - cs.s, st.ego.d - cs.d);
      CHECK(dist <= s.ego.body_radius + s.characters[ev.slot].body_radius + 1e-9);
      CHECK(ev.impact_speed == st.ego.speed);
    }
    CHECK(slots == tr.hit_slots());
  }
}

TEST_CASE("braking-only ego speed is nonincreasing") {
  Rng rng(29);
  const auto pol = make_policy("baseline");
  for (int i = 0; i < 30; ++i) {
    const Trace tr = run(random_dilemma(rng), *pol, 0);
    for (std::size_t k = 1; k < tr.states.size(); ++k) REQUIRE(tr.states[k].ego.speed <= tr.states[k - 1].ego.speed);
  }
}

TEST_CASE("invalid scenario or params are hard errors") {
  const auto pol = make_policy("baseline");
  Scenario s = road(10.0);
  s.ego.init_speed = -1.0;
  CHECK_THROWS_AS(run(s, *pol, 0), SimulationError);
  SimParams p;
  p.dt = 0.0;
  CHECK_THROWS_AS(run(road(10.0), *pol, 0, p), SimulationError);
  p = {};
  p.horizon = -1.0;
  CHECK_THROWS_AS(run(road(10.0), *pol, 0, p), SimulationError);
}

TEST_CASE("casualty counts") {
  CruisePolicy cruise;
  Scenario s = road(20.0);
  CHECK(casualties(run(s, cruise, 0), s) == 0);

  s.characters.push_back(person(0, 1, 15.0, 0.3));
  Character dog = person(1, 1, 20.0, -0.3);
  dog.species = Species::pet("dog");
  dog.profile = animal_profile();
  s.characters.push_back(dog);
  Trace tr = run(s, cruise, 0);
  CHECK(tr.hit_slots().size() == 2);
  CHECK(casualties(tr, s) == 1);
  CHECK(hit_human(tr, s));
  CHECK(hit_animal(tr, s));

  s.characters[1] = person(1, 1, 20.0, -0.3);
  tr = run(s, cruise, 0);
  CHECK(casualties(tr, s) == 2);
  CHECK(hit_human_in_lane(tr, s, 1));
  CHECK_FALSE(hit_human_in_lane(tr, s, 2));

  Scenario other = s;
  other.characters.pop_back();
  CHECK_THROWS_AS(casualties(tr, other), Error);
}

TEST_CASE("unavoidability") {
  Scenario s = corpus("woman_girl_crossing.mts");
  CHECK(is_unavoidable(s));
  Scenario slow = s;
  slow.ego.init_speed = 10.0;
  CHECK_FALSE(is_unavoidable(slow));
  Scenario open = s;
  open.characters.pop_back();
  CHECK_FALSE(is_unavoidable(open));
  CHECK(reachable_lanes(s) == std::vector<int>{1, 2});
}

TEST_CASE("baseline spares the human for the boar") {
  const Scenario s = corpus("human_boar_crossing.mts");
  const auto base = make_policy("baseline");
  const Trace tr = run(s, *base, 0);
  CHECK_FALSE(hit_human(tr, s));
  CHECK(hit_animal(tr, s));
  const auto neutral = make_policy("species-neutral");
  const Trace tn = run(s, *neutral, 0);
  CHECK(hit_human(tn, s));
  CHECK_FALSE(hit_animal(tn, s));
}
