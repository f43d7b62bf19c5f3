#include "doctest.h"

#include "generators.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"
#include "moralmt/policy.hpp"
#include "moralmt/simulator.hpp"

using namespace moralmt;
using namespace moralmt::testing;

namespace {

// Ego in lane 1 at 100 km/h; `straight` in lane 1, `left` in lane 2, all at 30 m.
Scenario dilemma(std::vector<Species> straight, std::vector<Species> left) {
  Scenario s;
  s.id = "pol";
  s.map = {"straight_2lane", 2, 3.5, 30.0, 0.0};
  s.ego.init_speed = 27.78;
  s.signals = {SignalState::Green, SignalState::Green};
  auto add = [&s](const Species& sp, int lane, double ahead) {
    Character c;
    c.slot = s.characters.size();
    c.species = sp;
    c.lane = lane;
    c.position = {ahead, (lane - 1) * 3.5};
    if (sp.is_animal()) c.profile = animal_profile();
    s.characters.push_back(c);
  };
  double a = 30.0;
  for (const auto& sp : straight) add(sp, 1, a), a += 1.0;
  a = 30.0;
  for (const auto& sp : left) add(sp, 2, a), a += 1.0;
  return s;
}

int final_lane(const Scenario& s, const std::string& policy, std::uint64_t seed = 0) {
  return run(s, *make_policy(policy), seed).states.back().ego.lane;
}

const Species H = Species::human();
const Species Dog = Species::pet("dog");

}  // namespace

TEST_CASE("baseline argmin examples") {
  CHECK(final_lane(dilemma({H}, {H, H}), "baseline") == 1);
  CHECK(final_lane(dilemma({H}, {Dog}), "baseline") == 2);
  CHECK(final_lane(dilemma({H}, {H}), "baseline") == 1);
  CHECK(final_lane(dilemma({Dog}, {H}), "baseline") == 1);
}

TEST_CASE("empty perception brakes in lane") {
  Scenario s = dilemma({}, {});
  const Trace tr = run(s, *make_policy("baseline"), 0);
  CHECK(tr.states.back().ego.lane == 1);
  CHECK(tr.states.back().ego.speed == 0.0);
}

TEST_CASE("species-neutral ties human and pet and stays") {
  CHECK(final_lane(dilemma({H}, {Dog}), "species-neutral") == 1);
  const Scenario s = dilemma({H}, {Dog});
  CHECK(hit_human(run(s, *make_policy("species-neutral"), 0), s));
}

TEST_CASE("majority-blind ignores counts but still avoids empty lanes") {
  CHECK(final_lane(dilemma({H, H}, {H}), "baseline") == 2);
  CHECK(final_lane(dilemma({H, H}, {H}), "majority-blind") == 1);
  CHECK(final_lane(dilemma({H, H}, {}), "majority-blind") == 2);
}

TEST_CASE("compliance-blind ignores who is crossing against the signal") {
  Scenario s = dilemma({H}, {H});
  s.characters[1].compliance = false;  // violator in lane 2
  CHECK(final_lane(s, "baseline") == 2);
  CHECK(final_lane(s, "compliance-blind") == 1);
}

TEST_CASE("biased perception with two adults behaves as baseline") {
  const Scenario s = dilemma({H}, {H, H});
  const auto base = make_policy("baseline");
  const auto biased = make_policy("biased-perception");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Trace a = run(s, *base, seed);
    const Trace b = run(s, *biased, seed);
    CHECK(a.states == b.states);
    CHECK(a.events == b.events);
  }
}

TEST_CASE("everything missed means brake in lane") {
  PolicyConfig cfg = policy_config("baseline");
  cfg.perception.base_miss = 1.0;
  const auto pol = make_policy(cfg);
  const Scenario s = dilemma({H}, {Dog});
  const Trace tr = run(s, *pol, 3);
  for (bool d : tr.detected) CHECK_FALSE(d);
  CHECK(tr.states.back().ego.lane == 1);
  CHECK(hit_human(tr, s));
}

TEST_CASE("miss rates clamp to the unit interval") {
  Character child;
  child.profile.age_group = AgeGroup::Child;
  child.profile.height = 1.2;
  PerceptionSpec p{0.9, 0.2014};
  CHECK(p.miss_rate(child) == 1.0);
  Character adult;
  CHECK(p.miss_rate(adult) == 0.9);
  Character dog;
  dog.species = Dog;
  dog.profile = animal_profile();
  CHECK(PerceptionSpec{0.0, 0.5}.miss_rate(dog) == 0.0);
}

TEST_CASE("detection draws are uniform and keyed by seed and slot") {
  int below = 0;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    const double u = detection_draw(seed, 0);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    if (u < 0.25) ++below;
  }
  CHECK(below == doctest::Approx(5000).epsilon(0.05));
  CHECK(detection_draw(1, 0) != detection_draw(1, 1));
  CHECK(detection_draw(1, 0) == detection_draw(1, 0));
}

TEST_CASE("scaling all harm weights never changes the choice") {
  Rng rng(41);
  for (int i = 0; i < 40; ++i) {
    const Scenario s = random_dilemma(rng);
    for (const char* name : {"baseline", "species-neutral", "majority-blind", "compliance-blind"}) {
      PolicyConfig cfg = policy_config(name);
      const Trace a = run(s, *make_policy(cfg), 0);
      const double lambda = uniform(rng, 0.01, 100.0);
      auto& w = cfg.weights;
      w.w_human *= lambda;
      w.w_pet *= lambda;
      const Trace b = run(s, *make_policy(cfg), 0);
      CHECK(a.states == b.states);
    }
  }
}

TEST_CASE("each variant differs from baseline in one field") {
  const PolicyConfig base = policy_config("baseline");
  CHECK(config_diff(base, policy_config("biased-perception")) == std::vector<std::string>{"child_extra"});
  CHECK(config_diff(base, policy_config("species-neutral")) == std::vector<std::string>{"w_pet"});
  CHECK(config_diff(base, policy_config("majority-blind")) == std::vector<std::string>{"aggregation"});
  CHECK(config_diff(base, policy_config("compliance-blind")) ==
        std::vector<std::string>{"compliant_multiplier"});
  CHECK(policy_config("biased-perception").perception.child_extra == kChildMissBias);
}

TEST_CASE("baseline weights realise the principles") {
  const HarmWeights w = policy_config("baseline").weights;
  CHECK(w.w_human > w.w_pet);
  CHECK(w.compliant_multiplier > w.violator_multiplier);
  CHECK(w.child_multiplier == w.adult_multiplier);
  CHECK(w.adult_multiplier == w.elderly_multiplier);
}

TEST_CASE("overrides and config json") {
  PolicyConfig c = policy_config("baseline");
  apply_override(c, "w_pet", "0.5");
  CHECK(c.weights.w_pet == 0.5);
  apply_override(c, "aggregation", "max");
  CHECK(c.aggregation == Aggregation::Max);
  CHECK_THROWS_AS(apply_override(c, "w_cat", "1"), Error);
  CHECK_THROWS_AS(apply_override(c, "base_miss", "1.5"), Error);
  CHECK_THROWS_AS(apply_override(c, "w_human", "abc"), Error);
  CHECK(policy_config_from_json(to_json(c)) == c);
  CHECK_THROWS_AS(policy_config("nonsense"), Error);
  for (const auto& n : policy_names()) CHECK(make_policy(n)->name() == n);
}
