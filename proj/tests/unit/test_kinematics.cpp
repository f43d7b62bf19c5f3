#include "doctest.h"

#include <cmath>

#include "moralmt/kinematics.hpp"

using namespace moralmt;

namespace {

EgoConfig limits() {
  EgoConfig c;
  c.max_brake_decel = 8.0;
  return c;
}

// Integrates full braking until rest and returns the distance travelled.
double brake_to_rest(double v0, double dt) {
  const EgoConfig lim = limits();
  const RoadFrame f;
  EgoState e;
  e.speed = v0;
  while (e.speed > 0.0) e = step_ego(e, {-8.0, std::nullopt}, lim, f, dt);
  return e.s;
}

// Largest stopping-distance error over initial speeds that sweep one full
// step phase of the coarse step.
double sweep_error(double dt, double coarse_dt) {
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double v0 = 27.78 + 8.0 * coarse_dt * i / 400.0;
    worst = std::max(worst, std::abs(brake_to_rest(v0, dt) - v0 * v0 / 16.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("braking from 100 km/h stops within 48.23 m") {
  CHECK(std::abs(brake_to_rest(27.78, 1e-3) - 48.233025) <= 1e-3);
  CHECK(std::abs(brake_to_rest(27.78, 1e-2) - 48.233025) <= 1e-2);
}

TEST_CASE("constant deceleration matches the closed form before rest") {
  const EgoConfig lim = limits();
  const RoadFrame f;
  EgoState e;
  e.speed = 27.78;
  const double dt = 1e-3;
  for (int k = 1; k <= 3000; ++k) {
    e = step_ego(e, {-8.0, std::nullopt}, lim, f, dt);
    const double t = k * dt;
    REQUIRE(std::abs(e.s - (27.78 * t - 4.0 * t * t)) <= 1e-6);
    REQUIRE(std::abs(e.speed - (27.78 - 8.0 * t)) <= 1e-9);
  }
}

TEST_CASE("halving the step quarters the worst stopping error") {
  const double coarse = sweep_error(1e-2, 1e-2);
  const double fine = sweep_error(5e-3, 1e-2);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine >= 3.5);
  // Worst case of the final partial step is a dt^2 / 8.
  CHECK(coarse == doctest::Approx(8.0 * 1e-4 / 8.0).epsilon(0.02));
}

TEST_CASE("speed never increases under braking and never goes negative") {
  const EgoConfig lim = limits();
  const RoadFrame f;
  EgoState e;
  e.speed = 13.0;
  for (int k = 0; k < 500; ++k) {
    const EgoState n = step_ego(e, {-20.0, std::nullopt}, lim, f, 0.01);
    CHECK(n.speed <= e.speed);
    CHECK(n.speed >= 0.0);
    e = n;
  }
  CHECK(e.speed == 0.0);
}

TEST_CASE("acceleration is clamped to the limits") {
  const EgoConfig lim = limits();
  const RoadFrame f;
  EgoState e;
  e.speed = 10.0;
  CHECK(step_ego(e, {100.0, std::nullopt}, lim, f, 0.1).speed == doctest::Approx(10.3));
  CHECK(step_ego(e, {-100.0, std::nullopt}, lim, f, 0.1).speed == doctest::Approx(9.2));
}

TEST_CASE("lane change moves at lateral speed and is committed") {
  EgoConfig lim = limits();
  lim.max_lateral_speed = 4.0;
  RoadFrame f;
  f.lane_count = 2;
  f.lane_width = 3.5;
  EgoState e;
  e.speed = 20.0;
  e = step_ego(e, {0.0, 2}, lim, f, 0.1);
  CHECK(e.lane == 2);
  CHECK(e.maneuver_target == 2);
  CHECK(e.d == doctest::Approx(0.4));
  // Requests during the maneuver are ignored.
  e = step_ego(e, {0.0, 1}, lim, f, 0.1);
  CHECK(e.maneuver_target == 2);
  CHECK(e.d == doctest::Approx(0.8));
  int steps = 2;
  while (e.maneuver_target) {
    e = step_ego(e, {0.0, std::nullopt}, lim, f, 0.1);
    ++steps;
  }
  CHECK(e.d == 3.5);
  CHECK(steps == 9);  // ceil(3.5 / 0.4)
}

TEST_CASE("lane requests are ignored at rest or for missing lanes") {
  const EgoConfig lim = limits();
  RoadFrame f;
  f.lane_count = 2;
  EgoState e;
  e.speed = 0.0;
  CHECK_FALSE(step_ego(e, {0.0, 2}, lim, f, 0.1).maneuver_target);
  e.speed = 5.0;
  CHECK_FALSE(step_ego(e, {0.0, 3}, lim, f, 0.1).maneuver_target);
  CHECK_FALSE(step_ego(e, {0.0, 1}, lim, f, 0.1).maneuver_target);
}

TEST_CASE("characters walk along their heading and freeze when hit") {
  RoadFrame f;
  Character c;
  c.walk_speed = 1.0;
  c.heading = M_PI / 2;
  const CharacterMotion m = character_motion(c, f);
  CHECK(m.vs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.vd == doctest::Approx(1.0));
  CharacterState s{5.0, 0.0, false};
  s = step_character(s, m, 0.5);
  CHECK(s.d == doctest::Approx(0.5));
  s.hit = true;
  CHECK(step_character(s, m, 0.5) == s);
}

TEST_CASE("closed-form helpers") {
  CHECK(stopping_distance(27.78, 8.0) == doctest::Approx(48.233025));
  CHECK(stopping_distance(10.0, 8.0) == doctest::Approx(6.25));
  Scenario s;
  s.map.lane_width = 3.5;
  s.ego.max_lateral_speed = 4.0;
  CHECK(lane_change_time(s) == doctest::Approx(0.875));
}
