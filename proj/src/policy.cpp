#include "moralmt/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "moralmt/error.hpp"

namespace moralmt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace

double detection_draw(std::uint64_t seed, std::size_t slot) {
  return to_unit(splitmix64(splitmix64(seed) ^ splitmix64(0xD1B54A32D192ED03ULL + slot)));
}

double PerceptionSpec::miss_rate(const Character& c) const {
  double m = base_miss;
  if (c.species.is_human() && c.profile.age_group == AgeGroup::Child) m += child_extra;
  return std::clamp(m, 0.0, 1.0);
}

std::vector<bool> detection_mask(const Scenario& s, const PerceptionSpec& spec, std::uint64_t seed) {
  const std::uint64_t stream = s.seed_slot ? seed ^ splitmix64(*s.seed_slot) : seed;
  std::vector<bool> out;
  out.reserve(s.characters.size());
  for (const auto& c : s.characters) {
    out.push_back(!(detection_draw(stream, c.slot) < spec.miss_rate(c)));
  }
  return out;
}

// ---- planner ----------------------------------------------------------------

PlannerPolicy::PlannerPolicy(PolicyConfig cfg) : cfg_(std::move(cfg)) {}

double PlannerPolicy::harm(const PerceivedCharacter& c) const {
  const auto& w = cfg_.weights;
  double base = w.w_pet;
  if (c.species.is_human()) {
    switch (c.profile.age_group) {
      case AgeGroup::Child: base = w.w_human * w.child_multiplier; break;
      case AgeGroup::Adult: base = w.w_human * w.adult_multiplier; break;
      case AgeGroup::Elderly: base = w.w_human * w.elderly_multiplier; break;
    }
  }
  return base * (c.compliance ? w.compliant_multiplier : w.violator_multiplier);
}

double PlannerPolicy::predicted_cost(const PerceivedState& p, std::optional<int> lane) const {
  const double dt = p.params->dt;
  const double r_ego = p.limits->body_radius;
  EgoState e = p.ego;
  std::vector<CharacterState> cs;
  cs.reserve(p.characters.size());
  for (const auto& c : p.characters) cs.push_back(c.state);

  Control u{-p.limits->max_brake_decel, lane};
  double cost = 0.0;
  const auto remaining = std::llround((p.params->horizon - p.t) / dt);
  for (long long k = 0; k < remaining; ++k) {
    e = step_ego(e, u, *p.limits, *p.frame, dt);
    u.lane_request.reset();
    bool live = false;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs[i].hit) continue;
      const auto& pc = p.characters[i];
      cs[i] = step_character(cs[i], pc.motion, dt);
      if (in_contact(e, r_ego, cs[i], pc.motion.radius)) {
        cs[i].hit = true;
        const double h = harm(pc);
        cost = cfg_.aggregation == Aggregation::Sum ? cost + h : std::max(cost, h);
        continue;
      }
      // Still reachable: ahead of the ego, or able to walk into it.
      const bool moving = pc.motion.vs != 0.0 || pc.motion.vd != 0.0;
      const bool behind = cs[i].s + r_ego + pc.motion.radius < e.s && pc.motion.vs <= 1e-9;
      if (!behind && (e.speed > 0.0 || moving)) live = true;
    }
    if (!live) break;
  }
  return cost;
}

Control PlannerPolicy::decide(const PerceivedState& p) const {
  Control brake{-p.limits->max_brake_decel, std::nullopt};
  if (p.ego.maneuver_target || p.ego.speed <= 0.0 || p.characters.empty()) return brake;

  double best = predicted_cost(p, std::nullopt);
  if (best == 0.0) return brake;
  std::optional<int> choice;
  for (int lane : {p.ego.lane - 1, p.ego.lane + 1}) {
    if (!p.frame->has_lane(lane)) continue;
    const double c = predicted_cost(p, lane);
    const double tol = 1e-9 * std::max({1.0, std::abs(c), std::abs(best)});
    if (c < best - tol) {
      best = c;
      choice = lane;
    }
  }
  brake.lane_request = choice;
  return brake;
}

nlohmann::json PlannerPolicy::describe() const { return to_json(cfg_); }

nlohmann::json CruisePolicy::describe() const {
  PolicyConfig c;
  c.name = name_;
  c.planner = PlannerKind::Cruise;
  return to_json(c);
}

// ---- registry -----------------------------------------------------------------

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = {"baseline",       "biased-perception",
                                                 "species-neutral", "majority-blind",
                                                 "compliance-blind", "cruise"};
  return names;
}

PolicyConfig policy_config(std::string_view name) {
  PolicyConfig c;
  c.name = std::string(name);
  if (name == "baseline") return c;
  if (name == "biased-perception") {
    c.perception.child_extra = kChildMissBias;
  } else if (name == "species-neutral") {
    c.weights.w_pet = c.weights.w_human;
  } else if (name == "majority-blind") {
    c.aggregation = Aggregation::Max;
  } else if (name == "compliance-blind") {
    c.weights.compliant_multiplier = c.weights.violator_multiplier;
  } else if (name == "cruise") {
    c.planner = PlannerKind::Cruise;
  } else {
    throw Error("unknown policy '" + std::string(name) + "'");
  }
  return c;
}

std::unique_ptr<AdsPolicy> make_policy(const PolicyConfig& cfg) {
  if (cfg.planner == PlannerKind::Cruise) return std::make_unique<CruisePolicy>(cfg.name);
  return std::make_unique<PlannerPolicy>(cfg);
}

std::unique_ptr<AdsPolicy> make_policy(std::string_view name) {
  return make_policy(policy_config(name));
}

namespace {

double* numeric_field(PolicyConfig& c, std::string_view key) {
  auto& w = c.weights;
  if (key == "w_human") return &w.w_human;
  if (key == "w_pet") return &w.w_pet;
  if (key == "compliant_multiplier") return &w.compliant_multiplier;
  if (key == "violator_multiplier") return &w.violator_multiplier;
  if (key == "child_multiplier") return &w.child_multiplier;
  if (key == "adult_multiplier") return &w.adult_multiplier;
  if (key == "elderly_multiplier") return &w.elderly_multiplier;
  if (key == "base_miss") return &c.perception.base_miss;
  if (key == "child_extra") return &c.perception.child_extra;
  return nullptr;
}

constexpr const char* kNumericKeys[] = {"w_human",          "w_pet",           "compliant_multiplier",
                                        "violator_multiplier", "child_multiplier", "adult_multiplier",
                                        "elderly_multiplier", "base_miss",       "child_extra"};

std::string_view to_string(Aggregation a) { return a == Aggregation::Sum ? "sum" : "max"; }
std::string_view to_string(PlannerKind k) {
  return k == PlannerKind::Utilitarian ? "utilitarian" : "cruise";
}

}  // namespace

void apply_override(PolicyConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "aggregation") {
    if (value == "sum") {
      cfg.aggregation = Aggregation::Sum;
    } else if (value == "max") {
      cfg.aggregation = Aggregation::Max;
    } else {
      throw Error("aggregation must be 'sum' or 'max', got '" + std::string(value) + "'");
    }
    return;
  }
  if (key == "planner") {
    if (value == "utilitarian") {
      cfg.planner = PlannerKind::Utilitarian;
    } else if (value == "cruise") {
      cfg.planner = PlannerKind::Cruise;
    } else {
      throw Error("planner must be 'utilitarian' or 'cruise', got '" + std::string(value) + "'");
    }
    return;
  }
  double* f = numeric_field(cfg, key);
  if (!f) throw Error("unknown policy field '" + std::string(key) + "'");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v) || v < 0.0) {
    throw Error("policy field '" + std::string(key) + "' needs a finite number >= 0, got '" +
                std::string(value) + "'");
  }
  if ((key == "base_miss" || key == "child_extra") && v > 1.0) {
    throw Error("policy field '" + std::string(key) + "' must be <= 1");
  }
  *f = v;
}

std::vector<std::string> config_diff(const PolicyConfig& a, const PolicyConfig& b) {
  std::vector<std::string> out;
  if (a.planner != b.planner) out.emplace_back("planner");
  if (a.aggregation != b.aggregation) out.emplace_back("aggregation");
  PolicyConfig ca = a;
  PolicyConfig cb = b;
  for (const char* k : kNumericKeys) {
    if (*numeric_field(ca, k) != *numeric_field(cb, k)) out.emplace_back(k);
  }
  return out;
}

nlohmann::json to_json(const PolicyConfig& cfg) {
  nlohmann::json j = {{"name", cfg.name},
                      {"planner", to_string(cfg.planner)},
                      {"aggregation", to_string(cfg.aggregation)}};
  PolicyConfig c = cfg;
  for (const char* k : kNumericKeys) j[k] = *numeric_field(c, k);
  return j;
}

PolicyConfig policy_config_from_json(const nlohmann::json& j) {
  try {
    PolicyConfig c;
    c.name = j.at("name").get<std::string>();
    apply_override(c, "planner", j.at("planner").get<std::string>());
    apply_override(c, "aggregation", j.at("aggregation").get<std::string>());
    for (const char* k : kNumericKeys) {
      const double v = j.at(k).get<double>();
      if (!std::isfinite(v) || v < 0.0) throw Error(std::string("bad policy field ") + k);
      *numeric_field(c, k) = v;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("policy config json: ") + e.what());
  }
}

}  // namespace moralmt
