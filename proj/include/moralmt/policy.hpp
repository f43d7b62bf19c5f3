#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "moralmt/kinematics.hpp"
#include "moralmt/scenario.hpp"

namespace moralmt {

struct SimParams {
  double dt = 0.01;
  double horizon = 10.0;
  double safety_margin = 1.0;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

// What the planner sees of one detected character.
struct PerceivedCharacter {
  std::size_t slot = 0;
  Species species;
  AttributeProfile profile;
  int lane = 1;
  bool compliance = true;
  CharacterState state;
  CharacterMotion motion;
};

struct PerceivedState {
  double t = 0.0;
  EgoState ego;
  const EgoConfig* limits = nullptr;
  const RoadFrame* frame = nullptr;
  const SimParams* params = nullptr;
  std::vector<PerceivedCharacter> characters;  // detected and not yet hit
};

struct HarmWeights {
  double w_human = 1.0;
  double w_pet = 0.1;
  double compliant_multiplier = 1.25;
  double violator_multiplier = 1.0;
  double child_multiplier = 1.0;
  double adult_multiplier = 1.0;
  double elderly_multiplier = 1.0;

  friend bool operator==(const HarmWeights&, const HarmWeights&) = default;
};

// Per-attribute miss rates. Children are missed with base_miss + child_extra,
// clamped to [0, 1].
struct PerceptionSpec {
  double base_miss = 0.0;
  double child_extra = 0.0;

  double miss_rate(const Character& c) const;
  friend bool operator==(const PerceptionSpec&, const PerceptionSpec&) = default;
};

enum class Aggregation { Sum, Max };
enum class PlannerKind { Utilitarian, Cruise };

struct PolicyConfig {
  std::string name = "baseline";
  PlannerKind planner = PlannerKind::Utilitarian;
  HarmWeights weights;
  PerceptionSpec perception;
  Aggregation aggregation = Aggregation::Sum;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

class AdsPolicy {
 public:
  virtual ~AdsPolicy() = default;
  virtual const std::string& name() const = 0;
  virtual const PerceptionSpec& perception() const = 0;
  virtual Control decide(const PerceivedState& p) const = 0;
  // Stored with IRTCs so replay can rebuild the policy. Empty for policies
  // that have no config form.
  virtual nlohmann::json describe() const { return nullptr; }
};

// Utilitarian planner: tries stay, swerve right and swerve left, each with
// full braking, predicts the hit set with the simulator's own step functions
// and picks the cheapest. Ties go to stay, then the lower lane.
class PlannerPolicy : public AdsPolicy {
 public:
  explicit PlannerPolicy(PolicyConfig cfg);

  const std::string& name() const override { return cfg_.name; }
  const PerceptionSpec& perception() const override { return cfg_.perception; }
  Control decide(const PerceivedState& p) const override;
  nlohmann::json describe() const override;

  const PolicyConfig& config() const { return cfg_; }
  double harm(const PerceivedCharacter& c) const;
  // Predicted cost of a maneuver; nullopt lane means stay.
  double predicted_cost(const PerceivedState& p, std::optional<int> lane) const;

 private:
  PolicyConfig cfg_;
};

// Holds speed and lane. Used for plain kinematic runs.
class CruisePolicy : public AdsPolicy {
 public:
  explicit CruisePolicy(std::string name = "cruise") : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }
  const PerceptionSpec& perception() const override { return perception_; }
  Control decide(const PerceivedState&) const override { return {}; }
  nlohmann::json describe() const override;

 private:
  std::string name_;
  PerceptionSpec perception_;
};

inline constexpr double kChildMissBias = 0.2014;

const std::vector<std::string>& policy_names();
// Throws Error for an unknown name.
PolicyConfig policy_config(std::string_view name);
std::unique_ptr<AdsPolicy> make_policy(const PolicyConfig& cfg);
std::unique_ptr<AdsPolicy> make_policy(std::string_view name);

// `key` is a field name such as "w_pet" or "base_miss". Throws Error on an
// unknown key or a value out of range.
void apply_override(PolicyConfig& cfg, std::string_view key, std::string_view value);
// Names of fields that differ.
std::vector<std::string> config_diff(const PolicyConfig& a, const PolicyConfig& b);

nlohmann::json to_json(const PolicyConfig& cfg);
PolicyConfig policy_config_from_json(const nlohmann::json& j);

// Per-slot detection draws for one run. Drawn once per run from a substream
// of the seed, so runs that share a seed share draws slot by slot.
std::vector<bool> detection_mask(const Scenario& s, const PerceptionSpec& spec, std::uint64_t seed);
double detection_draw(std::uint64_t seed, std::size_t slot);

}  // namespace moralmt
