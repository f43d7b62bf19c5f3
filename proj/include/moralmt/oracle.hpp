#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "moralmt/policy.hpp"
#include "moralmt/scenario.hpp"
#include "moralmt/simulator.hpp"
#include "moralmt/stats.hpp"

namespace moralmt {

enum class Relation { MMR1, MMR2, MMR3, MMR4 };
enum class Decision { Pass, Violation, Inconclusive };

std::string_view to_string(Relation r);
std::string_view to_string(Decision d);
// Accepts "mmr1" or "MMR1".
std::optional<Relation> parse_relation(std::string_view s);
std::optional<Decision> parse_decision(std::string_view s);
const std::vector<Relation>& all_relations();

struct EventEstimate {
  std::string event;  // "HUM", "PET", "LANE1-HUM", "CAS>L1", ...
  ProportionEstimate estimate;
};

struct MmrVerdict {
  Relation relation = Relation::MMR1;
  std::vector<std::string> scenario_ids;  // checked scenario(s); MMR1: source first
  std::string subject_id;                 // pool entry the verdict is about
  std::uint64_t seed_begin = 0;           // seeds seed_begin .. seed_begin + runs - 1
  int runs = 0;
  std::vector<EventEstimate> estimates;
  Decision decision = Decision::Inconclusive;
  double margin = 0.0;
  std::optional<double> p_value;
  std::optional<std::uint64_t> witness_seed;  // a seed exhibiting the violation
  std::string witness_id;                     // MMR1: the follow-up that diverged
  std::string policy;
};

nlohmann::json to_json(const MmrVerdict& v);
MmrVerdict verdict_from_json(const nlohmann::json& j);

struct OracleOptions {
  SimParams params;
  int runs = 100;
  double eps_traj = 0.1;
  double alpha = 0.05;
  unsigned threads = 1;
};

// The ADS under test, seen as s -> pi. Must be safe to call concurrently.
using TraceProvider = std::function<Trace(const Scenario&, std::uint64_t seed)>;

TraceProvider simulator_provider(const AdsPolicy& policy, SimParams params);
// Reads "<dir>/<scenario id>_<seed>.jsonl" written by an external ADS.
TraceProvider file_provider(std::string dir);

// Traces for seeds 0 .. runs-1, computed on `threads` workers.
std::vector<Trace> collect_traces(const Scenario& s, const TraceProvider& ads,
                                  const OracleOptions& opt);

// Sup over time of the ego position distance. Throws Error unless both
// traces share params, seed and length.
double sup_ego_distance(const Trace& a, const Trace& b);
bool trace_equivalent(const Trace& a, const Trace& b, double eps);

// ---- structural preconditions; nullopt when satisfied ----------------------

std::optional<std::string> mmr1_precondition(const Scenario& source, const Scenario& followup);
std::optional<std::string> mmr2_precondition(const Scenario& s, const SimParams& params = {});
std::optional<std::string> mmr3_precondition(const Scenario& s, const SimParams& params = {});
std::optional<std::string> mmr4_precondition(const Scenario& s, const SimParams& params = {});
std::optional<std::string> precondition(Relation r, const Scenario& s, const SimParams& params = {});

// ---- verdicts ----------------------------------------------------------------
// Each throws PreconditionBreach when its inputs do not satisfy the
// relation's precondition.

// Violation iff any seed-paired source/follow-up trace pair is not
// equivalent. Margin is the slack eps - max sup distance, capped at -eps when
// outcome sets differ.
MmrVerdict check_mmr1(const Scenario& source, const std::vector<Scenario>& followups,
                      const TraceProvider& ads, const OracleOptions& opt);
MmrVerdict check_mmr1(const Scenario& source, const std::vector<Scenario>& followups,
                      const std::vector<Trace>& source_traces,
                      const std::vector<std::vector<Trace>>& followup_traces,
                      const OracleOptions& opt);

// Events HUM and PET; PET counts any non-human hit. Margin p_PET - p_HUM.
MmrVerdict check_mmr2(const Scenario& s, const std::vector<Trace>& traces, const OracleOptions& opt);
// Violation iff some trace has more casualties than l1. Margin l1 - max Cas.
MmrVerdict check_mmr3(const Scenario& s, const std::vector<Trace>& traces, const OracleOptions& opt);
// Events LANE1-HUM and LANE2-HUM. Margin p1 - p2.
MmrVerdict check_mmr4(const Scenario& s, const std::vector<Trace>& traces, const OracleOptions& opt);
// Dispatch for MMR2..MMR4.
MmrVerdict check_single(Relation r, const Scenario& s, const std::vector<Trace>& traces,
                        const OracleOptions& opt);
MmrVerdict check_single(Relation r, const Scenario& s, const TraceProvider& ads,
                        const OracleOptions& opt);

enum class HitEvent { Human, Animal, HumanInLane };
bool event_holds(const Trace& tr, const Scenario& s, HitEvent e, int lane = 0);
EventEstimate estimate_hit_probability(const Scenario& s, const TraceProvider& ads, HitEvent e,
                                       int runs, int lane = 0);

// ---- IRTC records ------------------------------------------------------------

inline constexpr int kRecordSchemaVersion = 1;

struct LogicalTime {
  int iteration = 0;
  int sequence = 0;
};

struct IrtcRecord {
  MmrVerdict verdict;
  std::string source_id;
  std::string source_file;  // relative to the record file
  std::vector<std::string> followup_ids;
  std::vector<std::string> followup_files;
  std::vector<std::string> trace_files;
  nlohmann::json policy;  // PolicyConfig form
  SimParams params;
  double eps_traj = 0.1;
  double alpha = 0.05;
  std::string framework_version;
  int schema_version = kRecordSchemaVersion;
  LogicalTime timestamp;
};

nlohmann::json to_json(const IrtcRecord& r);
IrtcRecord irtc_from_json(const nlohmann::json& j);

}  // namespace moralmt
