#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moralmt/oracle.hpp"
#include "moralmt/policy.hpp"

namespace moralmt {

struct CampaignConfig {
  std::vector<std::string> pool;  // .mts files or directories of them
  std::vector<Relation> relations = all_relations();
  std::string policy = "baseline";
  std::vector<std::pair<std::string, std::string>> policy_overrides;
  int runs = 100;
  int budget = 8;  // follow-ups per source and relation
  int iterations = 1;
  std::size_t sources_per_iteration = 0;  // 0: the whole active pool
  std::uint64_t seed = 0;
  std::string output = "out";
  SimParams params;
  double eps_traj = 0.1;
  double alpha = 0.05;
  bool grow_pool = true;
  bool stop_on_irtc = false;
  unsigned threads = 1;
};

// Keys: pool (repeatable), relations (comma list), policy, policy.<field>,
// runs, budget, iterations, sources_per_iteration, seed, output, dt,
// horizon, safety_margin, eps_traj, alpha, grow_pool, stop_on_irtc,
// threads. Relative paths resolve against the config file's directory.
// MORALMT_SEED, when set, overrides seed. Throws Error on unknown keys,
// bad values or missing pool files.
CampaignConfig load_campaign_config(const std::string& path);
CampaignConfig campaign_config_from_kv(const std::string& text, const std::string& base_dir);
void check_campaign_config(const CampaignConfig& cfg);
nlohmann::json to_json(const CampaignConfig& cfg);

PolicyConfig campaign_policy(const CampaignConfig& cfg);
std::string framework_version();

struct RelationTotals {
  int verdicts = 0;
  int executions = 0;  // scenario evaluations of `runs` traces each
  int pass = 0;
  int violation = 0;
  int inconclusive = 0;
  int irtcs = 0;
  std::optional<double> min_margin;
};

struct CampaignReport {
  std::string framework_version;
  nlohmann::json config;
  std::map<Relation, RelationTotals> relations;
  int scenarios_executed = 0;
  int traces_executed = 0;
  int followups_executed = 0;
  int followup_runs = 0;
  int irtcs = 0;
  int iterations_run = 0;
  std::vector<nlohmann::json> irtc_summaries;
  double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const CampaignReport& r);

// Runs the sample / derive / execute / verify / update loop and persists
// everything under cfg.output, replacing earlier artifacts there.
CampaignReport run_campaign(const CampaignConfig& cfg);

// Rebuilds the report from persisted records.
CampaignReport report_from_dir(const std::string& dir);
// Human-readable per-relation table.
std::string format_report(const CampaignReport& r);
// Compares recounted records with report.json. Returns the mismatches.
std::vector<std::string> verify_report(const std::string& dir);

struct ReplayResult {
  IrtcRecord record;
  MmrVerdict recomputed;
  bool matches = false;
  std::vector<std::string> mismatches;
  std::vector<std::string> warnings;
};

// Replays every record of an irtcs.jsonl file. Throws Error when a
// referenced scenario file is missing.
std::vector<ReplayResult> replay_file(const std::string& irtc_path);
ReplayResult replay_record(const IrtcRecord& record, const std::string& base_dir);

}  // namespace moralmt
