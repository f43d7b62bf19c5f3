#include <cmath>
#include <filesystem>

#include "moralmt/campaign.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"
#include "moralmt/trace_io.hpp"

namespace moralmt {

namespace fs = std::filesystem;

namespace {

constexpr double kReplayTol = 1e-12;

Scenario load_referenced(const std::string& base_dir, const std::string& rel) {
  const auto path = fs::path(base_dir) / rel;
  if (!fs::exists(path)) throw Error("replay: scenario file '" + path.string() + "' is missing");
  return dsl::load_scenario_file(path.string());
}

void compare(const MmrVerdict& stored, const MmrVerdict& now, std::vector<std::string>& out) {
  if (stored.relation != now.relation) out.emplace_back("relation differs");
  if (stored.decision != now.decision) {
    out.push_back("decision: stored " + std::string(to_string(stored.decision)) + ", recomputed " +
                  std::string(to_string(now.decision)));
  }
  if (!(std::abs(stored.margin - now.margin) <= kReplayTol)) {
    out.push_back("margin: stored " + std::to_string(stored.margin) + ", recomputed " +
                  std::to_string(now.margin));
  }
  if (stored.scenario_ids != now.scenario_ids) out.emplace_back("scenario ids differ");
  if (stored.runs != now.runs || stored.seed_begin != now.seed_begin) out.emplace_back("seeds differ");
  if (stored.witness_seed != now.witness_seed) out.emplace_back("witness seed differs");
  if (stored.estimates.size() != now.estimates.size()) {
    out.emplace_back("estimate count differs");
    return;
  }
  for (std::size_t i = 0; i < now.estimates.size(); ++i) {
    const auto& a = stored.estimates[i];
    const auto& b = now.estimates[i];
    if (a.event != b.event || a.estimate.hits != b.estimate.hits || a.estimate.n != b.estimate.n ||
        !(std::abs(a.estimate.p_hat - b.estimate.p_hat) <= kReplayTol)) {
      out.push_back("estimate " + b.event + " differs");
    }
  }
  const bool pa = stored.p_value.has_value();
  if (pa != now.p_value.has_value() || (pa && !(std::abs(*stored.p_value - *now.p_value) <= kReplayTol))) {
    out.emplace_back("p_value differs");
  }
}

}  // namespace

ReplayResult replay_record(const IrtcRecord& record, const std::string& base_dir) {
  ReplayResult r;
  r.record = record;
  if (record.framework_version != framework_version()) {
    r.warnings.push_back("record written by version " + record.framework_version + ", running " +
                         framework_version() + "; recomputing");
  }
  if (record.schema_version != kRecordSchemaVersion) {
    r.warnings.push_back("record schema " + std::to_string(record.schema_version) + ", expected " +
                         std::to_string(kRecordSchemaVersion));
  }
  const Scenario source = load_referenced(base_dir, record.source_file);
  std::vector<Scenario> followups;
  for (const auto& f : record.followup_files) followups.push_back(load_referenced(base_dir, f));

  const auto policy = make_policy(policy_config_from_json(record.policy));
  OracleOptions opt{record.params, record.verdict.runs, record.eps_traj, record.alpha, 1};
  const TraceProvider ads = simulator_provider(*policy, record.params);
  const Relation rel = record.verdict.relation;
  if (rel == Relation::MMR1) {
    r.recomputed = check_mmr1(source, followups, ads, opt);
  } else {
    r.recomputed = check_single(rel, followups.empty() ? source : followups.front(), ads, opt);
  }
  compare(record.verdict, r.recomputed, r.mismatches);
  r.matches = r.mismatches.empty();
  return r;
}

std::vector<ReplayResult> replay_file(const std::string& irtc_path) {
  if (!fs::exists(irtc_path)) throw Error("replay: '" + irtc_path + "' does not exist");
  const std::string base = fs::path(irtc_path).parent_path().string();
  std::vector<ReplayResult> out;
  for (const auto& rec : read_jsonl(irtc_path)) {
    out.push_back(replay_record(irtc_from_json(rec), base.empty() ? "." : base));
  }
  return out;
}

}  // namespace moralmt
