#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moralmt/campaign.hpp"
#include "moralmt/error.hpp"
#include "moralmt/trace_io.hpp"

namespace moralmt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json totals_json(const RelationTotals& t) {
  return {{"verdicts", t.verdicts},
          {"executions", t.executions},
          {"pass", t.pass},
          {"violation", t.violation},
          {"inconclusive", t.inconclusive},
          {"irtcs", t.irtcs},
          {"min_margin", t.min_margin ? json(*t.min_margin) : json(nullptr)}};
}

}  // namespace

json to_json(const CampaignReport& r) {
  json rel = json::object();
  for (const auto& [k, t] : r.relations) rel[std::string(to_string(k))] = totals_json(t);
  return {{"framework_version", r.framework_version},
          {"config", r.config},
          {"totals",
           {{"scenarios_executed", r.scenarios_executed},
            {"traces_executed", r.traces_executed},
            {"followups_executed", r.followups_executed},
            {"followup_runs", r.followup_runs},
            {"irtcs", r.irtcs},
            {"iterations_run", r.iterations_run}}},
          {"relations", rel},
          {"irtc_summaries", r.irtc_summaries},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

CampaignReport report_from_dir(const std::string& dir) {
  CampaignReport r;
  r.framework_version = framework_version();
  for (auto rel : all_relations()) r.relations[rel] = {};
  try {
    for (const auto& rec : read_jsonl((fs::path(dir) / "verdicts.jsonl").string())) {
      const MmrVerdict v = verdict_from_json(rec.at("verdict"));
      auto& t = r.relations[v.relation];
      ++t.verdicts;
      t.executions += rec.at("scenarios").get<int>();
      switch (v.decision) {
        case Decision::Pass: ++t.pass; break;
        case Decision::Violation: ++t.violation; break;
        case Decision::Inconclusive: ++t.inconclusive; break;
      }
      if (!t.min_margin || v.margin < *t.min_margin) t.min_margin = v.margin;
      r.scenarios_executed += rec.at("scenarios").get<int>();
      r.traces_executed += rec.at("runs").get<int>();
      r.followups_executed += rec.at("followups").get<int>();
      r.followup_runs += rec.at("followup_runs").get<int>();
    }
    for (const auto& rec : read_jsonl((fs::path(dir) / "irtcs.jsonl").string())) {
      const IrtcRecord i = irtc_from_json(rec);
      ++r.relations[i.verdict.relation].irtcs;
      ++r.irtcs;
      r.irtc_summaries.push_back({{"relation", to_string(i.verdict.relation)},
                                  {"source_id", i.source_id},
                                  {"followup_ids", i.followup_ids},
                                  {"decision", to_string(i.verdict.decision)},
                                  {"margin", i.verdict.margin},
                                  {"timestamp",
                                   {{"iteration", i.timestamp.iteration},
                                    {"sequence", i.timestamp.sequence}}}});
    }
  } catch (const json::exception& e) {
    throw Error(dir + ": malformed record: " + e.what());
  }
  const auto report = fs::path(dir) / "report.json";
  if (fs::exists(report)) {
    std::ifstream is(report);
    try {
      const json j = json::parse(is);
      if (j.contains("config")) r.config = j.at("config");
      if (j.contains("totals")) r.iterations_run = j.at("totals").value("iterations_run", 0);
    } catch (const json::exception&) {
      // Unreadable report.json: the recount stands on its own.
    }
  }
  return r;
}

std::string format_report(const CampaignReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-9s %9s %11s %6s %10s %13s %6s %11s\n", "relation", "verdicts",
                "executions", "pass", "violation", "inconclusive", "irtcs", "min_margin");
  os << buf;
  for (const auto& [rel, t] : r.relations) {
    const std::string margin = t.min_margin ? std::to_string(*t.min_margin) : "-";
    std::snprintf(buf, sizeof buf, "%-9s %9d %11d %6d %10d %13d %6d %11s\n",
                  std::string(to_string(rel)).c_str(), t.verdicts, t.executions, t.pass, t.violation,
                  t.inconclusive, t.irtcs, margin.c_str());
    os << buf;
  }
  os << "scenarios executed: " << r.scenarios_executed << " (" << r.traces_executed
     << " traces), follow-ups: " << r.followups_executed << ", IRTCs: " << r.irtcs << '\n';
  return os.str();
}

std::vector<std::string> verify_report(const std::string& dir) {
  std::vector<std::string> out;
  const auto path = fs::path(dir) / "report.json";
  if (!fs::exists(path)) return {"report.json missing"};
  json stored;
  try {
    std::ifstream is(path);
    stored = json::parse(is);
  } catch (const json::exception& e) {
    return {std::string("report.json unreadable: ") + e.what()};
  }
  const json fresh = to_json(report_from_dir(dir));
  for (const char* k : {"scenarios_executed", "traces_executed", "followups_executed", "followup_runs",
                        "irtcs"}) {
    const auto a = stored.value("totals", json::object()).value(k, json(nullptr));
    const auto b = fresh.at("totals").at(k);
    if (a != b) out.push_back(std::string("totals.") + k + ": report.json has " + a.dump() +
                              ", records give " + b.dump());
  }
  const auto stored_rel = stored.value("relations", json::object());
  for (const auto& [name, t] : fresh.at("relations").items()) {
    if (!stored_rel.contains(name)) {
      out.push_back("relations." + name + " missing from report.json");
      continue;
    }
    for (const auto& [k, v] : t.items()) {
      const auto a = stored_rel.at(name).value(k, json(nullptr));
      if (a != v) {
        out.push_back("relations." + name + "." + k + ": report.json has " + a.dump() +
                      ", records give " + v.dump());
      }
    }
  }
  return out;
}

}  // namespace moralmt
