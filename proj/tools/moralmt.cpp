// moralmt command-line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "moralmt/campaign.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"
#include "moralmt/mutation.hpp"
#include "moralmt/oracle.hpp"
#include "moralmt/scenario_json.hpp"
#include "moralmt/simulator.hpp"
#include "moralmt/trace_io.hpp"

namespace fs = std::filesystem;
using namespace moralmt;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kViolations = 2;

struct PolicyArgs {
  std::string name = "baseline";
  std::vector<std::string> sets;

  PolicyConfig config() const {
    PolicyConfig c = policy_config(name);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      apply_override(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }
};

void add_policy_options(CLI::App* cmd, PolicyArgs& p) {
  cmd->add_option("--policy", p.name, "ADS policy")->check(CLI::IsMember(policy_names()));
  cmd->add_option("--set", p.sets, "policy field override, key=value (repeatable)");
}

void add_sim_options(CLI::App* cmd, SimParams& sp) {
  cmd->add_option("--dt", sp.dt, "time step in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", sp.horizon, "simulated seconds")->check(CLI::PositiveNumber);
}

Relation relation_arg(const std::string& s) {
  const auto r = parse_relation(s);
  if (!r) throw Error("unknown relation '" + s + "'");
  return *r;
}

void print_verdict(const MmrVerdict& v) {
  std::cout << to_string(v.relation) << " " << v.subject_id << ": " << to_string(v.decision)
            << " margin=" << v.margin;
  if (v.p_value) std::cout << " p=" << *v.p_value;
  std::cout << '\n';
  for (const auto& e : v.estimates) {
    std::cout << "  " << e.event << " " << e.estimate.hits << "/" << e.estimate.n << " p=" << e.estimate.p_hat
              << " [" << e.estimate.lo << ", " << e.estimate.hi << "]\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moralmt: metamorphic testing of ADS moral decisions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", framework_version());

  // parse
  std::string parse_file;
  bool emit_json = false;
  bool canonical = false;
  auto* parse_cmd = app.add_subcommand("parse", "parse and validate a .mts scenario");
  parse_cmd->add_option("file", parse_file)->required();
  parse_cmd->add_flag("--emit-json", emit_json, "print the scenario model as JSON");
  parse_cmd->add_flag("--canonical", canonical, "print the canonical serialization");

  // simulate
  std::string sim_file, sim_out;
  std::uint64_t sim_seed = 0;
  PolicyArgs sim_policy;
  SimParams sim_params;
  auto* sim_cmd = app.add_subcommand("simulate", "run one seeded simulation");
  sim_cmd->add_option("file", sim_file)->required();
  sim_cmd->add_option("--seed", sim_seed, "run seed");
  sim_cmd->add_option("--out", sim_out, "trace JSONL path (default: stdout)");
  add_policy_options(sim_cmd, sim_policy);
  add_sim_options(sim_cmd, sim_params);

  // mutate
  std::string mut_file, mut_rel = "mmr1", mut_out;
  int mut_budget = 5;
  std::uint64_t mut_seed = 0;
  auto* mut_cmd = app.add_subcommand("mutate", "derive follow-up scenarios");
  mut_cmd->add_option("file", mut_file)->required();
  mut_cmd->add_option("--relation", mut_rel, "mmr1..mmr4");
  mut_cmd->add_option("--budget", mut_budget, "maximum follow-ups")->check(CLI::NonNegativeNumber);
  mut_cmd->add_option("--seed", mut_seed, "derivation seed");
  mut_cmd->add_option("--out", mut_out, "directory for follow-up .mts files");

  // verify
  std::string ver_file, ver_rel = "mmr1", ver_traces;
  std::vector<std::string> ver_followups;
  int ver_runs = 100;
  int ver_budget = 5;
  std::uint64_t ver_seed = 0;
  PolicyArgs ver_policy;
  SimParams ver_params;
  double ver_eps = 0.1, ver_alpha = 0.05;
  auto* ver_cmd = app.add_subcommand("verify", "check one relation on a scenario");
  ver_cmd->add_option("file", ver_file, "source scenario")->required();
  ver_cmd->add_option("--relation", ver_rel, "mmr1..mmr4");
  ver_cmd->add_option("-n,--runs", ver_runs, "seeded runs per estimate")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--followup", ver_followups, "MMR1 follow-up .mts (repeatable; default: derived)");
  ver_cmd->add_option("--budget", ver_budget, "derived MMR1 follow-ups")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--seed", ver_seed, "derivation seed");
  ver_cmd->add_option("--traces", ver_traces,
                      "read traces <dir>/<id>_<seed>.jsonl from an external ADS instead of simulating");
  ver_cmd->add_option("--eps", ver_eps, "trajectory tolerance in metres");
  ver_cmd->add_option("--alpha", ver_alpha, "significance level");
  add_policy_options(ver_cmd, ver_policy);
  add_sim_options(ver_cmd, ver_params);

  // campaign
  auto* camp_cmd = app.add_subcommand("campaign", "run or report test campaigns");
  camp_cmd->require_subcommand(1);
  std::string camp_config, camp_dir;
  bool camp_verify = false;
  bool camp_json = false;
  auto* run_cmd = camp_cmd->add_subcommand("run", "run a campaign from a config file");
  run_cmd->add_option("config", camp_config)->required();
  auto* rep_cmd = camp_cmd->add_subcommand("report", "summarize a campaign output directory");
  rep_cmd->add_option("dir", camp_dir)->required();
  rep_cmd->add_flag("--verify", camp_verify, "recount records and compare with report.json");
  rep_cmd->add_flag("--json", camp_json, "print the JSON report");

  // replay
  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "recompute stored IRTC verdicts");
  replay_cmd->add_option("irtcs", replay_path, "irtcs.jsonl path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*parse_cmd) {
      const Scenario s = dsl::load_scenario_file(parse_file);
      if (auto v = validate(s); !v.empty()) {
        std::cerr << parse_file << ": invalid scenario: " << describe(v) << '\n';
        return kError;
      }
      if (emit_json) {
        std::cout << to_json(s).dump(2) << '\n';
      } else if (canonical) {
        std::cout << dsl::serialize(s);
      } else {
        std::cout << s.id << ": map " << s.map.name << ", " << s.map.lane_count << " lanes, "
                  << s.characters.size() << " characters, ego speed " << s.ego.init_speed << " m/s\n";
      }
      return kOk;
    }

    if (*sim_cmd) {
      const Scenario s = dsl::load_scenario_file(sim_file);
      const auto policy = make_policy(sim_policy.config());
      const Trace tr = run(s, *policy, sim_seed, sim_params);
      if (sim_out.empty()) {
        write_trace(std::cout, tr);
      } else {
        write_trace_file(sim_out, tr);
        std::cout << s.id << " seed " << sim_seed << ": " << tr.states.size() << " states, "
                  << (tr.no_collision() ? "NoCollision" : "Hit") << ", casualties " << casualties(tr, s)
                  << '\n';
      }
      return kOk;
    }

    if (*mut_cmd) {
      const Scenario s = dsl::load_scenario_file(mut_file);
      const auto d = derive_followups(s, relation_arg(mut_rel), mut_budget, mut_seed);
      if (d.followups.empty()) {
        std::cout << "no follow-ups: " << d.reason.value_or("none") << '\n';
        return kOk;
      }
      if (!mut_out.empty()) fs::create_directories(mut_out);
      for (const auto& f : d.followups) {
        nlohmann::json ops = nlohmann::json::array();
        for (const auto& op : f.ops) ops.push_back(to_json(op));
        std::cout << f.scenario.id << " " << ops.dump() << '\n';
        if (!mut_out.empty()) {
          std::ofstream os(fs::path(mut_out) / (f.scenario.id + ".mts"));
          os << dsl::serialize(f.scenario);
          if (!os) throw Error("cannot write follow-up to '" + mut_out + "'");
        }
      }
      return kOk;
    }

    if (*ver_cmd) {
      const Relation rel = relation_arg(ver_rel);
      const Scenario s = dsl::load_scenario_file(ver_file);
      const auto policy = make_policy(ver_policy.config());
      OracleOptions opt{ver_params, ver_runs, ver_eps, ver_alpha, 1};
      const TraceProvider ads =
          ver_traces.empty() ? simulator_provider(*policy, ver_params) : file_provider(ver_traces);
      MmrVerdict v;
      if (rel == Relation::MMR1) {
        std::vector<Scenario> fus;
        for (const auto& f : ver_followups) fus.push_back(dsl::load_scenario_file(f));
        if (fus.empty()) {
          const auto d = derive_followups(s, rel, ver_budget, ver_seed, ver_params);
          if (d.followups.empty()) throw Error("no MMR1 follow-ups: " + d.reason.value_or(""));
          for (const auto& f : d.followups) fus.push_back(f.scenario);
        }
        v = check_mmr1(s, fus, ads, opt);
      } else {
        v = check_single(rel, s, ads, opt);
      }
      print_verdict(v);
      return v.decision == Decision::Violation ? kViolations : kOk;
    }

    if (*run_cmd) {
      const CampaignConfig cfg = load_campaign_config(camp_config);
      const CampaignReport r = run_campaign(cfg);
      std::cout << format_report(r);
      std::cout << "artifacts in " << cfg.output << '\n';
      return r.irtcs > 0 ? kViolations : kOk;
    }

    if (*rep_cmd) {
      if (!fs::is_directory(camp_dir)) throw Error("'" + camp_dir + "' is not a directory");
      const CampaignReport r = report_from_dir(camp_dir);
      if (camp_json) {
        std::cout << to_json(r).dump(2) << '\n';
      } else {
        std::cout << format_report(r);
      }
      if (camp_verify) {
        const auto bad = verify_report(camp_dir);
        for (const auto& m : bad) std::cerr << "mismatch: " << m << '\n';
        if (!bad.empty()) return kError;
        std::cout << "report.json matches persisted records\n";
      }
      return kOk;
    }

    if (*replay_cmd) {
      const auto results = replay_file(replay_path);
      int bad = 0;
      for (const auto& r : results) {
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << to_string(r.record.verdict.relation) << " " << r.record.verdict.subject_id << ": "
                  << (r.matches ? "reproduced" : "MISMATCH") << '\n';
        for (const auto& m : r.mismatches) std::cout << "  " << m << '\n';
        bad += r.matches ? 0 : 1;
      }
      std::cout << results.size() - bad << "/" << results.size() << " verdicts reproduced\n";
      return bad == 0 ? kOk : kError;
    }
  } catch (const std::exception& e) {
    std::cerr << "moralmt: " << e.what() << '\n';
    return kError;
  }
  return kOk;
}
