#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moralmt/campaign.hpp"
#include "moralmt/error.hpp"
#include "moralmt/trace_io.hpp"

using namespace moralmt;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path tmp(const std::string& name) {
  const fs::path p = fs::path(MORALMT_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CampaignConfig small_config(const std::string& policy, const fs::path& out) {
  std::ostringstream kv;
  kv << "pool = human_boar_crossing.mts\n"
     << "pool = woman_girl_crossing.mts\n"
     << "pool = jaywalker_lane1_ego_lane2.mts\n"
     << "policy = " << policy << "\n"
     << "runs = 20\nbudget = 3\niterations = 2\nsources_per_iteration = 2\nseed = 5\n"
     << "output = " << out.string() << "\n";
  return campaign_config_from_kv(kv.str(), MORALMT_CORPUS_DIR);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = campaign_config_from_kv(
      "pool = human_boar_crossing.mts\nrelations = mmr2, MMR4\npolicy = baseline\npolicy.w_pet = 0.2\n"
      "runs = 30\nseed = 9\ndt = 0.02\noutput = o\n",
      MORALMT_CORPUS_DIR);
  CHECK(cfg.relations == std::vector<Relation>{Relation::MMR2, Relation::MMR4});
  CHECK(cfg.runs == 30);
  CHECK(cfg.seed == 9u);
  CHECK(cfg.params.dt == 0.02);
  CHECK(campaign_policy(cfg).weights.w_pet == 0.2);
  CHECK(fs::path(cfg.output) == fs::path(MORALMT_CORPUS_DIR) / "o");
  CHECK(fs::path(cfg.pool.at(0)).is_absolute());

  CHECK_THROWS_AS(campaign_config_from_kv("pool = human_boar_crossing.mts\nbogus = 1\n", MORALMT_CORPUS_DIR), Error);
  CHECK_THROWS_AS(check_campaign_config(campaign_config_from_kv("pool = nothing_here.mts\n", MORALMT_CORPUS_DIR)),
                  Error);
  CHECK_THROWS_AS(check_campaign_config(
                      campaign_config_from_kv("pool = human_boar_crossing.mts\nruns = 0\n", MORALMT_CORPUS_DIR)),
                  Error);
}

TEST_CASE("seed override from the environment") {
  const fs::path dir = tmp("seedenv");
  {
    std::ofstream out(dir / "c.cfg");
    out << "pool = " << MORALMT_CORPUS_DIR << "/human_boar_crossing.mts\nseed = 3\n";
  }
  ::setenv("MORALMT_SEED", "1234", 1);
  const auto cfg = load_campaign_config((dir / "c.cfg").string());
  ::unsetenv("MORALMT_SEED");
  CHECK(cfg.seed == 1234u);
  CHECK(load_campaign_config((dir / "c.cfg").string()).seed == 3u);
}

TEST_CASE("campaign artifacts, determinism, report and replay") {
  const fs::path a = tmp("camp_a");
  const fs::path b = tmp("camp_b");
  const CampaignReport ra = run_campaign(small_config("species-neutral", a));
  const CampaignReport rb = run_campaign(small_config("species-neutral", b));
  CHECK(ra.irtcs > 0);
  CHECK(ra.relations.at(Relation::MMR2).violation > 0);
  for (const char* f : {"irtcs.jsonl", "verdicts.jsonl", "mutations.jsonl"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "report.json"));
  CHECK(fs::is_directory(a / "traces"));
  CHECK(fs::is_directory(a / "scenarios"));

  CHECK(verify_report(a.string()).empty());
  const CampaignReport again = report_from_dir(a.string());
  CHECK(again.irtcs == ra.irtcs);
  CHECK(again.scenarios_executed == ra.scenarios_executed);
  CHECK(again.relations.at(Relation::MMR2).violation == ra.relations.at(Relation::MMR2).violation);
  CHECK(format_report(again).find("MMR2") != std::string::npos);

  const auto results = replay_file((a / "irtcs.jsonl").string());
  CHECK(static_cast<int>(results.size()) == ra.irtcs);
  for (const auto& r : results) {
    CHECK(r.matches);
    CHECK(r.mismatches.empty());
    CHECK(r.warnings.empty());
  }
}

TEST_CASE("baseline campaign finds nothing") {
  const fs::path out = tmp("camp_base");
  const CampaignReport r = run_campaign(small_config("baseline", out));
  CHECK(r.irtcs == 0);
  CHECK(r.scenarios_executed > 0);
  CHECK(read_jsonl((out / "irtcs.jsonl").string()).empty());
  CHECK(verify_report(out.string()).empty());
}

TEST_CASE("tampering and version drift are caught on replay") {
  const fs::path out = tmp("camp_tamper");
  run_campaign(small_config("species-neutral", out));
  auto recs = read_jsonl((out / "irtcs.jsonl").string());
  REQUIRE_FALSE(recs.empty());
  IrtcRecord rec = irtc_from_json(recs.front());

  IrtcRecord tampered = rec;
  tampered.verdict.margin += 0.25;
  const auto t = replay_record(tampered, out.string());
  CHECK_FALSE(t.matches);
  REQUIRE_FALSE(t.mismatches.empty());
  CHECK(t.mismatches.front().find("margin") != std::string::npos);

  IrtcRecord old = rec;
  old.framework_version = "0.0.0";
  const auto o = replay_record(old, out.string());
  CHECK(o.matches);
  CHECK(o.warnings.size() == 1);

  IrtcRecord missing = rec;
  missing.source_file = "scenarios/none.mts";
  CHECK_THROWS_AS(replay_record(missing, out.string()), Error);

  // Report verification notices edited totals.
  auto report = nlohmann::json::parse(slurp(out / "report.json"));
  report["totals"]["irtcs"] = report["totals"]["irtcs"].get<int>() + 1;
  std::ofstream(out / "report.json") << report.dump();
  CHECK_FALSE(verify_report(out.string()).empty());
}

TEST_CASE("empty directory gives an all-zero report") {
  const fs::path out = tmp("empty");
  const CampaignReport r = report_from_dir(out.string());
  CHECK(r.irtcs == 0);
  CHECK(r.scenarios_executed == 0);
  for (const auto& [rel, tot] : r.relations) {
    CHECK(tot.verdicts == 0);
    CHECK(tot.violation == 0);
  }
}
