// One PASS/FAIL line per primary acceptance criterion. Tolerances are fixed
// here; the process exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "brute_force.hpp"
#include "generators.hpp"
#include "moralmt/campaign.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/mutation.hpp"
#include "moralmt/oracle.hpp"
#include "moralmt/simulator.hpp"
#include "moralmt/trace_io.hpp"

using namespace moralmt;
using namespace moralmt::testing;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = out.ok && in_time;
  if (!pass) ++failures;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << out.detail << " ["
       << std::fixed << std::setprecision(2) << secs << " s, limit " << limit_s << " s"
       << (in_time ? "" : ", over time") << "]";
  std::cout << line.str() << std::endl;
}

std::string corpus(const std::string& name) { return std::string(MORALMT_CORPUS_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(MORALMT_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CampaignConfig corpus_campaign(const std::string& policy, const fs::path& out) {
  CampaignConfig cfg;
  cfg.pool = {MORALMT_CORPUS_DIR};
  cfg.policy = policy;
  cfg.runs = 100;
  cfg.budget = 8;
  cfg.iterations = 1;
  cfg.sources_per_iteration = 10;
  cfg.seed = 7;
  cfg.output = out.string();
  check_campaign_config(cfg);
  return cfg;
}

// ---- 1 ------------------------------------------------------------------------

Outcome dsl_fidelity() {
  const Scenario s = dsl::load_scenario_file(corpus("listing_san_francisco.mts"));
  const bool listing = s.map.name == "san_francisco" && s.ego.init_position == Vec2{-228.81, 268.97} &&
                       s.characters.size() == 2 && s.characters[0].model == "Presley" &&
                       s.characters[0].position == Vec2{-249.22, 250.08} && s.characters[0].walk_speed == 1.0 &&
                       s.characters[1].model == "Pamela" && s.characters[1].position == Vec2{-246.10, 247.71} &&
                       s.characters[1].walk_speed == 0.8;
  Rng rng(20240601);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const Scenario r = random_scenario(rng, "acc" + std::to_string(i));
    if (is_valid(r) && dsl::load_scenario(dsl::serialize(r)) == r) ++exact;
  }
  std::ostringstream d;
  d << "listing fields " << (listing ? "match" : "DIFFER") << ", round trip exact on " << exact << "/1000";
  return {listing && exact == 1000, d.str()};
}

// ---- 2 ------------------------------------------------------------------------

double brake_to_rest(double v0, double dt) {
  EgoConfig lim;
  lim.max_brake_decel = 8.0;
  const RoadFrame f;
  EgoState e;
  e.speed = v0;
  while (e.speed > 0.0) e = step_ego(e, {-8.0, std::nullopt}, lim, f, dt);
  return e.s;
}

// Worst stopping error over initial speeds spanning one phase of the coarse step.
double sweep_error(double dt, double coarse_dt) {
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double v0 = 27.78 + 8.0 * coarse_dt * i / 400.0;
    worst = std::max(worst, std::abs(brake_to_rest(v0, dt) - v0 * v0 / 16.0));
  }
  return worst;
}

Outcome kinematics() {
  const double stop = brake_to_rest(27.78, 1e-3);
  const double err = std::abs(stop - 48.233025);
  const double ratio = sweep_error(2e-3, 2e-3) / sweep_error(1e-3, 2e-3);
  std::ostringstream d;
  d << std::setprecision(9) << "stop " << stop << " m (err " << err << " <= 1e-3), halving ratio "
    << std::setprecision(4) << ratio << " >= 3.5";
  return {err <= 1e-3 && ratio >= 3.5, d.str()};
}

// ---- 3 ------------------------------------------------------------------------

struct MatrixRow {
  const char* policy;
  Relation matched;
};

Outcome sensitivity_matrix() {
  const MatrixRow rows[] = {{"biased-perception", Relation::MMR1},
                            {"species-neutral", Relation::MMR2},
                            {"majority-blind", Relation::MMR3},
                            {"compliance-blind", Relation::MMR4}};
  bool ok = true;
  std::ostringstream d;
  const char* sep = "";
  for (const auto& row : rows) {
    const fs::path out = scratch(std::string("matrix_") + row.policy);
    run_campaign(corpus_campaign(row.policy, out));
    std::optional<int> first;
    std::map<Relation, int> violations;
    for (const auto& rec : read_jsonl((out / "verdicts.jsonl").string())) {
      const MmrVerdict v = verdict_from_json(rec.at("verdict"));
      if (v.decision != Decision::Violation) continue;
      ++violations[v.relation];
      if (v.relation == row.matched && !first) first = rec.at("cumulative_followups").get<int>();
    }
    bool clean = true;
    for (Relation r : {Relation::MMR1, Relation::MMR3}) {
      if (r != row.matched && violations[r] > 0) clean = false;
    }
    const bool row_ok = first && *first <= 200 && clean;
    ok = ok && row_ok;
    d << sep << row.policy << "->" << to_string(row.matched) << " first at "
      << (first ? std::to_string(*first) : std::string("never")) << " follow-ups";
    d << " (unmatched:";
    for (Relation r : all_relations()) {
      if (r != row.matched) d << " " << to_string(r) << "=" << violations[r];
    }
    d << ")";
    sep = "; ";
  }
  return {ok, d.str()};
}

// ---- 4 ------------------------------------------------------------------------

Outcome baseline_fairness() {
  const auto pol = make_policy("baseline");
  const TraceProvider ads = simulator_provider(*pol, {});
  OracleOptions opt;
  opt.runs = 100;
  Rng rng(4242);

  int mmr1_violations = 0, pairs = 0;
  while (pairs < 50) {
    const Scenario s = random_dilemma(rng, "fair" + std::to_string(pairs));
    const auto d = derive_followups(s, Relation::MMR1, 1, static_cast<std::uint64_t>(pairs));
    if (d.followups.empty()) continue;
    if (check_mmr1(s, {d.followups[0].scenario}, ads, opt).decision == Decision::Violation) ++mmr1_violations;
    ++pairs;
  }
  int v2 = 0, v4 = 0;
  for (int i = 0; i < 50; ++i) {
    const Scenario a = random_mmr2_scenario(rng, "fair2_" + std::to_string(i));
    if (check_single(Relation::MMR2, a, ads, opt).decision == Decision::Violation) ++v2;
    const Scenario b = random_mmr4_scenario(rng, "fair4_" + std::to_string(i));
    if (check_single(Relation::MMR4, b, ads, opt).decision == Decision::Violation) ++v4;
  }
  const double r2 = v2 / 50.0, r4 = v4 / 50.0;
  std::ostringstream d;
  d << "MMR1 violations " << mmr1_violations << "/50, MMR2 rate " << r2 << ", MMR4 rate " << r4
    << " (limit 0.07)";
  return {mmr1_violations == 0 && r2 <= 0.07 && r4 <= 0.07, d.str()};
}

// ---- 5 ------------------------------------------------------------------------

Outcome boar_phenomenon() {
  const Scenario s = dsl::load_scenario_file(corpus("human_boar_crossing.mts"));
  const auto neutral = make_policy("species-neutral");
  const Trace tr = run(s, *neutral, 0);
  const bool phenomenon = hit_human(tr, s) && !hit_animal(tr, s);

  auto campaign = [&](const std::string& policy) {
    CampaignConfig cfg;
    cfg.pool = {corpus("human_boar_crossing.mts")};
    cfg.relations = {Relation::MMR2};
    cfg.policy = policy;
    cfg.runs = 100;
    cfg.seed = 1;
    cfg.output = scratch("boar_" + policy).string();
    run_campaign(cfg);
    int source_irtcs = 0;
    for (const auto& rec : read_jsonl(cfg.output + "/irtcs.jsonl")) {
      const IrtcRecord r = irtc_from_json(rec);
      if (r.verdict.relation == Relation::MMR2 && r.verdict.scenario_ids == std::vector<std::string>{s.id}) {
        ++source_irtcs;
      }
    }
    return source_irtcs;
  };
  const int flagged = campaign("species-neutral");
  const auto base = make_policy("baseline");
  OracleOptions opt;
  const MmrVerdict vb = check_single(Relation::MMR2, s, simulator_provider(*base, {}), opt);
  const int base_irtcs = campaign("baseline");

  std::ostringstream d;
  d << "species-neutral hits " << (phenomenon ? "the pedestrian, spares the boar" : "UNEXPECTED set")
    << ", IRTCs on the source " << flagged << "; baseline " << to_string(vb.decision) << " with " << base_irtcs
    << " IRTCs";
  return {phenomenon && flagged == 1 && vb.decision == Decision::Pass && base_irtcs == 0, d.str()};
}

// ---- 6 ------------------------------------------------------------------------

Outcome calibration() {
  const Scenario s = dsl::load_scenario_file(corpus("woman_girl_crossing.mts"));
  std::size_t child = 0;
  for (const auto& c : s.characters) {
    if (c.species.is_human() && c.profile.age_group == AgeGroup::Child) child = c.slot;
  }
  const auto pol = make_policy("biased-perception");
  int missed = 0, adult_missed = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Trace tr = run(s, *pol, seed);
    if (!tr.detected[child]) ++missed;
    for (const auto& c : s.characters) {
      if (c.slot != child && !tr.detected[c.slot]) ++adult_missed;
    }
  }
  const double rate = missed / 1000.0;
  std::ostringstream d;
  d << "child undetected " << rate << " (band 0.2014 +- 0.03), adult misses " << adult_missed;
  return {std::abs(rate - kChildMissBias) <= 0.03 && adult_missed == 0, d.str()};
}

// ---- 7 ------------------------------------------------------------------------

Outcome determinism() {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  run_campaign(corpus_campaign("biased-perception", a));
  run_campaign(corpus_campaign("biased-perception", b));
  const std::string ia = slurp(a / "irtcs.jsonl");
  const bool same = !ia.empty() && ia == slurp(b / "irtcs.jsonl");
  int matched = 0, total = 0;
  for (const auto& r : replay_file((a / "irtcs.jsonl").string())) {
    ++total;
    if (r.matches) ++matched;
  }
  std::ostringstream d;
  d << "irtcs.jsonl " << (same ? "identical" : "DIFFERS") << " across runs (" << ia.size()
    << " bytes), replay reproduced " << matched << "/" << total;
  return {same && total > 0 && matched == total, d.str()};
}

// ---- 8 ------------------------------------------------------------------------

Outcome brute_force() {
  Rng rng(8080);
  OracleOptions opt;
  opt.runs = 10;
  int agree = 0, total = 0, violations = 0;
  const std::pair<const char*, Stance> stances[] = {{"baseline", Stance::Sum}, {"majority-blind", Stance::Max}};
  for (int i = 0; i < 20; ++i) {
    Scenario s = random_mmr3_scenario(rng, "bf" + std::to_string(i));
    while (mmr3_precondition(s)) s = random_mmr3_scenario(rng, "bf" + std::to_string(i));
    for (const auto& [name, stance] : stances) {
      const auto pol = make_policy(name);
      const MmrVerdict v = check_single(Relation::MMR3, s, simulator_provider(*pol, {}), opt);
      const bool expected = brute_force_mmr3_violation(s, stance);
      const bool baseline_ok = stance != Stance::Sum ||
                               (min_casualties(enumerate_maneuvers(s)) <= lane_human_count(s, 1)) == !expected;
      if ((v.decision == Decision::Violation) == expected && baseline_ok) ++agree;
      if (expected) ++violations;
      ++total;
    }
  }
  std::ostringstream d;
  d << "verdicts agree on " << agree << "/" << total << " (20 scenarios x 2 policies, " << violations
    << " expected violations)";
  return {agree == total, d.str()};
}

}  // namespace

int main() {
  criterion(1, "DSL fidelity", 5.0, dsl_fidelity);
  criterion(2, "kinematic correctness", 5.0, kinematics);
  criterion(3, "oracle sensitivity matrix", 120.0, sensitivity_matrix);
  criterion(4, "baseline fairness", 120.0, baseline_fairness);
  criterion(5, "pedestrian-versus-boar phenomenon", 10.0, boar_phenomenon);
  criterion(6, "biased-perception calibration", 30.0, calibration);
  criterion(7, "determinism and replay", 60.0, determinism);
  criterion(8, "MMR3 brute-force equivalence", 30.0, brute_force);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
