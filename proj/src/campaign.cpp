#include "moralmt/campaign.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "moralmt/builtin_data.hpp"
#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"
#include "moralmt/kvconfig.hpp"
#include "moralmt/mutation.hpp"
#include "moralmt/trace_io.hpp"

namespace moralmt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string framework_version() { return builtin::kVersion; }

// ---- config -------------------------------------------------------------------

namespace {

template <class T>
T parse_number(const KvEntry& e) {
  T v{};
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  const auto [ptr, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error("config line " + std::to_string(e.line) + ": '" + e.key + "' needs a number, got '" +
                e.value + "'");
  }
  return v;
}

bool parse_bool(const KvEntry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw Error("config line " + std::to_string(e.line) + ": '" + e.key + "' needs true or false");
}

std::vector<Relation> parse_relations(const KvEntry& e) {
  if (e.value == "all") return all_relations();
  std::vector<Relation> out;
  std::size_t pos = 0;
  while (pos <= e.value.size()) {
    const auto comma = e.value.find(',', pos);
    std::string item = e.value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    const auto r = parse_relation(item);
    if (!r) throw Error("config line " + std::to_string(e.line) + ": unknown relation '" + item + "'");
    if (std::find(out.begin(), out.end(), *r) == out.end()) out.push_back(*r);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.lexically_normal().string();
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

}  // namespace

CampaignConfig campaign_config_from_kv(const std::string& text, const std::string& base_dir) {
  CampaignConfig c;
  c.output = resolve(base_dir, c.output);
  for (const auto& e : parse_kv(text)) {
    const auto& k = e.key;
    if (k == "pool") {
      c.pool.push_back(resolve(base_dir, e.value));
    } else if (k == "relations") {
      c.relations = parse_relations(e);
    } else if (k == "policy") {
      c.policy = e.value;
    } else if (k.rfind("policy.", 0) == 0) {
      c.policy_overrides.emplace_back(k.substr(7), e.value);
    } else if (k == "runs") {
      c.runs = parse_number<int>(e);
    } else if (k == "budget") {
      c.budget = parse_number<int>(e);
    } else if (k == "iterations") {
      c.iterations = parse_number<int>(e);
    } else if (k == "sources_per_iteration") {
      c.sources_per_iteration = parse_number<std::size_t>(e);
    } else if (k == "seed") {
      c.seed = parse_number<std::uint64_t>(e);
    } else if (k == "output") {
      c.output = resolve(base_dir, e.value);
    } else if (k == "dt") {
      c.params.dt = parse_number<double>(e);
    } else if (k == "horizon") {
      c.params.horizon = parse_number<double>(e);
    } else if (k == "safety_margin") {
      c.params.safety_margin = parse_number<double>(e);
    } else if (k == "eps_traj") {
      c.eps_traj = parse_number<double>(e);
    } else if (k == "alpha") {
      c.alpha = parse_number<double>(e);
    } else if (k == "grow_pool") {
      c.grow_pool = parse_bool(e);
    } else if (k == "stop_on_irtc") {
      c.stop_on_irtc = parse_bool(e);
    } else if (k == "threads") {
      c.threads = parse_number<unsigned>(e);
    } else {
      throw Error("config line " + std::to_string(e.line) + ": unknown key '" + k + "'");
    }
  }
  return c;
}

CampaignConfig load_campaign_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::string dir = fs::path(path).parent_path().string();
  CampaignConfig c;
  try {
    c = campaign_config_from_kv(text, dir.empty() ? "." : dir);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  if (const char* env = std::getenv("MORALMT_SEED"); env && *env) {
    KvEntry e{"MORALMT_SEED", env, 0};
    c.seed = parse_number<std::uint64_t>(e);
  }
  check_campaign_config(c);
  return c;
}

PolicyConfig campaign_policy(const CampaignConfig& cfg) {
  PolicyConfig p = policy_config(cfg.policy);
  for (const auto& [k, v] : cfg.policy_overrides) apply_override(p, k, v);
  return p;
}

void check_campaign_config(const CampaignConfig& c) {
  if (c.pool.empty()) throw Error("campaign config lists no pool files");
  for (const auto& p : c.pool) {
    if (!fs::exists(p)) throw Error("pool path '" + p + "' does not exist");
  }
  if (c.relations.empty()) throw Error("no relations enabled");
  if (c.runs < 1) throw Error("runs must be >= 1");
  if (c.budget < 0) throw Error("budget must be >= 0");
  if (c.iterations < 1) throw Error("iterations must be >= 1");
  if (!(c.params.dt > 0.0) || !(c.params.horizon > 0.0)) throw Error("dt and horizon must be > 0");
  if (!(c.eps_traj >= 0.0)) throw Error("eps_traj must be >= 0");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  (void)campaign_policy(c);
}

json to_json(const CampaignConfig& c) {
  json rel = json::array();
  for (auto r : c.relations) rel.push_back(to_string(r));
  json overrides = json::object();
  for (const auto& [k, v] : c.policy_overrides) overrides[k] = v;
  return {{"pool", c.pool},
          {"relations", rel},
          {"policy", c.policy},
          {"policy_overrides", overrides},
          {"runs", c.runs},
          {"budget", c.budget},
          {"iterations", c.iterations},
          {"sources_per_iteration", c.sources_per_iteration},
          {"seed", c.seed},
          {"params", to_json(c.params)},
          {"eps_traj", c.eps_traj},
          {"alpha", c.alpha},
          {"grow_pool", c.grow_pool},
          {"stop_on_irtc", c.stop_on_irtc}};
}

// ---- campaign loop ----------------------------------------------------------------

namespace {

std::vector<std::string> pool_files(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".mts") files.push_back(e.path().string());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

class Campaign {
 public:
  explicit Campaign(const CampaignConfig& cfg)
      : cfg_(cfg),
        policy_cfg_(campaign_policy(cfg)),
        policy_(make_policy(policy_cfg_)),
        ads_(simulator_provider(*policy_, cfg.params)),
        opt_{cfg.params, cfg.runs, cfg.eps_traj, cfg.alpha, std::max(1u, cfg.threads)},
        out_(cfg.output) {}

  CampaignReport run() {
    const auto start = std::chrono::steady_clock::now();
    prepare_output();
    load_pool();
    int iter = 0;
    for (; iter < cfg_.iterations; ++iter) {
      if (!iteration(iter)) break;
      if (cfg_.stop_on_irtc && irtc_count_ > 0) {
        ++iter;
        break;
      }
    }
    verdicts_ = {};
    irtcs_ = {};
    mutations_ = {};
    CampaignReport r = report_from_dir(out_.string());
    r.config = to_json(cfg_);
    r.iterations_run = iter;
    r.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream os(out_ / "report.json");
    os << to_json(r).dump(2) << '\n';
    if (!os) throw Error("failed writing report.json");
    return r;
  }

 private:
  void prepare_output() {
    fs::create_directories(out_);
    for (const char* sub : {"traces", "scenarios"}) {
      fs::remove_all(out_ / sub);
      fs::create_directories(out_ / sub);
    }
    fs::remove(out_ / "report.json");
    verdicts_ = JsonlWriter((out_ / "verdicts.jsonl").string());
    irtcs_ = JsonlWriter((out_ / "irtcs.jsonl").string());
    mutations_ = JsonlWriter((out_ / "mutations.jsonl").string());
  }

  void load_pool() {
    std::set<std::string> ids;
    for (const auto& f : pool_files(cfg_.pool)) {
      Scenario s = dsl::load_scenario_file(f);
      if (auto v = validate(s); !v.empty()) throw Error(f + ": invalid scenario: " + describe(v));
      if (!ids.insert(s.id).second) throw Error(f + ": duplicate scenario id '" + s.id + "'");
      pool_.push_back({std::move(s), 1.0, false, f, {}});
    }
    if (pool_.empty()) throw Error("campaign pool is empty");
  }

  std::string scenario_file(const Scenario& s) {
    const std::string rel = "scenarios/" + s.id + ".mts";
    if (written_.insert(s.id).second) {
      std::ofstream os(out_ / rel);
      os << dsl::serialize(s);
      if (!os) throw Error("failed writing " + rel);
    }
    return rel;
  }

  const std::vector<Trace>& traces_of(const Scenario& s) {
    auto it = cache_.find(s.id);
    if (it == cache_.end()) it = cache_.emplace(s.id, collect_traces(s, ads_, opt_)).first;
    return it->second;
  }

  void record_verdict(int iter, const std::string& kind, const std::string& source_id,
                      const MmrVerdict& v, int scenarios, int followups) {
    cumulative_followups_ += followups;
    verdicts_.write({{"iteration", iter},
                     {"sequence", verdict_seq_++},
                     {"kind", kind},
                     {"source_id", source_id},
                     {"scenarios", scenarios},
                     {"followups", followups},
                     {"runs", scenarios * cfg_.runs},
                     {"followup_runs", followups * cfg_.runs},
                     {"cumulative_followups", cumulative_followups_},
                     {"verdict", to_json(v)}});
    round_verdicts_.push_back(v);
    if (v.subject_id != source_id) {
      // A follow-up's margin also steers its source; only verdicts about
      // an entry itself freeze it.
      MmrVerdict g = v;
      g.subject_id = source_id;
      if (g.decision == Decision::Violation) g.decision = Decision::Inconclusive;
      round_verdicts_.push_back(std::move(g));
    }
  }

  void record_irtc(int iter, const MmrVerdict& v, const Scenario& source,
                   const std::vector<Scenario>& followups) {
    IrtcRecord r;
    r.verdict = v;
    r.source_id = source.id;
    r.source_file = scenario_file(source);
    for (const auto& f : followups) {
      r.followup_ids.push_back(f.id);
      r.followup_files.push_back(scenario_file(f));
    }
    const std::uint64_t seed = v.witness_seed.value_or(v.seed_begin);
    std::vector<const Scenario*> witnesses;
    if (v.relation == Relation::MMR1) {
      witnesses.push_back(&source);
      for (const auto& f : followups) {
        if (f.id == v.witness_id) witnesses.push_back(&f);
      }
    } else {
      witnesses.push_back(followups.empty() ? &source : &followups.front());
    }
    for (const Scenario* w : witnesses) {
      const std::string rel = "traces/irtc" + std::to_string(irtc_count_) + "_" + w->id + "_s" +
                              std::to_string(seed) + ".jsonl";
      write_trace_file((out_ / rel).string(), moralmt::run(*w, *policy_, seed, cfg_.params));
      r.trace_files.push_back(rel);
    }
    r.policy = to_json(policy_cfg_);
    r.params = cfg_.params;
    r.eps_traj = cfg_.eps_traj;
    r.alpha = cfg_.alpha;
    r.framework_version = framework_version();
    r.timestamp = {iter, irtc_count_};
    irtcs_.write(to_json(r));
    ++irtc_count_;
  }

  void log_mutations(int iter, Relation rel, const Scenario& src, std::uint64_t seed,
                     const DeriveResult& d) {
    if (d.followups.empty()) {
      mutations_.write({{"iteration", iter},
                        {"relation", to_string(rel)},
                        {"source_id", src.id},
                        {"seed", seed},
                        {"followup_id", nullptr},
                        {"reason", d.reason.value_or("")},
                        {"ops", json::array()}});
    }
    for (const auto& f : d.followups) {
      json ops = json::array();
      for (const auto& op : f.ops) ops.push_back(to_json(op));
      mutations_.write({{"iteration", iter},
                        {"relation", to_string(rel)},
                        {"source_id", src.id},
                        {"seed", seed},
                        {"followup_id", f.scenario.id},
                        {"reason", nullptr},
                        {"ops", std::move(ops)}});
    }
  }

  void grow(std::vector<PoolEntry>& fresh, const Scenario& s, const std::string& parent,
            const MmrVerdict& v) {
    if (!cfg_.grow_pool || v.decision == Decision::Violation) return;
    if (known_ids_.count(s.id)) return;
    known_ids_.insert(s.id);
    fresh.push_back({s, 1.0, false, parent, {}});
  }

  bool iteration(int iter) {
    if (iter == 0) {
      for (const auto& e : pool_) known_ids_.insert(e.scenario.id);
    }
    const std::size_t k = cfg_.sources_per_iteration == 0 ? pool_.size() : cfg_.sources_per_iteration;
    const auto picked = sample_sources(pool_, k, mix(cfg_.seed, static_cast<std::uint64_t>(iter)));
    if (picked.empty()) return false;
    round_verdicts_.clear();
    std::vector<PoolEntry> fresh;
    const std::string tag = "i" + std::to_string(iter);

    for (std::size_t idx : picked) {
      const Scenario src = pool_[idx].scenario;
      cache_.clear();
      for (Relation rel : cfg_.relations) {
        if (rel != Relation::MMR1 && !precondition(rel, src, cfg_.params)) {
          const MmrVerdict v = check_single(rel, src, traces_of(src), opt_);
          record_verdict(iter, "source", src.id, v, 1, 0);
          if (v.decision == Decision::Violation) record_irtc(iter, v, src, {});
        }
        const std::uint64_t seed =
            mix(mix(mix(cfg_.seed, static_cast<std::uint64_t>(iter)), idx), static_cast<std::uint64_t>(rel));
        const DeriveResult d = derive_followups(src, rel, cfg_.budget, seed, cfg_.params, tag);
        log_mutations(iter, rel, src, seed, d);
        if (d.followups.empty()) continue;

        if (rel == Relation::MMR1) {
          std::vector<Scenario> fus;
          std::vector<std::vector<Trace>> fts;
          for (const auto& f : d.followups) {
            fus.push_back(f.scenario);
            fts.push_back(collect_traces(f.scenario, ads_, opt_));
          }
          const MmrVerdict v = check_mmr1(src, fus, traces_of(src), fts, opt_);
          const int n = static_cast<int>(fus.size());
          record_verdict(iter, "followup", src.id, v, 1 + n, n);
          if (v.decision == Decision::Violation) record_irtc(iter, v, src, fus);
          for (const auto& f : fus) grow(fresh, f, src.id, v);
          continue;
        }
        for (const auto& f : d.followups) {
          const MmrVerdict v = check_single(rel, f.scenario, collect_traces(f.scenario, ads_, opt_), opt_);
          record_verdict(iter, "followup", src.id, v, 1, 1);
          if (v.decision == Decision::Violation) record_irtc(iter, v, src, {f.scenario});
          grow(fresh, f.scenario, src.id, v);
        }
      }
    }
    cache_.clear();
    for (auto& e : fresh) pool_.push_back(std::move(e));
    update_weights(pool_, round_verdicts_, iter);
    return true;
  }

  const CampaignConfig& cfg_;
  PolicyConfig policy_cfg_;
  std::unique_ptr<AdsPolicy> policy_;
  TraceProvider ads_;
  OracleOptions opt_;
  fs::path out_;
  JsonlWriter verdicts_, irtcs_, mutations_;
  std::vector<PoolEntry> pool_;
  std::set<std::string> known_ids_;
  std::set<std::string> written_;
  std::map<std::string, std::vector<Trace>> cache_;
  std::vector<MmrVerdict> round_verdicts_;
  int verdict_seq_ = 0;
  int irtc_count_ = 0;
  int cumulative_followups_ = 0;
};

}  // namespace

CampaignReport run_campaign(const CampaignConfig& cfg) {
  check_campaign_config(cfg);
  return Campaign(cfg).run();
}

}  // namespace moralmt
