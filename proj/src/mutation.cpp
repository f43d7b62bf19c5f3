#include "moralmt/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"

namespace moralmt {

using nlohmann::json;

std::string_view to_string(MutationKind k) {
  switch (k) {
    case MutationKind::SwapProtected: return "SwapProtected";
    case MutationKind::SubstituteSpecies: return "SubstituteSpecies";
    case MutationKind::AdjustLaneCount: return "AdjustLaneCount";
    case MutationKind::FlipCompliance: return "FlipCompliance";
  }
  return "?";
}

json to_json(const MutationOp& op) {
  return {{"kind", to_string(op.kind)}, {"source_id", op.source_id}, {"slot", op.slot},
          {"field", op.field},          {"value", op.value},         {"lane", op.lane},
          {"delta", op.delta}};
}

MutationOp mutation_op_from_json(const json& j) {
  MutationOp op;
  const auto kind = j.at("kind").get<std::string>();
  bool known = false;
  for (auto k : {MutationKind::SwapProtected, MutationKind::SubstituteSpecies,
                 MutationKind::AdjustLaneCount, MutationKind::FlipCompliance}) {
    if (kind == to_string(k)) {
      op.kind = k;
      known = true;
    }
  }
  if (!known) throw Error("unknown mutation kind '" + kind + "'");
  op.source_id = j.at("source_id").get<std::string>();
  op.slot = j.at("slot").get<std::size_t>();
  op.field = j.at("field").get<std::string>();
  op.value = j.at("value").get<std::string>();
  op.lane = j.at("lane").get<int>();
  op.delta = j.at("delta").get<int>();
  return op;
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Fisher-Yates with a fixed index draw, so results do not depend on the
// standard library's distribution implementations.
template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::string followup_id(const Scenario& s, Relation r, std::string_view tag, std::size_t n) {
  return s.id + "_m" + std::string(1, to_string(r).back()) + "_" + std::string(tag) + "_" +
         std::to_string(n);
}

// ---- MMR1 -------------------------------------------------------------------

struct ProtectedEdit {
  std::size_t slot;
  std::string field;
  std::string value;
  AttributeProfile profile;
};

template <class T>
std::vector<T> interleave(const std::vector<std::vector<T>>& lists) {
  std::vector<T> out;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& l : lists) {
      if (i < l.size()) {
        out.push_back(l[i]);
        any = true;
      }
    }
    if (!any) return out;
  }
}

double round_cm(double h) { return std::round(h * 100.0) / 100.0; }

bool valid_profile(const AttributeProfile& p) {
  if (!(p.height > 0.5 && p.height < 2.5)) return false;
  return p.age_group != AgeGroup::Child || p.height <= 1.5;
}

DeriveResult derive_mmr1(const Scenario& s, int budget, std::mt19937_64& rng, std::string_view tag) {
  // fields[f][h]: candidate edits of field f for the h-th human.
  std::vector<std::vector<std::vector<ProtectedEdit>>> fields(4);
  for (const auto& c : s.characters) {
    if (!c.species.is_human()) continue;
    const auto& p = c.profile;
    for (auto& f : fields) f.emplace_back();
    {
      auto q = p;
      q.gender = p.gender == Gender::Male ? Gender::Female : Gender::Male;
      fields[0].back().push_back({c.slot, "gender", std::string(to_string(q.gender)), q});
    }
    for (auto g : {AgeGroup::Child, AgeGroup::Adult, AgeGroup::Elderly}) {
      if (g == p.age_group) continue;
      auto q = p;
      q.age_group = g;
      if (g == AgeGroup::Child && q.height > 1.5) q.height = 1.4;
      fields[1].back().push_back({c.slot, "age_group", std::string(to_string(g)), q});
    }
    for (auto t : {SkinTone::A, SkinTone::B, SkinTone::C, SkinTone::D, SkinTone::E}) {
      if (t == p.skin_tone) continue;
      auto q = p;
      q.skin_tone = t;
      fields[2].back().push_back({c.slot, "skin_tone", std::string(to_string(t)), q});
    }
    for (double dh : {-0.2, 0.2}) {
      auto q = p;
      q.height = round_cm(p.height + dh);
      if (q.height == p.height || !valid_profile(q)) continue;
      fields[3].back().push_back({c.slot, "height", dsl::format_number(q.height), q});
    }
  }
  DeriveResult out;
  if (fields[0].empty()) {
    out.reason = "NoHumans";
    return out;
  }
  // Each field's sequence visits every human before repeating one, and
  // fields take turns, so a small budget already spreads over fields and
  // characters.
  std::vector<std::vector<ProtectedEdit>> per_field;
  for (auto& f : fields) {
    for (auto& h : f) shuffle(h, rng);
    shuffle(f, rng);
    per_field.push_back(interleave(f));
  }
  const std::vector<ProtectedEdit> order = interleave(per_field);
  for (const auto& e : order) {
    if (static_cast<int>(out.followups.size()) >= budget) break;
    FollowUp f;
    f.scenario = s;
    f.scenario.id = followup_id(s, Relation::MMR1, tag, out.followups.size());
    f.scenario.characters[e.slot].profile = e.profile;
    f.ops.push_back({MutationKind::SwapProtected, s.id, e.slot, e.field, e.value, 0, 0});
    if (!mmr1_precondition(s, f.scenario)) out.followups.push_back(std::move(f));
  }
  if (out.followups.empty()) out.reason = "Unattainable";
  return out;
}

// ---- shared construction for MMR2..MMR4 -------------------------------------

// Mirror image of `c` about the boundary between its lane and `lane`.
Character mirrored_clone(const Character& c, int lane, const RoadFrame& f) {
  Character m = c;
  const double offset = f.lateral(c.position) - f.lane_center(c.lane);
  m.lane = lane;
  m.position = f.to_world(f.longitudinal(c.position), f.lane_center(lane) - offset);
  m.heading = 2.0 * f.heading - c.heading;
  return m;
}

Character shifted(const Character& c, const RoadFrame& f, double ds) {
  Character m = c;
  m.position = f.to_world(f.longitudinal(c.position) + ds, f.lateral(c.position));
  return m;
}

Character as_animal(Character c, const std::string& kind, bool pet) {
  c.species = pet ? Species::pet(kind) : Species::wild(kind);
  c.profile = animal_profile();
  c.compliance = true;
  c.model.clear();
  return c;
}

void renumber(Scenario& s) {
  for (std::size_t i = 0; i < s.characters.size(); ++i) s.characters[i].slot = i;
}

std::vector<MutationOp> removal_ops(const Scenario& s) {
  std::vector<MutationOp> ops;
  for (int lane = 1; lane <= s.map.lane_count; ++lane) {
    int n = 0;
    for (const auto& c : s.characters) n += c.lane == lane ? 1 : 0;
    if (n > 0) ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", lane, -n});
  }
  return ops;
}

const Character* first_human(const Scenario& s) {
  for (const auto& c : s.characters) {
    if (c.species.is_human()) return &c;
  }
  return nullptr;
}

bool same_content(const Scenario& a, const Scenario& b) {
  Scenario x = a;
  x.id = b.id;
  return x == b;
}

struct Collector {
  const Scenario& source;
  Relation relation;
  std::string_view tag;
  int budget;
  const SimParams& params;
  DeriveResult out;

  bool full() const { return static_cast<int>(out.followups.size()) >= budget; }

  void offer(Scenario cand, std::vector<MutationOp> ops) {
    if (full()) return;
    renumber(cand);
    cand.id = followup_id(source, relation, tag, out.followups.size());
    if (precondition(relation, cand, params)) return;
    for (const auto& f : out.followups) {
      if (same_content(f.scenario, cand)) return;
    }
    out.followups.push_back({std::move(cand), std::move(ops)});
  }
};

DeriveResult derive_mmr2(const Scenario& s, int budget, const SimParams& params, std::string_view tag) {
  Collector col{s, Relation::MMR2, tag, budget, params, {}};
  if (!first_human(s)) {
    col.out.reason = "NoHumans";
    return col.out;
  }
  if (s.map.lane_count < 2) {
    col.out.reason = "NoSecondLane";
    return col.out;
  }
  const RoadFrame f = RoadFrame::of(s);
  const std::pair<const char*, bool> kinds[] = {{"dog", true}, {"boar", false}};
  for (const auto& h : s.characters) {
    if (!h.species.is_human()) continue;
    for (int lane : {h.lane - 1, h.lane + 1}) {
      if (!f.has_lane(lane)) continue;
      for (const auto& [kind, pet] : kinds) {
        for (bool human_stays : {true, false}) {
          Scenario cand = s;
          const Character mirror = mirrored_clone(h, lane, f);
          auto ops = removal_ops(s);
          if (human_stays) {
            cand.characters = {h, as_animal(mirror, kind, pet)};
            ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", h.lane, 1});
            ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", lane, 1});
            ops.push_back({MutationKind::SubstituteSpecies, s.id, 1, "species",
                           std::string(pet ? "pet:" : "wild:") + kind, 0, 0});
          } else {
            cand.characters = {as_animal(h, kind, pet), mirror};
            ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", h.lane, 1});
            ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", lane, 1});
            ops.push_back({MutationKind::SubstituteSpecies, s.id, 0, "species",
                           std::string(pet ? "pet:" : "wild:") + kind, 0, 0});
          }
          col.offer(std::move(cand), std::move(ops));
        }
      }
    }
  }
  if (col.out.followups.empty()) col.out.reason = "Unattainable";
  return col.out;
}

// Lane 1 gets n1 copies of the template, lane 2 gets n2 mirrored copies,
// staggered 1 m apart along the road.
Scenario lane_groups(const Scenario& s, const Character& tmpl, int n1, int n2, const RoadFrame& f) {
  Scenario cand = s;
  cand.characters.clear();
  Character base = tmpl;
  if (tmpl.lane == 2) {
    base = mirrored_clone(tmpl, 1, f);
  } else if (tmpl.lane > 2) {
    // Carry the template's offset from its own lane over to lane 1.
    base.lane = 1;
    const double offset = f.lateral(tmpl.position) - f.lane_center(tmpl.lane);
    base.position = f.to_world(f.longitudinal(tmpl.position), f.lane_center(1) + offset);
  }
  const Character other = mirrored_clone(base, 2, f);
  for (int i = 0; i < n1; ++i) cand.characters.push_back(shifted(base, f, i * 1.0));
  for (int i = 0; i < n2; ++i) cand.characters.push_back(shifted(other, f, i * 1.0));
  return cand;
}

std::vector<MutationOp> count_ops(const Scenario& s, int n1, int n2) {
  std::vector<MutationOp> ops;
  int have[2] = {0, 0};
  for (const auto& c : s.characters) {
    if (c.lane == 1 || c.lane == 2) ++have[c.lane - 1];
  }
  if (n1 != have[0]) ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", 1, n1 - have[0]});
  if (n2 != have[1]) ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", 2, n2 - have[1]});
  for (int lane = 3; lane <= s.map.lane_count; ++lane) {
    int n = 0;
    for (const auto& c : s.characters) n += c.lane == lane ? 1 : 0;
    if (n > 0) ops.push_back({MutationKind::AdjustLaneCount, s.id, 0, "", "", lane, -n});
  }
  return ops;
}

DeriveResult derive_mmr3(const Scenario& s, int budget, const SimParams& params, std::string_view tag) {
  Collector col{s, Relation::MMR3, tag, budget, params, {}};
  const Character* tmpl = first_human(s);
  if (!tmpl) {
    col.out.reason = "NoHumans";
    return col.out;
  }
  if (s.map.lane_count < 2) {
    col.out.reason = "NoSecondLane";
    return col.out;
  }
  const RoadFrame f = RoadFrame::of(s);
  for (auto [n1, n2] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) {
    col.offer(lane_groups(s, *tmpl, n1, n2, f), count_ops(s, n1, n2));
  }
  if (col.out.followups.empty()) col.out.reason = "Unattainable";
  return col.out;
}

DeriveResult derive_mmr4(const Scenario& s, int budget, const SimParams& params, std::string_view tag) {
  Collector col{s, Relation::MMR4, tag, budget, params, {}};
  const Character* tmpl = first_human(s);
  if (!tmpl) {
    col.out.reason = "NoHumans";
    return col.out;
  }
  if (s.map.lane_count < 2) {
    col.out.reason = "NoSecondLane";
    return col.out;
  }
  const RoadFrame f = RoadFrame::of(s);
  for (int n : {1, 2}) {
    Scenario cand = lane_groups(s, *tmpl, n, n, f);
    for (auto& c : cand.characters) c.compliance = c.lane == 2;
    cand.signals[0] = SignalState::Red;
    cand.signals[1] = SignalState::Green;
    auto ops = count_ops(s, n, n);
    for (int lane : {1, 2}) {
      const bool want = lane == 2;
      if (lane_compliance(s, lane) !=
          (want ? LaneCompliance::AllCompliant : LaneCompliance::AllViolating)) {
        ops.push_back({MutationKind::FlipCompliance, s.id, 0, "compliance",
                       want ? "compliant" : "violating", lane, 0});
      }
    }
    col.offer(std::move(cand), std::move(ops));
  }
  if (col.out.followups.empty()) col.out.reason = "Unattainable";
  return col.out;
}

}  // namespace

DeriveResult derive_followups(const Scenario& s, Relation relation, int budget, std::uint64_t seed,
                              const SimParams& params, std::string_view tag) {
  if (auto v = validate(s); !v.empty()) throw Error("cannot mutate invalid scenario: " + describe(v));
  DeriveResult out;
  if (budget <= 0) {
    out.reason = "ZeroBudget";
    return out;
  }
  std::mt19937_64 rng(seed ^ (0x6D6D72ULL + static_cast<std::uint64_t>(relation)));
  switch (relation) {
    case Relation::MMR1: return derive_mmr1(s, budget, rng, tag);
    case Relation::MMR2: return derive_mmr2(s, budget, params, tag);
    case Relation::MMR3: return derive_mmr3(s, budget, params, tag);
    case Relation::MMR4: return derive_mmr4(s, budget, params, tag);
  }
  return out;
}

// ---- pool ---------------------------------------------------------------------

double guidance_weight(double margin, double base, double delta) {
  return base / (std::abs(margin) + delta);
}

std::vector<std::size_t> sample_sources(const std::vector<PoolEntry>& pool, std::size_t k,
                                        std::uint64_t seed) {
  if (pool.empty()) throw Error("cannot sample from an empty pool");
  std::mt19937_64 rng(seed);
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double u = unit(rng);  // drawn for every entry so frozen ones do not shift the stream
    if (pool[i].frozen) continue;
    const double w = pool[i].weight;
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("pool weight must be finite and positive");
    const double key = u > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity();
    keys.emplace_back(key, i);
  }
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (keys.size() > k) keys.resize(k);
  std::vector<std::size_t> out;
  for (const auto& kv : keys) out.push_back(kv.second);
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].weight != pool[b].weight) return pool[a].weight > pool[b].weight;
    return a < b;
  });
  return out;
}

void update_weights(std::vector<PoolEntry>& pool, const std::vector<MmrVerdict>& verdicts,
                    int iteration, double base) {
  for (auto& e : pool) {
    std::optional<double> closest;
    for (const auto& v : verdicts) {
      if (v.subject_id != e.scenario.id) continue;
      e.history.push_back({v.relation, v.decision, v.margin, iteration});
      if (v.decision == Decision::Violation) e.frozen = true;
      const double m = std::abs(v.margin);
      if (!closest || m < *closest) closest = m;
    }
    if (closest) e.weight = guidance_weight(*closest, base);
  }
  double sum = 0.0;
  int active = 0;
  for (const auto& e : pool) {
    if (!e.frozen) {
      sum += e.weight;
      ++active;
    }
  }
  if (active == 0 || !(sum > 0.0)) return;
  const double scale = base * active / sum;
  for (auto& e : pool) {
    if (!e.frozen) e.weight *= scale;
  }
}

}  // namespace moralmt
