#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"

namespace moralmt::dsl {

namespace {

std::string where(const Expr& e) {
  return std::to_string(e.pos.line) + ":" + std::to_string(e.pos.column) + ": ";
}

[[noreturn]] void fail_at(const Expr& e, const std::string& msg) { throw Error(where(e) + msg); }

struct Bound {
  ExprPtr expr;
  std::string target;  // identifier the value was reached through, if any
};

class Lowerer {
 public:
  Lowerer(const DslDocument& doc, const Registry& reg) : doc_(doc), reg_(reg) {}

  Scenario run() {
    const Assignment& stmt = doc_.scenario_statement();
    const auto& block = std::get<ScenarioBlock>(stmt.value->node);

    Scenario s;
    s.id = stmt.target;

    const Expr* map_item = nullptr;
    Bound ego_item;
    std::vector<Bound> character_items;
    const Expr* signal_item = nullptr;
    const Expr* seed_item = nullptr;

    for (const auto& raw : block.items) {
      Bound b = resolve({raw, ""});
      const Expr& e = *b.expr;
      if (const auto* call = std::get_if<CtorCall>(&e.node)) {
        if (call->name == "load") {
          if (map_item) fail_at(e, "more than one load(...) item");
          map_item = &e;
        } else if (call->name == "AV") {
          if (ego_item.expr) fail_at(e, "more than one AV item");
          ego_item = b;
        } else if (call->name == "signals") {
          if (signal_item) fail_at(e, "more than one signals(...) item");
          signal_item = &e;
        } else if (call->name == "seed") {
          if (seed_item) fail_at(e, "more than one seed(...) item");
          seed_item = &e;
        } else if (call->name == "Pedestrian" || call->name == "Animal") {
          character_items.push_back(b);
        } else {
          fail_at(e, "unexpected '" + call->name + "' item in CreateScenario");
        }
      } else if (const auto* list = std::get_if<ListLit>(&e.node)) {
        for (const auto& el : list->elements) character_items.push_back(resolve({el, ""}));
      } else {
        fail_at(e, "unexpected item in CreateScenario");
      }
    }
    if (!map_item) fail_at(*stmt.value, "CreateScenario lacks load(map_name)");
    if (!ego_item.expr) fail_at(*stmt.value, "CreateScenario lacks an AV");

    s.map = lower_map(*map_item);
    s.ego = lower_ego(ego_item);
    const RoadFrame road = RoadFrame::of(s);
    for (const auto& item : character_items) {
      const auto* call = std::get_if<CtorCall>(&item.expr->node);
      if (!call || (call->name != "Pedestrian" && call->name != "Animal")) {
        fail_at(*item.expr, "character list entries must be Pedestrian(...) or Animal(...)");
      }
      Character c = call->name == "Pedestrian" ? lower_pedestrian(item, road) : lower_animal(item, road);
      c.slot = s.characters.size();
      s.characters.push_back(std::move(c));
    }

    s.signals.assign(static_cast<std::size_t>(std::max(s.map.lane_count, 0)), SignalState::Green);
    if (signal_item) {
      const auto& call = std::get<CtorCall>(signal_item->node);
      if (call.ellipsis_at) fail_at(*signal_item, "signals(...) does not accept '...'");
      s.signals.clear();
      for (const auto& a : call.args) {
        if (!a) fail_at(*signal_item, "empty signal slot");
        const auto v = parse_signal(string(a, "signal"));
        if (!v) fail_at(*a, "signal must be \"green\" or \"red\"");
        s.signals.push_back(*v);
      }
    }
    if (seed_item) {
      const auto& call = std::get<CtorCall>(seed_item->node);
      if (call.args.size() != 1 || !call.args[0]) fail_at(*seed_item, "seed(...) takes one number");
      const double v = number(call.args[0], "seed");
      if (v < 0 || v != std::floor(v) || v > 9007199254740992.0) {
        fail_at(*call.args[0], "seed must be a non-negative integer");
      }
      s.seed_slot = static_cast<std::uint64_t>(v);
    }
    return s;
  }

 private:
  Bound resolve(Bound b) const {
    int hops = 0;
    while (b.expr) {
      const auto* ref = std::get_if<IdentRef>(&b.expr->node);
      if (!ref) break;
      const Assignment* a = doc_.find(ref->name);
      if (!a) fail_at(*b.expr, "undefined identifier '" + ref->name + "'");
      b = {a->value, ref->name};
      if (++hops > 1000) fail_at(*b.expr, "identifier cycle");
    }
    return b;
  }

  ExprPtr value(const ExprPtr& e) const { return resolve({e, ""}).expr; }

  double number(const ExprPtr& raw, const char* what) const {
    ExprPtr e = value(raw);
    if (const auto* t = std::get_if<TupleLit>(&e->node); t && t->elements.size() == 1 && t->elements[0]) {
      e = value(t->elements[0]);
    }
    const auto* n = std::get_if<NumberLit>(&e->node);
    if (!n) fail_at(*e, std::string(what) + " must be a number");
    return n->value;
  }

  int integer(const ExprPtr& raw, const char* what) const {
    const double v = number(raw, what);
    if (v != std::floor(v) || std::abs(v) > 1e6) fail_at(*value(raw), std::string(what) + " must be an integer");
    return static_cast<int>(v);
  }

  std::string string(const ExprPtr& raw, const char* what) const {
    ExprPtr e = value(raw);
    if (const auto* t = std::get_if<TupleLit>(&e->node); t && t->elements.size() == 1 && t->elements[0]) {
      e = value(t->elements[0]);
    }
    const auto* s = std::get_if<StringLit>(&e->node);
    if (!s) fail_at(*e, std::string(what) + " must be a string");
    return s->value;
  }

  // Tuple slots, padded with nullptr to `arity`.
  std::vector<ExprPtr> tuple(const ExprPtr& raw, std::size_t arity, const char* what) const {
    ExprPtr e = value(raw);
    const auto* t = std::get_if<TupleLit>(&e->node);
    if (!t) fail_at(*e, std::string(what) + " must be a tuple");
    if (t->elements.size() > arity) {
      fail_at(*e, std::string(what) + " takes at most " + std::to_string(arity) + " elements");
    }
    std::vector<ExprPtr> out = t->elements;
    out.resize(arity);
    return out;
  }

  Vec2 position(const ExprPtr& raw) const {
    const auto xy = tuple(raw, 2, "position");
    if (!xy[0] || !xy[1]) fail_at(*value(raw), "position needs both coordinates");
    return {number(xy[0], "x"), number(xy[1], "y")};
  }

  // Positional binding with `...` support. Parameters left unbound are
  // looked up as `<target>_<param>` bindings.
  std::vector<ExprPtr> bind(const Bound& b, std::initializer_list<const char*> params) const {
    const auto& call = std::get<CtorCall>(b.expr->node);
    const std::size_t n = params.size();
    std::vector<ExprPtr> out(n);
    if (call.args.size() > n) {
      fail_at(*b.expr, call.name + " takes at most " + std::to_string(n) + " arguments");
    }
    if (call.ellipsis_at) {
      const std::size_t before = *call.ellipsis_at;
      const std::size_t after = call.args.size() - before;
      for (std::size_t i = 0; i < before; ++i) out[i] = call.args[i];
      for (std::size_t j = 0; j < after; ++j) out[n - after + j] = call.args[before + j];
    } else {
      for (std::size_t i = 0; i < call.args.size(); ++i) out[i] = call.args[i];
    }
    if (!b.target.empty()) {
      std::size_t i = 0;
      for (const char* p : params) {
        if (!out[i]) {
          if (const Assignment* a = doc_.find(b.target + "_" + p)) out[i] = a->value;
        }
        ++i;
      }
    }
    return out;
  }

  MapSpec lower_map(const Expr& e) const {
    const auto& call = std::get<CtorCall>(e.node);
    if (call.ellipsis_at || call.args.empty() || call.args.size() > 2 || !call.args[0]) {
      fail_at(e, "load(map_name[, (lane_count, lane_width, crossing_distance, heading)])");
    }
    const std::string name = string(call.args[0], "map name");
    std::optional<MapSpec> base = reg_.map(name);
    std::vector<ExprPtr> geo(4);
    if (call.args.size() == 2 && call.args[1]) geo = tuple(call.args[1], 4, "map geometry");
    const bool full = geo[0] && geo[1] && geo[2] && geo[3];
    if (!base && !full) fail_at(e, "unknown map '" + name + "'");
    MapSpec m = base.value_or(MapSpec{});
    m.name = name;
    if (geo[0]) m.lane_count = integer(geo[0], "lane_count");
    if (geo[1]) m.lane_width = number(geo[1], "lane_width");
    if (geo[2]) m.crossing_distance = number(geo[2], "crossing_distance");
    if (geo[3]) m.heading = number(geo[3], "heading");
    return m;
  }

  EgoConfig lower_ego(const Bound& b) const {
    const auto args = bind(b, {"init_state", "lane", "limits", "vehicle_type"});
    EgoConfig ego;
    if (!args[0]) fail_at(*b.expr, "AV requires init_state");
    const auto st = tuple(args[0], 3, "ego init_state");
    if (!st[0]) fail_at(*value(args[0]), "ego init_state requires a position");
    ego.init_position = position(st[0]);
    if (st[1]) fail_at(*value(st[1]), "ego heading is fixed by the map; leave the slot empty");
    if (st[2]) ego.init_speed = number(st[2], "ego speed");
    if (args[1]) ego.init_lane = integer(args[1], "ego lane");
    if (args[2]) {
      const auto lim = tuple(args[2], 4, "ego limits");
      if (lim[0]) ego.max_brake_decel = number(lim[0], "max_brake_decel");
      if (lim[1]) ego.max_lateral_speed = number(lim[1], "max_lateral_speed");
      if (lim[2]) ego.body_radius = number(lim[2], "body_radius");
      if (lim[3]) ego.max_accel = number(lim[3], "max_accel");
    }
    if (args[3]) ego.model_name = string(args[3], "vehicle_type");
    return ego;
  }

  // Shared by Pedestrian and Animal: (position, heading, speed).
  void lower_motion(const ExprPtr& init, const Expr& ctx, const RoadFrame& road, Character& c,
                    const ExprPtr& lane) const {
    if (!init) fail_at(ctx, "init_state is required");
    const auto st = tuple(init, 3, "init_state");
    if (!st[0]) fail_at(*value(init), "init_state requires a position");
    c.position = position(st[0]);
    c.lane = lane ? integer(lane, "lane") : road.lane_at(road.lateral(c.position));
    if (st[1]) {
      c.heading = number(st[1], "heading");
    } else {
      // Perpendicular to the road, toward the ego lane; leftward when on it.
      const double quarter = std::numbers::pi / 2;
      c.heading = road.heading + (c.lane > road.origin_lane ? -quarter : quarter);
    }
    if (st[2]) c.walk_speed = number(st[2], "walk speed");
  }

  Character lower_pedestrian(const Bound& b, const RoadFrame& road) const {
    const auto args = bind(b, {"init_state", "lane", "compliance", "profile", "radius", "model"});
    Character c;
    c.species = Species::human();
    if (!args[5]) fail_at(*b.expr, "Pedestrian requires a model name");
    c.model = string(args[5], "model");
    // A complete profile tuple makes the model a plain asset name.
    bool full_profile = false;
    if (args[3]) {
      const auto p = tuple(args[3], 4, "profile");
      full_profile = p[0] && p[1] && p[2] && p[3];
    }
    const auto base = reg_.pedestrian(c.model);
    if (!base && !full_profile) fail_at(*value(args[5]), "unknown pedestrian model '" + c.model + "'");
    if (base) c.profile = *base;
    lower_motion(args[0], *b.expr, road, c, args[1]);
    if (args[2]) {
      const std::string v = string(args[2], "compliance");
      if (v == "compliant") {
        c.compliance = true;
      } else if (v == "violating") {
        c.compliance = false;
      } else {
        fail_at(*value(args[2]), "compliance must be \"compliant\" or \"violating\"");
      }
    }
    if (args[3]) {
      const auto p = tuple(args[3], 4, "profile");
      if (p[0]) {
        const auto v = parse_age_group(string(p[0], "age_group"));
        if (!v) fail_at(*value(p[0]), "age_group must be child, adult or elderly");
        c.profile.age_group = *v;
      }
      if (p[1]) {
        const auto v = parse_gender(string(p[1], "gender"));
        if (!v) fail_at(*value(p[1]), "gender must be male or female");
        c.profile.gender = *v;
      }
      if (p[2]) {
        const auto v = parse_skin_tone(string(p[2], "skin_tone"));
        if (!v) fail_at(*value(p[2]), "skin_tone must be one of A..E");
        c.profile.skin_tone = *v;
      }
      if (p[3]) c.profile.height = number(p[3], "height");
    }
    if (args[4]) c.body_radius = number(args[4], "radius");
    return c;
  }

  Character lower_animal(const Bound& b, const RoadFrame& road) const {
    const auto args = bind(b, {"init_state", "lane", "kind", "category", "radius"});
    Character c;
    c.profile = animal_profile();
    if (!args[2]) fail_at(*b.expr, "Animal requires a kind");
    const std::string kind = string(args[2], "kind");
    std::optional<SpeciesKind> cls;
    if (args[3]) {
      const std::string cat = string(args[3], "category");
      if (cat == "pet") {
        cls = SpeciesKind::Pet;
      } else if (cat == "wild") {
        cls = SpeciesKind::WildAnimal;
      } else {
        fail_at(*value(args[3]), "category must be \"pet\" or \"wild\"");
      }
    } else {
      cls = reg_.animal(kind);
      if (!cls) fail_at(*value(args[2]), "unknown animal kind '" + kind + "'; give a category");
    }
    c.species = Species{*cls, kind};
    lower_motion(args[0], *b.expr, road, c, args[1]);
    if (args[4]) c.body_radius = number(args[4], "radius");
    return c;
  }

  const DslDocument& doc_;
  const Registry& reg_;
};

}  // namespace

Scenario lower(const DslDocument& doc, const Registry& registry) {
  return Lowerer(doc, registry).run();
}

Scenario load_scenario(std::string_view text, const Registry& registry) {
  return lower(parse(text), registry);
}

Scenario load_scenario_file(const std::string& path, const Registry& registry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_scenario(buf.str(), registry);
  } catch (const Error& e) {
    throw Error(path + ":" + e.what());
  }
}

}  // namespace moralmt::dsl
