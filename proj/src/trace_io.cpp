#include "moralmt/trace_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "moralmt/error.hpp"

namespace moralmt {

using nlohmann::json;

json to_json(const SimParams& p) {
  return {{"dt", p.dt}, {"horizon", p.horizon}, {"safety_margin", p.safety_margin}};
}

SimParams sim_params_from_json(const json& j) {
  return {j.at("dt").get<double>(), j.at("horizon").get<double>(),
          j.at("safety_margin").get<double>()};
}

json trace_header(const Trace& tr) {
  const auto& f = tr.frame;
  return {{"type", "header"},
          {"scenario_id", tr.scenario_id},
          {"seed", tr.seed},
          {"policy", tr.policy},
          {"params", to_json(tr.params)},
          {"frame",
           {{"origin", {f.origin.x, f.origin.y}},
            {"along", {f.along.x, f.along.y}},
            {"left", {f.left.x, f.left.y}},
            {"heading", f.heading},
            {"lane_width", f.lane_width},
            {"lane_count", f.lane_count},
            {"origin_lane", f.origin_lane}}},
          {"detected", tr.detected}};
}

json state_record(const Trace& tr, std::size_t i) {
  const auto& w = tr.states.at(i);
  const Vec2 p = tr.ego_world(i);
  json chars = json::array();
  for (const auto& c : w.characters) chars.push_back({c.s, c.d, c.hit});
  return {{"type", "state"},
          {"t", w.t},
          {"ego",
           {{"x", p.x},
            {"y", p.y},
            {"s", w.ego.s},
            {"d", w.ego.d},
            {"speed", w.ego.speed},
            {"lane", w.ego.lane},
            {"lane_coord", tr.frame.origin_lane + w.ego.d / tr.frame.lane_width},
            {"maneuver", w.ego.maneuver_target ? json(*w.ego.maneuver_target) : json(nullptr)}}},
          {"characters", std::move(chars)}};
}

json outcome_record(const Trace& tr) {
  json events = json::array();
  for (const auto& e : tr.events) {
    events.push_back({{"t", e.t}, {"step", e.step}, {"slot", e.slot}, {"impact_speed", e.impact_speed}});
  }
  return {{"type", "outcome"},
          {"outcome", tr.no_collision() ? "NoCollision" : "Hit"},
          {"hit_slots", tr.hit_slots()},
          {"events", std::move(events)}};
}

void write_trace(std::ostream& os, const Trace& tr) {
  os << trace_header(tr).dump() << '\n';
  for (std::size_t i = 0; i < tr.states.size(); ++i) os << state_record(tr, i).dump() << '\n';
  os << outcome_record(tr).dump() << '\n';
}

void write_trace_file(const std::string& path, const Trace& tr) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write trace '" + path + "'");
  write_trace(os, tr);
  if (!os) throw Error("failed writing trace '" + path + "'");
}

namespace {

Vec2 vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

Trace read_trace(std::istream& is) {
  Trace tr;
  bool header = false;
  bool outcome = false;
  std::string line;
  std::size_t lineno = 0;
  try {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (outcome) throw Error("record after outcome");
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (header) throw Error("duplicate header");
        header = true;
        tr.scenario_id = j.at("scenario_id").get<std::string>();
        tr.seed = j.at("seed").get<std::uint64_t>();
        tr.policy = j.at("policy").get<std::string>();
        tr.params = sim_params_from_json(j.at("params"));
        const auto& f = j.at("frame");
        tr.frame.origin = vec(f.at("origin"));
        tr.frame.along = vec(f.at("along"));
        tr.frame.left = vec(f.at("left"));
        tr.frame.heading = f.at("heading").get<double>();
        tr.frame.lane_width = f.at("lane_width").get<double>();
        tr.frame.lane_count = f.at("lane_count").get<int>();
        tr.frame.origin_lane = f.at("origin_lane").get<int>();
        tr.detected = j.at("detected").get<std::vector<bool>>();
      } else if (!header) {
        throw Error("first record must be the header");
      } else if (type == "state") {
        WorldState w;
        w.t = j.at("t").get<double>();
        const auto& e = j.at("ego");
        w.ego.s = e.at("s").get<double>();
        w.ego.d = e.at("d").get<double>();
        w.ego.speed = e.at("speed").get<double>();
        w.ego.lane = e.at("lane").get<int>();
        if (!e.at("maneuver").is_null()) w.ego.maneuver_target = e.at("maneuver").get<int>();
        for (const auto& c : j.at("characters")) {
          w.characters.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<bool>()});
        }
        tr.states.push_back(std::move(w));
      } else if (type == "outcome") {
        outcome = true;
        for (const auto& e : j.at("events")) {
          tr.events.push_back({e.at("t").get<double>(), e.at("step").get<std::size_t>(),
                               e.at("slot").get<std::size_t>(), e.at("impact_speed").get<double>()});
        }
      } else {
        throw Error("unknown record type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
  } catch (const Error& e) {
    throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!header) throw Error("trace has no header record");
  if (!outcome) throw Error("trace has no outcome record");
  return tr;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open trace '" + path + "'");
  try {
    return read_trace(is);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace moralmt

namespace moralmt {

JsonlWriter::JsonlWriter(const std::string& path, bool append)
    : path_(path),
      os_(std::make_shared<std::ofstream>(path, append ? std::ios::app : std::ios::trunc)) {
  if (!*os_) throw Error("cannot open '" + path + "' for writing");
}

bool JsonlWriter::is_open() const { return os_ && os_->is_open(); }

void JsonlWriter::write(const json& record) {
  if (!is_open()) throw Error("jsonl writer is not open");
  const std::string line = record.dump() + "\n";
  os_->write(line.data(), static_cast<std::streamsize>(line.size()));
  os_->flush();
  if (!*os_) throw Error("failed writing '" + path_ + "'");
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::vector<json> out;
  if (!is) return out;
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = text.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : text.size();
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      if (!terminated) break;  // torn tail of an interrupted append
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace moralmt
