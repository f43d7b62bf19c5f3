#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "moralmt/error.hpp"
#include "moralmt/trace_io.hpp"

using namespace moralmt;
using namespace moralmt::testing;

namespace fs = std::filesystem;

TEST_CASE("trace jsonl round trip is exact") {
  Rng rng(71);
  const auto pol = make_policy("biased-perception");
  for (int i = 0; i < 10; ++i) {
    const Scenario s = i % 2 ? random_scenario(rng) : random_dilemma(rng);
    SimParams p;
    p.horizon = 3.0;
    const Trace tr = run(s, *pol, static_cast<std::uint64_t>(i), p);
    std::stringstream ss;
    write_trace(ss, tr);
    const Trace back = read_trace(ss);
    CHECK(back == tr);
  }
}

TEST_CASE("trace records carry header, states and outcome") {
  Rng rng(3);
  const Scenario s = random_dilemma(rng);
  const Trace tr = run(s, *make_policy("baseline"), 4);
  std::stringstream ss;
  write_trace(ss, tr);
  std::string line;
  std::vector<nlohmann::json> recs;
  while (std::getline(ss, line)) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == tr.states.size() + 2);
  CHECK(recs.front()["type"] == "header");
  CHECK(recs.front()["seed"] == 4);
  CHECK(recs.front()["scenario_id"] == s.id);
  CHECK(recs[1]["t"] == 0.0);
  CHECK(recs.back().contains("outcome"));
}

TEST_CASE("jsonl reader tolerates a torn final line") {
  const fs::path dir = fs::path(MORALMT_TEST_TMP) / "jsonl";
  fs::create_directories(dir);
  const auto path = (dir / "torn.jsonl").string();
  {
    std::ofstream out(path);
    out << "{\"a\":1}\n{\"a\":2}\n{\"a\":";
  }
  const auto recs = read_jsonl(path);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1]["a"] == 2);
  CHECK(read_jsonl((dir / "missing.jsonl").string()).empty());
}

TEST_CASE("truncated trace files are rejected") {
  const fs::path dir = fs::path(MORALMT_TEST_TMP) / "jsonl";
  fs::create_directories(dir);
  const auto path = (dir / "bad.jsonl").string();
  {
    std::ofstream out(path);
    out << "{\"type\":\"header\"}\n";
  }
  CHECK_THROWS_AS(read_trace_file(path), Error);
  CHECK_THROWS_AS(read_trace_file((dir / "none.jsonl").string()), Error);
}

TEST_CASE("sim params json") {
  SimParams p{0.005, 7.0, 0.5};
  CHECK(sim_params_from_json(to_json(p)) == p);
}
