#include "doctest.h"

#include "moralmt/error.hpp"
#include "moralmt/kvconfig.hpp"

using namespace moralmt;

TEST_CASE("key-value parsing") {
  const auto kv = parse_kv("# header\n\npool = a.mts\npool=b.mts  # trailing\n  runs =  20 \n");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0].key == "pool");
  CHECK(kv[0].value == "a.mts");
  CHECK(kv[0].line == 3);
  CHECK(kv[1].value == "b.mts");
  CHECK(kv[2].key == "runs");
  CHECK(kv[2].value == "20");
}

TEST_CASE("key-value errors name the line") {
  try {
    parse_kv("a = 1\nno equals here\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(parse_kv(" = value"), Error);
  CHECK_THROWS_AS(parse_kv_file("/nonexistent/config.cfg"), Error);
}
