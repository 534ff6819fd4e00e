// Copyright 2026 The nvmetro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nvmetro/config.hpp"
#include "nvmetro/numerics.hpp"

using namespace nvmetro;

namespace {

Config from(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("sections, comments and typed values") {
  const Config c = from(
      "# header\n"
      "[run]\n"
      "seed = 42   ; trailing\n"
      "name = two spin\n"
      "\n"
      "[values]\n"
      "phase = pi/60\n"
      "list = 1, 2.5, -pi\n"
      "flag = yes\n");
  CHECK(c.has_section("run"));
  CHECK_FALSE(c.has_section("nope"));
  CHECK(c.get_int("run", "seed") == 42);
  CHECK(c.get_string("run", "name") == "two spin");
  CHECK(c.get_double("values", "phase") == doctest::Approx(kPi / 60));
  const auto l = c.get_doubles("values", "list");
  REQUIRE(l.size() == 3);
  CHECK(l[2] == doctest::Approx(-kPi));
  CHECK(c.get_bool("values", "flag", false));
  CHECK(c.get_double("values", "missing", 3.5) == 3.5);
  CHECK_NOTHROW(c.check_all_used());
}

TEST_CASE("diagnostics carry line numbers") {
  try {
    from("[a]\nx = 1\nbroken line\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("test.cfg:3") != std::string::npos);
  }
  try {
    from("[a]\nx = 1\nx = 2\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("test.cfg:3") != std::string::npos);
    CHECK(m.find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(from("x = 1\n"), ConfigError);
  CHECK_THROWS_AS(from("[a\n"), ConfigError);

  const Config c = from("[a]\n\nx = abc\n");
  try {
    c.get_double("a", "x");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("test.cfg:3") != std::string::npos);
  }
  CHECK_THROWS_AS(c.get_double("a", "missing"), ConfigError);
  CHECK_THROWS_AS(c.get_int("a", "x"), ConfigError);
}

TEST_CASE("unknown keys are rejected") {
  const Config c = from("[a]\nx = 1\ntypo = 2\n");
  c.get_int("a", "x");
  try {
    c.check_all_used();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("typo") != std::string::npos);
    CHECK(m.find("test.cfg:3") != std::string::npos);
  }
}

TEST_CASE("resolved output parses back to the same values") {
  Config c = from("[a]\nx = pi/3\n[b]\nname = q\n");
  c.set("a", "seed", "9");
  c.get_double("a", "x");
  c.get_int("a", "seed");
  c.get_string("b", "name");
  c.get_double("b", "default_only", 0.1);
  std::istringstream is(c.resolved());
  const Config r = Config::parse(is, "resolved");
  CHECK(r.get_double("a", "x") == c.get_double("a", "x"));
  CHECK(r.get_int("a", "seed") == 9);
  CHECK(r.get_double("b", "default_only") == 0.1);
}

TEST_CASE("number formats") {
  CHECK(parse_number("1e-3") == 1e-3);
  CHECK(parse_number("pi") == kPi);
  CHECK(parse_number("2*pi/3") == doctest::Approx(2 * kPi / 3));
  CHECK(parse_number(" -pi ") == -kPi);
  CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("1..2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number("pi/0"), std::invalid_argument);
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) {
    CHECK(parse_number(format_number(x)) == x);
  }
}

TEST_CASE("list helpers") {
  CHECK(split_list(" a, b ,c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_list("").empty());
  CHECK(trim("\t x \n") == "x");
}

}  // TEST_SUITE
