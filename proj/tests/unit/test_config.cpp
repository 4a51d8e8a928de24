#include <doctest.h>

#include <string>

#include "isaacslab/config.hpp"
#include "isaacslab/scenario.hpp"

using namespace isaacslab;

TEST_CASE("scalars, strings, booleans and nested arrays") {
  const auto doc = config::parse(R"(
# leading comment
[model]
name = "demo"   # trailing comment
T = 1.5
flag = true
tag = 'single'

[controls.u1]
lo = [-1, -2]
list = [[-1, 0],
        [1, 0]]
)");
  const auto& model = doc.section("model");
  CHECK(model.string("name") == "demo");
  CHECK(model.number("T") == 1.5);
  CHECK(model.boolean_or("flag", false));
  CHECK(model.string("tag") == "single");
  CHECK(model.number_or("missing", 7.0) == 7.0);
  const auto& u1 = doc.section("controls.u1");
  CHECK(u1.numbers("lo") == std::vector<double>{-1.0, -2.0});
  const auto* list = u1.find("list");
  REQUIRE(list != nullptr);
  REQUIRE(list->is_array());
  CHECK(std::get<config::Array>(list->data).size() == 2);
}

TEST_CASE("scalar values promote to one-element lists") {
  const auto doc = config::parse("[a]\nx = 2\ns = \"e\"\n");
  CHECK(doc.section("a").numbers("x") == std::vector<double>{2.0});
  CHECK(doc.section("a").strings("s") == std::vector<std::string>{"e"});
  CHECK(doc.section("a").integer("x") == 2);
}

TEST_CASE("malformed files name the line") {
  try {
    config::parse("[a]\nx = 1\ny = [1, 2\n");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  CHECK_THROWS_AS(config::parse("[a]\nx 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("x = 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[a]\nx = \"open\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
}

TEST_CASE("typed access and key restrictions") {
  const auto doc = config::parse("[a]\nx = 1.5\ns = \"t\"\n");
  const auto& a = doc.section("a");
  CHECK_THROWS_AS(a.integer("x"), ConfigError);
  CHECK_THROWS_AS(a.number("s"), ConfigError);
  CHECK_THROWS_AS(a.number("nope"), ConfigError);
  CHECK_THROWS_AS(a.restrict_keys({"x"}), ConfigError);
  CHECK_NOTHROW(a.restrict_keys({"x", "s"}));
  CHECK_THROWS_AS(doc.section("b"), ConfigError);
}

TEST_CASE("numbers print back exactly") {
  for (double v : {0.1, -2.5, 1e-300, 3.141592653589793, 123456789.0}) {
    const auto doc = config::parse("[a]\nx = " + config::format_number(v) + "\n");
    CHECK(doc.section("a").number("x") == v);
  }
  CHECK(config::quote("a\"b") == "\"a\\\"b\"");
}

namespace {

const char* kScenario = R"cfg(
[model]
kind = "game"
d = 1
m = 1
T = 1
[dynamics]
b = ["0"]
f1 = ["u1_1 - u2_1"]
sigma = ["0.5"]
[cost]
l = "u2_1^2/2 - u1_1^2/2"
g = "sin(x1)"
[controls.u1]
lo = [-1]
hi = [1]
points = [21]
[controls.u2]
lo = [-1]
hi = [1]
points = [21]
[grid]
lo = [-3]
hi = [3]
n = [61]
[mc]
x0 = [0.5]
paths = 100
steps = 10
seed = 3
)cfg";

}  // namespace

TEST_CASE("scenario sections") {
  const Scenario sc = load_scenario_text(kScenario);
  CHECK(sc.has_grid);
  CHECK(sc.n == std::vector<int>{61});
  CHECK_FALSE(sc.nt.has_value());
  CHECK(sc.x0 == std::vector<double>{0.5});
  CHECK(sc.paths == 100);
  CHECK(sc.seed == 3);
  const Grid grid = scenario_grid(sc);
  CHECK(grid.time_levels() == min_time_levels(sc.spec, grid));
  CHECK(parse_side("lower") == Side::Lower);
  CHECK_THROWS_AS(parse_side("middle"), ConfigError);
  CHECK_THROWS_AS(load_scenario_text(std::string(kScenario) + "[mc2]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_scenario_text(std::string(kScenario) + "[verify]\nbogus = 1\n"), ConfigError);
}
