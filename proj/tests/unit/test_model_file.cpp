#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fasim/model_file.hpp"
#include "test_util.hpp"

using namespace fasim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr const char* kSmall = R"(name small
variables x
initial A
  x = 0
location A
  x' = 1
location B
edge A -> B
  guard x >= 2
)";

// Error (code, line, column) raised by parse_model.
struct Failure {
  ErrorCode code;
  int line;
  int column;
};

Failure failure_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return {e.code(), e.line(), e.column()};
  }
  FAIL("parse_model accepted the text");
  return {};
}

}  // namespace

TEST_SUITE("bench-cli model files") {
  TEST_CASE("built-in steering wheel has the expected structure") {
    const ModelFile m = test::builtin("steering_wheel");
    CHECK(m.name == "steering_wheel");
    CHECK(m.ha.variables == std::vector<std::string>{"x", "y"});
    CHECK(m.outputs == std::vector<std::string>{"cos(x)"});
    CHECK(m.t_max == 50);
    REQUIRE(m.ha.locations.size() == 2);
    const Location& l1 = m.ha.location("L1");
    const Location& l2 = m.ha.location("L2");
    CHECK(is_constant(l1.flows.at("x")) == std::optional<double>(0.1));
    CHECK(is_constant(l2.flows.at("x")) == std::optional<double>(-4.0));
    CHECK(l1.updates.at("y").to_string() == "cos(x)");
    REQUIRE(m.ha.edges.size() == 2);
    CHECK(m.ha.edges[0].guard.to_string() == "y <= -0.99");
    CHECK(m.ha.edges[1].guard.to_string() == "y >= 0.99");
    CHECK(m.ha.initial.at(0).location == "L1");
    CHECK(m.ha.initial.at(0).values.get("x") == std::numbers::pi / 2);
    CHECK(m.ha.initial.at(0).values.get("y") == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("built-in robot and water heating dynamics") {
    const ModelFile robot = test::builtin("robot");
    const Location& move = robot.ha.location("MOVE");
    const Environment env({"x", "y", "a"}, {1.0, 2.0, 0.3});
    CHECK(evaluate(move.flows.at("x"), env) == 5 * std::sin(0.3));
    CHECK(evaluate(move.flows.at("y"), env) == 5 * std::cos(0.3));
    CHECK(evaluate(move.flows.at("a"), env) == 0.9);
    const Comparison& g = robot.ha.edges.at(0).guard.comparisons.at(0);
    CHECK(g.residual(Environment({"x", "y", "a"}, {3.0, 11.0, 0.0})) == doctest::Approx(0.0).epsilon(1e-15));

    const ModelFile water = test::builtin("water_heating");
    const Location& on = water.ha.location("ON");
    CHECK(evaluate(on.flows.at("temp"), Environment({"timer", "temp"}, {0.0, 30.0})) == 9.0);
    CHECK(water.ha.edges.at(1).guard.comparisons.at(0).relation == Relation::Equal);
  }

  TEST_CASE("built-ins validate and translate") {
    CHECK(builtin_model_names().size() == 3);
    for (const auto& name : builtin_model_names()) {
      const ModelFile m = test::builtin(name);
      CHECK(m.name == name);
      CHECK(validate(m.ha).empty());
      CHECK_NOTHROW(convert_to_fa(m.ha));
    }
    CHECK_FALSE(builtin_model_text("nope").has_value());
  }

  TEST_CASE("model files on disk match the built-ins") {
    for (const auto& name : builtin_model_names()) {
      CAPTURE(name);
      CHECK(read_file(std::string(FASIM_MODELS_DIR) + "/" + name + ".model") == *builtin_model_text(name));
    }
  }

  TEST_CASE("defaults") {
    const ModelFile m = parse_model(kSmall);
    CHECK(m.outputs == std::vector<std::string>{"x"});
    CHECK(is_constant(m.ha.location("B").flows.at("x")) == std::optional<double>(0.0));
    CHECK(m.t_max == 10.0);
  }

  TEST_CASE("comparisons are normalised to a constant right-hand side") {
    std::string text = kSmall;
    text.replace(text.find("x >= 2"), 6, "2 <= x");
    const Comparison c = parse_model(text).ha.edges[0].guard.comparisons[0];
    CHECK(c.lhs.to_string() == "x");
    CHECK(c.relation == Relation::GreaterEqual);
    CHECK(c.rhs == 2.0);

    text = kSmall;
    text.replace(text.find("x >= 2"), 6, "x >= x*x - 3");
    const Comparison d = parse_model(text).ha.edges[0].guard.comparisons[0];
    CHECK(d.rhs == 0.0);
    CHECK(d.residual(Environment({"x"}, {2.0})) == 1.0);
  }

  TEST_CASE("empty text is a parse error") {
    for (const char* text : {"", "   \n\n", "# only a comment\n"}) {
      const Failure f = failure_of(text);
      CHECK(f.code == ErrorCode::ParseError);
      CHECK(f.line == 1);
      CHECK(f.column == 1);
    }
  }

  TEST_CASE("unsupported relations are validation errors with a position") {
    for (const char* op : {"<", ">", "!=", "="}) {
      std::string text = kSmall;
      const std::string guard = std::string("x ") + op + " 2";
      text.replace(text.find("x >= 2"), 6, guard);
      CAPTURE(op);
      const Failure f = failure_of(text);
      CHECK(f.code == ErrorCode::ValidationError);
      CHECK(f.line == 9);
      CHECK(f.column == 11);
    }
  }

  TEST_CASE("syntax errors carry the line") {
    std::string text = kSmall;
    text.replace(text.find("x' = 1"), 6, "x' = 1 +");
    const Failure f = failure_of(text);
    CHECK(f.code == ErrorCode::ParseError);
    CHECK(f.line == 6);

    CHECK(failure_of("variables x\nbogus 3\n").line == 2);
    CHECK(failure_of("variables x\n  guard x >= 1\n").code == ErrorCode::ParseError);
  }

  TEST_CASE("semantic problems are validation errors") {
    std::string text = kSmall;
    text.replace(text.find("x >= 2"), 6, "z >= 2");
    CHECK(failure_of(text).code == ErrorCode::ValidationError);

    text = kSmall;
    text += "initial B\n";
    CHECK(failure_of(text).code == ErrorCode::ValidationError);
  }
}
