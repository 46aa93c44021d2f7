#include "fasim/model_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "fasim/error.hpp"

namespace fasim {

namespace {

constexpr std::string_view kSteeringWheel = R"(# Steering wheel turning left and right between two angles.
name steering_wheel
variables x y
output cos(x)
t_max 50

initial L1
  x = pi/2

location L1
  x' = 0.1
  y = cos(x)
  invariant y >= -0.99

location L2
  x' = -4
  y = cos(x)
  invariant y <= 0.99

edge L1 -> L2
  guard y <= -0.99
  reset x = x

edge L2 -> L1
  guard y >= 0.99
  reset x = x
)";

constexpr std::string_view kRobot = R"(# Robot driving on a curve until it reaches a parabolic obstacle.
name robot
variables x y a
output x
output y
t_max 7

initial MOVE
  x = 0
  y = 0
  a = 0

location MOVE
  x' = 5*sin(a)
  y' = 5*cos(a)
  a' = 0.9

location STOP
  x' = 0
  y' = 0
  a' = 0

edge MOVE -> STOP
  guard y >= 12*x^2 - 54*x + 65
)";

constexpr std::string_view kWaterHeating = R"(# Water heater: idle for 5 s, then heat until the water boils.
name water_heating
variables timer temp
output temp
t_max 20

initial S0
  timer = 0
  temp = 30

location S0
  timer' = 1
  temp' = 0

location ON
  timer' = 1
  temp' = 0.075*(150 - temp)

location OFF
  timer' = 0
  temp' = 0

edge S0 -> ON
  guard timer >= 5

edge ON -> OFF
  guard temp == 100
)";

struct Line {
  int number = 0;
  std::string_view text;  // comment stripped
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ModelFile run() {
    bool any = false;
    std::size_t pos = 0;
    int number = 0;
    while (pos <= text_.size()) {
      std::size_t end = text_.find('\n', pos);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view raw = text_.substr(pos, end - pos);
      pos = end + 1;
      ++number;
      if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      line_ = {number, raw};
      cursor_ = 0;
      skip_space();
      if (at_end()) continue;
      any = true;
      statement();
    }
    if (!any) throw ModelError(ErrorCode::ParseError, "model text is empty", 1, 1);
    return finish();
  }

 private:
  enum class Block { None, Initial, Location, Edge };

  [[noreturn]] void fail(ErrorCode code, const std::string& msg, std::size_t column) const {
    throw ModelError(code, msg, line_.number, static_cast<int>(column) + 1);
  }

  bool at_end() const { return cursor_ >= line_.text.size(); }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(line_.text[cursor_]))) ++cursor_;
  }

  std::string_view identifier() {
    skip_space();
    const std::size_t start = cursor_;
    if (at_end() || !is_ident_start(line_.text[cursor_])) fail(ErrorCode::ParseError, "expected a name", cursor_);
    while (!at_end() && is_ident_char(line_.text[cursor_])) ++cursor_;
    return line_.text.substr(start, cursor_ - start);
  }

  void expect_end() {
    skip_space();
    if (!at_end()) fail(ErrorCode::ParseError, "unexpected text", cursor_);
  }

  void expect(std::string_view token) {
    skip_space();
    if (line_.text.substr(cursor_, token.size()) != token) {
      fail(ErrorCode::ParseError, "expected '" + std::string(token) + "'", cursor_);
    }
    cursor_ += token.size();
  }

  // Rest of the line, trimmed, with its starting column.
  std::pair<std::string_view, std::size_t> rest() {
    skip_space();
    std::string_view r = line_.text.substr(cursor_);
    while (!r.empty() && std::isspace(static_cast<unsigned char>(r.back()))) r.remove_suffix(1);
    if (r.empty()) fail(ErrorCode::ParseError, "expected an expression", cursor_);
    return {r, cursor_};
  }

  Expression expression(std::string_view text, std::size_t column) {
    try {
      return parse_expression(text);
    } catch (const ModelError& e) {
      throw ModelError(e.code(), e.what(), line_.number, static_cast<int>(column) + std::max(e.column(), 1));
    }
  }

  Expression expression_to_end() {
    auto [text, column] = rest();
    cursor_ = line_.text.size();
    return expression(text, column);
  }

  double constant_to_end() {
    const std::size_t column = (skip_space(), cursor_);
    auto value = is_constant(expression_to_end());
    if (!value) fail(ErrorCode::ParseError, "expected a constant", column);
    return *value;
  }

  void statement() {
    const std::size_t column = cursor_;
    const std::string_view word = identifier();
    skip_space();
    const bool assignment = !at_end() && (line_.text[cursor_] == '=' || line_.text[cursor_] == '\'');
    if (assignment) return assign(word, column);

    if (word == "name") {
      name_ = std::string(rest().first);
      cursor_ = line_.text.size();
    } else if (word == "variables") {
      while ((skip_space(), !at_end())) ha_.variables.emplace_back(identifier());
    } else if (word == "output") {
      auto [text, col] = rest();
      expression(text, col);
      outputs_.emplace_back(text);
      cursor_ = line_.text.size();
    } else if (word == "t_max") {
      t_max_ = constant_to_end();
    } else if (word == "initial") {
      if (!ha_.initial.empty()) fail(ErrorCode::ValidationError, "more than one initial location", column);
      ha_.initial.push_back({std::string(identifier()), Environment()});
      expect_end();
      block_ = Block::Initial;
    } else if (word == "location") {
      Location loc;
      loc.id = identifier();
      expect_end();
      ha_.locations.push_back(std::move(loc));
      block_ = Block::Location;
    } else if (word == "edge") {
      Edge e;
      e.source = identifier();
      expect("->");
      e.target = identifier();
      expect_end();
      ha_.edges.push_back(std::move(e));
      block_ = Block::Edge;
    } else if (word == "invariant") {
      if (block_ != Block::Location) fail(ErrorCode::ParseError, "invariant outside a location block", column);
      auto& loc = ha_.locations.back();
      if (!loc.invariant) loc.invariant = Predicate{};
      predicate(*loc.invariant);
    } else if (word == "guard") {
      if (block_ != Block::Edge) fail(ErrorCode::ParseError, "guard outside an edge block", column);
      predicate(ha_.edges.back().guard);
    } else if (word == "reset") {
      if (block_ != Block::Edge) fail(ErrorCode::ParseError, "reset outside an edge block", column);
      const std::string var(identifier());
      expect("=");
      ha_.edges.back().reset[var] = expression_to_end();
    } else {
      fail(ErrorCode::ParseError, "unknown statement '" + std::string(word) + "'", column);
    }
  }

  void assign(std::string_view var, std::size_t column) {
    const bool flow = line_.text[cursor_] == '\'';
    if (flow) ++cursor_;
    expect("=");
    switch (block_) {
      case Block::Initial: {
        if (flow) fail(ErrorCode::ParseError, "initial values cannot be derivatives", column);
        auto value = is_constant(expression_to_end());
        if (!value) fail(ErrorCode::ParseError, "initial value must be constant", column);
        ha_.initial.back().values.set(var, *value);
        break;
      }
      case Block::Location: {
        auto& loc = ha_.locations.back();
        const std::string name(var);
        if (loc.flows.contains(name) || loc.updates.contains(name)) {
          fail(ErrorCode::ValidationError, "'" + name + "' is already defined in " + loc.id, column);
        }
        (flow ? loc.flows : loc.updates)[name] = expression_to_end();
        break;
      }
      default:
        fail(ErrorCode::ParseError, "assignment outside an initial or location block", column);
    }
  }

  void predicate(Predicate& into) {
    auto [text, column] = rest();
    cursor_ = line_.text.size();
    std::size_t start = 0;
    for (;;) {
      const std::size_t amp = text.find("&&", start);
      const std::size_t end = amp == std::string_view::npos ? text.size() : amp;
      into.comparisons.push_back(comparison(text.substr(start, end - start), column + start));
      if (amp == std::string_view::npos) break;
      start = amp + 2;
    }
  }

  Comparison comparison(std::string_view text, std::size_t column) {
    std::size_t at = std::string_view::npos, width = 0;
    Relation rel = Relation::LessEqual;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c != '<' && c != '>' && c != '=' && c != '!') continue;
      const std::string_view op = text.substr(i, i + 1 < text.size() && text[i + 1] == '=' ? 2 : 1);
      if (op == "<=") {
        rel = Relation::LessEqual;
      } else if (op == ">=") {
        rel = Relation::GreaterEqual;
      } else if (op == "==") {
        rel = Relation::Equal;
      } else {
        fail(ErrorCode::ValidationError,
             "relation '" + std::string(op) + "' is not supported; use <=, >= or ==", column + i);
      }
      if (at != std::string_view::npos) fail(ErrorCode::ParseError, "more than one relation", column + i);
      at = i;
      width = op.size();
      i += width - 1;
    }
    if (at == std::string_view::npos) fail(ErrorCode::ParseError, "comparison needs a relation", column);

    const Expression lhs = expression(trim(text.substr(0, at)), column);
    const Expression rhs = expression(trim(text.substr(at + width)), column + at + width);
    if (auto r = is_constant(rhs)) return {lhs, rel, *r};
    if (auto l = is_constant(lhs)) return {rhs, flip(rel), *l};
    return {lhs - rhs, rel, 0.0};
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  static Relation flip(Relation r) {
    if (r == Relation::LessEqual) return Relation::GreaterEqual;
    if (r == Relation::GreaterEqual) return Relation::LessEqual;
    return r;
  }

  ModelFile finish() {
    for (auto& loc : ha_.locations) {
      for (const auto& v : ha_.variables) {
        if (!loc.flows.contains(v) && !loc.updates.contains(v)) loc.flows[v] = Expression::constant(0.0);
      }
    }
    // Update variables of the initial location follow from the flow values.
    if (!ha_.initial.empty()) {
      auto& init = ha_.initial.front();
      if (auto idx = ha_.location_index(init.location)) {
        for (const auto& [v, e] : ha_.locations[*idx].updates) {
          if (init.values.contains(v)) continue;
          try {
            init.values.set(v, evaluate(e, init.values));
          } catch (const Error&) {
            // reported by validate as a missing value
          }
        }
      }
    }

    if (auto diags = validate(ha_); !diags.empty()) {
      std::string msg = "model is not valid:";
      for (const auto& d : diags) msg += "\n  " + std::string(to_string(d.kind)) + ": " + d.message;
      throw ModelError(ErrorCode::ValidationError, msg, 0, 0);
    }

    ModelFile out;
    out.name = name_;
    out.ha = std::move(ha_);
    out.outputs = outputs_.empty() ? out.ha.variables : outputs_;
    out.t_max = t_max_;
    return out;
  }

  std::string_view text_;
  Line line_;
  std::size_t cursor_ = 0;
  Block block_ = Block::None;
  HybridAutomaton ha_;
  std::string name_;
  std::vector<std::string> outputs_;
  double t_max_ = 10.0;
};

}  // namespace

ModelFile parse_model(std::string_view text) { return Parser(text).run(); }

const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names{"steering_wheel", "robot", "water_heating"};
  return names;
}

std::optional<std::string_view> builtin_model_text(std::string_view name) {
  if (name == "steering_wheel") return kSteeringWheel;
  if (name == "robot") return kRobot;
  if (name == "water_heating") return kWaterHeating;
  return std::nullopt;
}

}  // namespace fasim
