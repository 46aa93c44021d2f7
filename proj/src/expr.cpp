#include "fasim/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fasim/error.hpp"

namespace fasim {

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(std::vector<std::string> names)
    : names_(std::make_shared<std::vector<std::string>>(std::move(names))),
      values_(names_->size(), 0.0) {}

Environment::Environment(std::vector<std::string> names, std::vector<double> values)
    : names_(std::make_shared<std::vector<std::string>>(std::move(names))),
      values_(std::move(values)) {
  if (values_.size() != names_->size()) {
    throw Error(ErrorCode::Precondition, "environment names and values differ in length");
  }
}

std::optional<std::size_t> Environment::index_of(std::string_view name) const {
  const auto& names = *names_;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

double Environment::get(std::string_view name) const {
  if (auto i = index_of(name)) return values_[*i];
  throw Error(ErrorCode::UnboundVariable, "unbound variable '" + std::string(name) + "'");
}

void Environment::set(std::string_view name, double value) {
  if (auto i = index_of(name)) {
    values_[*i] = value;
    return;
  }
  auto names = std::make_shared<std::vector<std::string>>(*names_);
  names->emplace_back(name);
  names_ = std::move(names);
  values_.push_back(value);
}

bool Environment::operator==(const Environment& other) const {
  return names() == other.names() && values_ == other.values_;
}

// ---------------------------------------------------------------------------
// Expression nodes

struct Expression::Node {
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::string name;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  Expression a;
  Expression b;
};

Expression::Expression() : node_(nullptr) {}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::unary(UnaryOp op, Expression operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->uop = op;
  n->a = std::move(operand);
  return Expression(std::move(n));
}

Expression Expression::binary(BinaryOp op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

// A default-constructed expression is the constant 0.
Expression::Kind Expression::kind() const { return node_ ? node_->kind : Kind::Constant; }
double Expression::value() const { return node_ ? node_->value : 0.0; }
const std::string& Expression::name() const { return node_->name; }
UnaryOp Expression::unary_op() const { return node_->uop; }
BinaryOp Expression::binary_op() const { return node_->bop; }
const Expression& Expression::operand() const { return node_->a; }
const Expression& Expression::lhs() const { return node_->a; }
const Expression& Expression::rhs() const { return node_->b; }

Expression Expression::substitute(std::string_view name, const Expression& replacement) const {
  switch (kind()) {
    case Kind::Constant:
      return *this;
    case Kind::Variable:
      return node_->name == name ? replacement : *this;
    case Kind::Unary:
      return unary(node_->uop, node_->a.substitute(name, replacement));
    case Kind::Binary:
      return binary(node_->bop, node_->a.substitute(name, replacement),
                    node_->b.substitute(name, replacement));
  }
  return *this;
}

const char* to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Arcsin: return "asin";
    case UnaryOp::Arccos: return "acos";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Ln: return "ln";
  }
  return "?";
}

namespace {

int precedence(const Expression& e) {
  if (e.kind() == Expression::Kind::Binary) {
    switch (e.binary_op()) {
      case BinaryOp::Add:
      case BinaryOp::Sub: return 1;
      case BinaryOp::Mul:
      case BinaryOp::Div: return 2;
      case BinaryOp::Pow: return 4;
    }
  }
  if (e.kind() == Expression::Kind::Unary && e.unary_op() == UnaryOp::Neg) return 3;
  if (e.kind() == Expression::Kind::Constant && e.value() < 0) return 3;
  return 5;
}

void print(std::ostringstream& os, const Expression& e, int parent_prec, bool right_side) {
  const int prec = precedence(e);
  const bool parens = prec < parent_prec || (right_side && prec == parent_prec && prec != 4);
  if (parens) os << '(';
  switch (e.kind()) {
    case Expression::Kind::Constant:
      os << format_number(e.value());
      break;
    case Expression::Kind::Variable:
      os << e.name();
      break;
    case Expression::Kind::Unary:
      if (e.unary_op() == UnaryOp::Neg) {
        os << '-';
        print(os, e.operand(), 3, false);
      } else {
        os << to_string(e.unary_op()) << '(';
        print(os, e.operand(), 0, false);
        os << ')';
      }
      break;
    case Expression::Kind::Binary: {
      static constexpr const char* ops[] = {" + ", " - ", "*", "/", "^"};
      print(os, e.lhs(), prec == 4 ? 5 : prec, false);
      os << ops[static_cast<int>(e.binary_op())];
      print(os, e.rhs(), prec, true);
      break;
    }
  }
  if (parens) os << ')';
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

std::string Expression::to_string() const {
  std::ostringstream os;
  print(os, *this, 0, false);
  return os.str();
}

Expression operator+(const Expression& a, const Expression& b) { return Expression::binary(BinaryOp::Add, a, b); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::binary(BinaryOp::Sub, a, b); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::binary(BinaryOp::Mul, a, b); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::binary(BinaryOp::Div, a, b); }
Expression operator-(const Expression& a) { return Expression::unary(UnaryOp::Neg, a); }
Expression pow(const Expression& base, int exponent) {
  return Expression::binary(BinaryOp::Pow, base, Expression::constant(exponent));
}
Expression sin(const Expression& a) { return Expression::unary(UnaryOp::Sin, a); }
Expression cos(const Expression& a) { return Expression::unary(UnaryOp::Cos, a); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double clamp_unit(double x, const char* fn) {
  if (std::abs(x) <= 1.0) return x;
  if (std::abs(x) <= 1.0 + kInverseTrigClamp) return std::clamp(x, -1.0, 1.0);
  std::ostringstream os;
  os.precision(17);
  os << fn << " argument " << x << " outside [-1, 1]";
  throw Error(ErrorCode::DomainError, os.str());
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::DomainError, std::string(what) + " produced a non-finite value");
  }
  return v;
}

double integer_power(double base, double exponent) {
  if (exponent < 0 || exponent != std::floor(exponent) || exponent > 1e6) {
    std::ostringstream os;
    os << "pow exponent " << exponent << " is not a non-negative integer";
    throw Error(ErrorCode::DomainError, os.str());
  }
  auto n = static_cast<unsigned long>(exponent);
  double result = 1.0;
  while (n) {
    if (n & 1u) result *= base;
    base *= base;
    n >>= 1u;
  }
  return result;
}

}  // namespace

double evaluate(const Expression& e, const Environment& env) {
  switch (e.kind()) {
    case Expression::Kind::Constant:
      return e.value();
    case Expression::Kind::Variable:
      return env.get(e.name());
    case Expression::Kind::Unary: {
      const double x = evaluate(e.operand(), env);
      switch (e.unary_op()) {
        case UnaryOp::Neg: return -x;
        case UnaryOp::Sin: return std::sin(x);
        case UnaryOp::Cos: return std::cos(x);
        case UnaryOp::Arcsin: return std::asin(clamp_unit(x, "asin"));
        case UnaryOp::Arccos: return std::acos(clamp_unit(x, "acos"));
        case UnaryOp::Abs: return std::abs(x);
        case UnaryOp::Exp: return checked(std::exp(x), "exp");
        case UnaryOp::Ln:
          if (!(x > 0)) throw Error(ErrorCode::DomainError, "ln of a non-positive value");
          return std::log(x);
      }
      break;
    }
    case Expression::Kind::Binary: {
      const double a = evaluate(e.lhs(), env);
      const double b = evaluate(e.rhs(), env);
      switch (e.binary_op()) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if (b == 0.0) throw Error(ErrorCode::DivideByZero, "division by zero in " + e.to_string());
          return a / b;
        case BinaryOp::Pow: return checked(integer_power(a, b), "pow");
      }
      break;
    }
  }
  return 0.0;
}

namespace {

void collect(const Expression& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case Expression::Kind::Constant: return;
    case Expression::Kind::Variable: out.insert(e.name()); return;
    case Expression::Kind::Unary: collect(e.operand(), out); return;
    case Expression::Kind::Binary:
      collect(e.lhs(), out);
      collect(e.rhs(), out);
      return;
  }
}

}  // namespace

std::set<std::string> free_variables(const Expression& expr) {
  std::set<std::string> out;
  collect(expr, out);
  return out;
}

std::optional<double> is_constant(const Expression& expr) {
  if (!free_variables(expr).empty()) return std::nullopt;
  try {
    return evaluate(expr, Environment{});
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<std::string> unbound_names(const Expression& expr,
                                       std::span<const std::string> declared) {
  std::vector<std::string> out;
  for (const auto& name : free_variables(expr)) {
    if (std::find(declared.begin(), declared.end(), name) == declared.end()) out.push_back(name);
  }
  return out;
}

bool has_valid_exponents(const Expression& e) {
  switch (e.kind()) {
    case Expression::Kind::Constant:
    case Expression::Kind::Variable:
      return true;
    case Expression::Kind::Unary:
      return has_valid_exponents(e.operand());
    case Expression::Kind::Binary:
      if (e.binary_op() == BinaryOp::Pow) {
        auto k = is_constant(e.rhs());
        if (!k || *k < 0 || *k != std::floor(*k)) return false;
      }
      return has_valid_exponents(e.lhs()) && has_valid_exponents(e.rhs());
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expression parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    Expression e = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ModelError(ErrorCode::ParseError, msg, 0, static_cast<int>(pos_) + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression parse_sum() {
    Expression e = parse_product();
    for (;;) {
      if (accept('+')) e = e + parse_product();
      else if (accept('-')) e = e - parse_product();
      else return e;
    }
  }

  Expression parse_product() {
    Expression e = parse_unary();
    for (;;) {
      if (accept('*')) e = e * parse_unary();
      else if (accept('/')) e = e / parse_unary();
      else return e;
    }
  }

  Expression parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (accept('^')) {
      const std::size_t at = pos_;
      Expression exponent = parse_unary();
      auto k = is_constant(exponent);
      if (!k || *k < 0 || *k != std::floor(*k)) {
        pos_ = at;
        fail("pow exponent must be a non-negative integer constant");
      }
      return Expression::binary(BinaryOp::Pow, base, exponent);
    }
    return base;
  }

  Expression parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string ident(text_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        auto op = function(ident);
        if (!op) {
          pos_ = start;
          fail("unknown function '" + ident + "'");
        }
        ++pos_;
        Expression arg = parse_sum();
        if (!accept(')')) fail("expected ')'");
        return Expression::unary(*op, arg);
      }
      if (ident == "pi") return Expression::constant(std::numbers::pi);
      return Expression::variable(ident);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expression parse_number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    std::string buf(begin, end);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(buf, &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ += used;
    return Expression::constant(v);
  }

  static std::optional<UnaryOp> function(const std::string& name) {
    if (name == "sin") return UnaryOp::Sin;
    if (name == "cos") return UnaryOp::Cos;
    if (name == "asin" || name == "arcsin") return UnaryOp::Arcsin;
    if (name == "acos" || name == "arccos") return UnaryOp::Arccos;
    if (name == "abs") return UnaryOp::Abs;
    if (name == "exp") return UnaryOp::Exp;
    if (name == "ln") return UnaryOp::Ln;
    return std::nullopt;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view text) { return ExprParser(text).parse(); }

}  // namespace fasim
