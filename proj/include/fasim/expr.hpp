#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fasim {

// Valuation of named continuous variables. Names are shared between copies,
// so copying an environment only copies the values.
class Environment {
 public:
  Environment() : names_(std::make_shared<std::vector<std::string>>()) {}
  explicit Environment(std::vector<std::string> names);
  Environment(std::vector<std::string> names, std::vector<double> values);

  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Throws Error(UnboundVariable) when the name is absent.
  double get(std::string_view name) const;
  // Adds the name when absent.
  void set(std::string_view name, double value);

  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& names() const { return *names_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool operator==(const Environment& other) const;

 private:
  std::shared_ptr<std::vector<std::string>> names_;
  std::vector<double> values_;
};

enum class UnaryOp { Neg, Sin, Cos, Arcsin, Arccos, Abs, Exp, Ln };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

const char* to_string(UnaryOp op);

// Immutable expression tree. Cheap to copy; nodes are shared.
class Expression {
 public:
  enum class Kind { Constant, Variable, Unary, Binary };

  Expression();  // constant 0

  static Expression constant(double value);
  static Expression variable(std::string name);
  static Expression unary(UnaryOp op, Expression operand);
  static Expression binary(BinaryOp op, Expression lhs, Expression rhs);

  Kind kind() const;
  double value() const;              // Constant
  const std::string& name() const;   // Variable
  UnaryOp unary_op() const;          // Unary
  BinaryOp binary_op() const;        // Binary
  const Expression& operand() const; // Unary
  const Expression& lhs() const;     // Binary
  const Expression& rhs() const;     // Binary

  bool is_variable() const { return kind() == Kind::Variable; }

  // Replaces every reference to `name` by `replacement`.
  Expression substitute(std::string_view name, const Expression& replacement) const;

  std::string to_string() const;

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, int exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);

// Shortest decimal text that reads back as the same double.
std::string format_number(double v);

// Inverse-trig arguments within this distance outside [-1, 1] are clamped.
inline constexpr double kInverseTrigClamp = 1e-12;

// Throws Error with UnboundVariable, DomainError or DivideByZero.
double evaluate(const Expression& expr, const Environment& env);

std::set<std::string> free_variables(const Expression& expr);

// Value of an expression with no free variables; nullopt otherwise.
std::optional<double> is_constant(const Expression& expr);

// Names in `expr` that are not in `declared`.
std::vector<std::string> unbound_names(const Expression& expr,
                                       std::span<const std::string> declared);

// pow is only defined for constant non-negative integer exponents.
bool has_valid_exponents(const Expression& expr);

// Infix parser. Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | asin | arcsin | acos | arccos | abs | exp | ln
// Throws ModelError(ParseError) with a column relative to `text`.
Expression parse_expression(std::string_view text);

}  // namespace fasim
