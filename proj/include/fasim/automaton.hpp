#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fasim/expr.hpp"

namespace fasim {

enum class Relation { LessEqual, GreaterEqual, Equal };

const char* to_string(Relation r);

// lhs ⋈ rhs with a constant right-hand side.
struct Comparison {
  Expression lhs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;

  // lhs - rhs at `env`.
  double residual(const Environment& env) const { return evaluate(lhs, env) - rhs; }
  std::string to_string() const;
};

// Conjunction of comparisons. Disjunction is modelled with parallel edges.
struct Predicate {
  std::vector<Comparison> comparisons;

  std::string to_string() const;
};

struct Location {
  std::string id;
  std::map<std::string, Expression> flows;    // x' = f(x)
  std::map<std::string, Expression> updates;  // y = h(x), recomputed after every step
  // Absent: the location invariant is the negation of its outgoing guards.
  std::optional<Predicate> invariant;

  bool is_flow_variable(std::string_view v) const { return flows.contains(std::string(v)); }
  bool is_update_variable(std::string_view v) const { return updates.contains(std::string(v)); }
};

struct Edge {
  std::string source;
  std::string target;
  Predicate guard;
  std::map<std::string, Expression> reset;  // missing entries are identity
};

struct InitialState {
  std::string location;
  Environment values;
};

struct HybridAutomaton {
  std::vector<std::string> variables;
  std::vector<Location> locations;
  std::vector<Edge> edges;
  std::vector<InitialState> initial;  // a valid automaton has exactly one

  std::optional<std::size_t> location_index(std::string_view id) const;
  const Location& location(std::string_view id) const;  // throws Error(Precondition)
  std::vector<std::size_t> outgoing(std::string_view id) const;
  // "L1->L2", with "#k" appended for the k-th parallel edge (k >= 2).
  std::string edge_name(std::size_t edge) const;
  // Environment over `variables`, zero-filled.
  Environment blank_environment() const { return Environment(variables); }
};

enum class DiagnosticKind {
  NoInitialLocation,
  MultipleInitialLocations,
  UnknownLocation,
  DuplicateLocation,
  DuplicateVariable,
  UnboundVariable,
  MissingInitialValue,
  VariableNotPartitioned,
  UpdateDependsOnUpdate,
  InvalidExponent,
  EmptyPredicate,
  NonFiniteThreshold,
  GuardInvariantOverlap,
};

const char* to_string(DiagnosticKind k);

struct Diagnostic {
  DiagnosticKind kind;
  std::string subject;  // variable, location or edge the diagnostic is about
  std::string message;

  bool operator==(const Diagnostic& o) const { return kind == o.kind && subject == o.subject; }
};

// Structural and point-sampled semantic checks. Empty result means valid.
std::vector<Diagnostic> validate(const HybridAutomaton& ha, double eq_tol = 1e-6);

// Comparison with a tolerance band: == holds iff |lhs - rhs| <= eq_tol,
// <= holds iff lhs <= rhs + eq_tol, >= iff lhs >= rhs - eq_tol.
bool evaluate_comparison(const Comparison& c, const Environment& env, double eq_tol);
bool evaluate_guard(const Predicate& p, const Environment& env, double eq_tol);

// Simultaneous assignment: every reset expression reads the pre-switch env.
Environment apply_reset(const Edge& edge, const Environment& env);

// Recomputes every update variable of `loc` from the flow variables in env.
void apply_updates(const Location& loc, Environment& env);

}  // namespace fasim
