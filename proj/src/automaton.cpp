#include "fasim/automaton.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fasim/error.hpp"

namespace fasim {

const char* to_string(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::GreaterEqual: return ">=";
    case Relation::Equal: return "==";
  }
  return "?";
}

std::string Comparison::to_string() const {
  return lhs.to_string() + ' ' + fasim::to_string(relation) + ' ' + format_number(rhs);
}

std::string Predicate::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < comparisons.size(); ++i) {
    if (i) out += " && ";
    out += comparisons[i].to_string();
  }
  return out;
}

std::optional<std::size_t> HybridAutomaton::location_index(std::string_view id) const {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i].id == id) return i;
  }
  return std::nullopt;
}

const Location& HybridAutomaton::location(std::string_view id) const {
  if (auto i = location_index(id)) return locations[*i];
  throw Error(ErrorCode::Precondition, "unknown location '" + std::string(id) + "'");
}

std::vector<std::size_t> HybridAutomaton::outgoing(std::string_view id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].source == id) out.push_back(i);
  }
  return out;
}

std::string HybridAutomaton::edge_name(std::size_t edge) const {
  const Edge& e = edges.at(edge);
  int ordinal = 1;
  for (std::size_t i = 0; i < edge; ++i) {
    if (edges[i].source == e.source && edges[i].target == e.target) ++ordinal;
  }
  std::string name = e.source + "->" + e.target;
  if (ordinal > 1) name += "#" + std::to_string(ordinal);
  return name;
}

const char* to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::NoInitialLocation: return "NoInitialLocation";
    case DiagnosticKind::MultipleInitialLocations: return "MultipleInitialLocations";
    case DiagnosticKind::UnknownLocation: return "UnknownLocation";
    case DiagnosticKind::DuplicateLocation: return "DuplicateLocation";
    case DiagnosticKind::DuplicateVariable: return "DuplicateVariable";
    case DiagnosticKind::UnboundVariable: return "UnboundVariable";
    case DiagnosticKind::MissingInitialValue: return "MissingInitialValue";
    case DiagnosticKind::VariableNotPartitioned: return "VariableNotPartitioned";
    case DiagnosticKind::UpdateDependsOnUpdate: return "UpdateDependsOnUpdate";
    case DiagnosticKind::InvalidExponent: return "InvalidExponent";
    case DiagnosticKind::EmptyPredicate: return "EmptyPredicate";
    case DiagnosticKind::NonFiniteThreshold: return "NonFiniteThreshold";
    case DiagnosticKind::GuardInvariantOverlap: return "GuardInvariantOverlap";
  }
  return "?";
}

bool evaluate_comparison(const Comparison& c, const Environment& env, double eq_tol) {
  const double r = c.residual(env);
  switch (c.relation) {
    case Relation::LessEqual: return r <= eq_tol;
    case Relation::GreaterEqual: return r >= -eq_tol;
    case Relation::Equal: return std::abs(r) <= eq_tol;
  }
  return false;
}

bool evaluate_guard(const Predicate& p, const Environment& env, double eq_tol) {
  for (const auto& c : p.comparisons) {
    if (!evaluate_comparison(c, env, eq_tol)) return false;
  }
  return !p.comparisons.empty();
}

Environment apply_reset(const Edge& edge, const Environment& env) {
  Environment out = env;
  for (const auto& [var, expr] : edge.reset) out.set(var, evaluate(expr, env));
  return out;
}

void apply_updates(const Location& loc, Environment& env) {
  if (loc.updates.empty()) return;
  const Environment pre = env;
  for (const auto& [var, expr] : loc.updates) env.set(var, evaluate(expr, pre));
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Validator {
 public:
  Validator(const HybridAutomaton& ha, double eq_tol) : ha_(ha), eq_tol_(eq_tol) {}

  std::vector<Diagnostic> run() {
    check_variables();
    check_locations();
    check_initial();
    check_edges();
    if (out_.empty()) check_guard_invariant_overlap();
    return std::move(out_);
  }

 private:
  void add(DiagnosticKind k, std::string subject, std::string message) {
    Diagnostic d{k, std::move(subject), std::move(message)};
    if (std::find(out_.begin(), out_.end(), d) == out_.end()) out_.push_back(std::move(d));
  }

  void check_expr(const Expression& e, const std::string& where) {
    for (const auto& name : unbound_names(e, ha_.variables)) {
      add(DiagnosticKind::UnboundVariable, name, "undeclared variable '" + name + "' in " + where);
    }
    if (!has_valid_exponents(e)) {
      add(DiagnosticKind::InvalidExponent, where, "pow exponent in " + where + " is not a non-negative integer");
    }
  }

  void check_predicate(const Predicate& p, const std::string& where) {
    if (p.comparisons.empty()) add(DiagnosticKind::EmptyPredicate, where, where + " has no comparisons");
    for (const auto& c : p.comparisons) {
      check_expr(c.lhs, where);
      if (!std::isfinite(c.rhs)) add(DiagnosticKind::NonFiniteThreshold, where, where + " threshold is not finite");
    }
  }

  void check_variables() {
    std::set<std::string> seen;
    for (const auto& v : ha_.variables) {
      if (!seen.insert(v).second) add(DiagnosticKind::DuplicateVariable, v, "variable '" + v + "' declared twice");
    }
  }

  void check_locations() {
    std::set<std::string> seen;
    for (const auto& loc : ha_.locations) {
      if (!seen.insert(loc.id).second) {
        add(DiagnosticKind::DuplicateLocation, loc.id, "location '" + loc.id + "' declared twice");
      }
      for (const auto& v : ha_.variables) {
        const int governed = int(loc.flows.contains(v)) + int(loc.updates.contains(v));
        if (governed != 1) {
          add(DiagnosticKind::VariableNotPartitioned, v,
              "variable '" + v + "' must have exactly one flow or update in location '" + loc.id + "'");
        }
      }
      for (const auto& [v, e] : loc.flows) {
        if (std::find(ha_.variables.begin(), ha_.variables.end(), v) == ha_.variables.end()) {
          add(DiagnosticKind::UnboundVariable, v, "flow for undeclared variable '" + v + "'");
        }
        check_expr(e, "flow " + v + "' in " + loc.id);
      }
      for (const auto& [v, e] : loc.updates) {
        if (std::find(ha_.variables.begin(), ha_.variables.end(), v) == ha_.variables.end()) {
          add(DiagnosticKind::UnboundVariable, v, "update for undeclared variable '" + v + "'");
        }
        check_expr(e, "update " + v + " in " + loc.id);
        for (const auto& dep : free_variables(e)) {
          if (loc.updates.contains(dep)) {
            add(DiagnosticKind::UpdateDependsOnUpdate, v,
                "update '" + v + "' in '" + loc.id + "' reads update variable '" + dep + "'");
          }
        }
      }
      if (loc.invariant) check_predicate(*loc.invariant, "invariant of " + loc.id);
    }
  }

  void check_initial() {
    if (ha_.initial.empty()) {
      add(DiagnosticKind::NoInitialLocation, "", "no initial location");
      return;
    }
    if (ha_.initial.size() > 1) {
      add(DiagnosticKind::MultipleInitialLocations, "", "more than one initial location");
    }
    for (const auto& init : ha_.initial) {
      if (!ha_.location_index(init.location)) {
        add(DiagnosticKind::UnknownLocation, init.location, "initial location '" + init.location + "' does not exist");
      }
      for (const auto& v : ha_.variables) {
        if (!init.values.contains(v)) {
          add(DiagnosticKind::MissingInitialValue, v, "no initial value for '" + v + "'");
        }
      }
      for (const auto& n : init.values.names()) {
        if (std::find(ha_.variables.begin(), ha_.variables.end(), n) == ha_.variables.end()) {
          add(DiagnosticKind::UnboundVariable, n, "initial value for undeclared variable '" + n + "'");
        }
      }
    }
  }

  void check_edges() {
    for (std::size_t i = 0; i < ha_.edges.size(); ++i) {
      const Edge& e = ha_.edges[i];
      const std::string name = e.source + "->" + e.target;
      if (!ha_.location_index(e.source)) add(DiagnosticKind::UnknownLocation, e.source, "edge " + name + " has unknown source");
      if (!ha_.location_index(e.target)) add(DiagnosticKind::UnknownLocation, e.target, "edge " + name + " has unknown target");
      check_predicate(e.guard, "guard of " + name);
      for (const auto& [v, r] : e.reset) {
        if (std::find(ha_.variables.begin(), ha_.variables.end(), v) == ha_.variables.end()) {
          add(DiagnosticKind::UnboundVariable, v, "reset of undeclared variable '" + v + "'");
        }
        check_expr(r, "reset of " + name);
      }
    }
  }

  // Point checks: the guard and an explicit invariant must not both hold at
  // the initial environment, nor just inside the boundary of a guard whose
  // left-hand side is a single variable.
  void check_guard_invariant_overlap() {
    const InitialState& init = ha_.initial.front();
    for (std::size_t i = 0; i < ha_.edges.size(); ++i) {
      const Edge& e = ha_.edges[i];
      const Location& loc = ha_.location(e.source);
      if (!loc.invariant) continue;
      const std::string name = ha_.edge_name(i);
      try {
        if (loc.id == init.location) {
          Environment env = init.values;
          apply_updates(loc, env);
          if (strictly_holds(e.guard, env) && strictly_holds(*loc.invariant, env)) {
            add(DiagnosticKind::GuardInvariantOverlap, name,
                "guard of " + name + " and invariant of " + loc.id + " both hold at the initial state");
          }
        }
        for (const auto& c : e.guard.comparisons) {
          if (!c.lhs.is_variable()) continue;
          Environment env = init.values;
          const double push = 10.0 * std::max(eq_tol_, 1e-9);
          double probe = c.rhs;
          if (c.relation == Relation::LessEqual) probe -= push;
          if (c.relation == Relation::GreaterEqual) probe += push;
          env.set(c.lhs.name(), probe);
          if (evaluate_guard(*loc.invariant, env, eq_tol_) &&
              evaluate_comparison(c, env, 0.0) &&
              invariant_mentions(*loc.invariant, c.lhs.name())) {
            add(DiagnosticKind::GuardInvariantOverlap, name,
                "invariant of " + loc.id + " still holds inside the guard of " + name);
          }
        }
      } catch (const Error&) {
        // Expressions that cannot be evaluated at the probe are skipped.
      }
    }
  }

  bool strictly_holds(const Predicate& p, const Environment& env) const {
    return evaluate_guard(p, env, -eq_tol_);
  }

  static bool invariant_mentions(const Predicate& p, const std::string& var) {
    for (const auto& c : p.comparisons) {
      if (free_variables(c.lhs).contains(var)) return true;
    }
    return false;
  }

  const HybridAutomaton& ha_;
  double eq_tol_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const HybridAutomaton& ha, double eq_tol) {
  return Validator(ha, eq_tol).run();
}

}  // namespace fasim
