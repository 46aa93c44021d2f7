#include "fasim/translate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fasim/error.hpp"

namespace fasim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sign_or_positive(double v) { return v < 0 ? -1.0 : 1.0; }

// First element of {base + 2πk} at or beyond `from` in direction `dir`.
double first_reached(double base, double from, double dir) {
  if (dir >= 0) return base + kTwoPi * std::ceil((from - base) / kTwoPi);
  return base + kTwoPi * std::floor((from - base) / kTwoPi);
}

double pick_first(double a, double b, double dir) { return dir >= 0 ? std::min(a, b) : std::max(a, b); }

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

std::optional<InvertibleGuard> invertible_form(const Comparison& c, const Location& loc) {
  Expression lhs = c.lhs;
  if (lhs.is_variable()) {
    if (auto it = loc.updates.find(lhs.name()); it != loc.updates.end()) lhs = it->second;
  }
  InvertibleGuard g;
  g.level = c.rhs;
  g.relation = c.relation;
  if (lhs.is_variable()) {
    g.wrapper = GuardWrapper::Identity;
  } else if (lhs.kind() == Expression::Kind::Unary &&
             (lhs.unary_op() == UnaryOp::Cos || lhs.unary_op() == UnaryOp::Sin) &&
             lhs.operand().is_variable()) {
    g.wrapper = lhs.unary_op() == UnaryOp::Cos ? GuardWrapper::Cos : GuardWrapper::Sin;
    lhs = lhs.operand();
  } else {
    return std::nullopt;
  }
  if (!loc.is_flow_variable(lhs.name())) return std::nullopt;
  g.variable = lhs.name();
  return g;
}

std::optional<InvertibleGuard> invertible_form(const Predicate& guard, const Location& loc) {
  if (guard.comparisons.size() != 1) return std::nullopt;
  return invertible_form(guard.comparisons.front(), loc);
}

double guard_boundary_value(const InvertibleGuard& g, double entry_value, double flow_sign) {
  switch (g.wrapper) {
    case GuardWrapper::Identity:
      return g.level;
    case GuardWrapper::Cos: {
      if (std::abs(g.level) > 1.0) {
        throw Error(ErrorCode::DomainError, "cos guard level outside [-1, 1] is never reached");
      }
      const double p = std::acos(g.level);
      return pick_first(first_reached(p, entry_value, flow_sign),
                        first_reached(-p, entry_value, flow_sign), flow_sign);
    }
    case GuardWrapper::Sin: {
      if (std::abs(g.level) > 1.0) {
        throw Error(ErrorCode::DomainError, "sin guard level outside [-1, 1] is never reached");
      }
      const double p = std::asin(g.level);
      return pick_first(first_reached(p, entry_value, flow_sign),
                        first_reached(std::numbers::pi - p, entry_value, flow_sign), flow_sign);
    }
  }
  return g.level;
}

double guard_boundary_value(const Comparison& c, const Location& loc, double entry_value,
                            double flow_sign) {
  auto g = invertible_form(c, loc);
  if (!g) {
    throw Error(ErrorCode::NotStaticallyInvertible,
                "guard '" + c.to_string() + "' is not a function of a single flow variable");
  }
  return guard_boundary_value(*g, entry_value, flow_sign);
}

namespace {

double flow_sign_at(const Location& loc, const std::string& var, const Environment& env) {
  return sign_or_positive(evaluate(loc.flows.at(var), env));
}

}  // namespace

NormalizationParams compute_normalization(const HybridAutomaton& ha, const Location& loc,
                                          const std::string& var, const Environment& entry_env) {
  Environment env = entry_env;
  apply_updates(loc, env);
  NormalizationParams p;
  p.variable = var;
  p.entry_value = env.get(var);
  const double dir = flow_sign_at(loc, var, env);

  bool guarded = false;
  double range = std::abs(p.entry_value);
  for (std::size_t e : ha.outgoing(loc.id)) {
    auto g = invertible_form(ha.edges[e].guard, loc);
    if (!g || g->variable != var) continue;
    double b = 0.0;
    try {
      b = guard_boundary_value(*g, p.entry_value, dir);
    } catch (const Error&) {
      continue;  // unreachable level; contributes no boundary
    }
    guarded = true;
    range = std::max({range, std::abs(b), std::abs(b - p.entry_value)});
  }
  if (!guarded) range = std::max(range, 1.0);
  p.max_range = range > 0 ? range : 1.0;
  return p;
}

GuardTarget make_guard_target(std::size_t edge, const InvertibleGuard& g,
                              const NormalizationParams& norm, double flow_sign) {
  GuardTarget t;
  t.edge = edge;
  t.variable = g.variable;
  t.relation = g.relation;
  t.target_value = guard_boundary_value(g, norm.entry_value, flow_sign);
  t.normalized_target = std::clamp((t.target_value - norm.entry_value) / norm.max_range, -1.0, 1.0);
  const double a = std::asin(t.normalized_target);
  const double first = wrap_angle(a);
  const double second = wrap_angle(std::numbers::pi - a);
  t.candidate_angles.push_back(first);
  if (std::abs(std::abs(t.normalized_target) - 1.0) > 0.0) t.candidate_angles.push_back(second);
  return t;
}

LocationInstance FrequencyAutomaton::instantiate(std::size_t location, const Environment& entry_env) const {
  const Location& loc = ha.locations.at(location);
  const FaLocation& fl = locations.at(location);
  Environment env = entry_env;
  apply_updates(loc, env);

  LocationInstance inst;
  inst.location = location;
  for (const auto& v : fl.flow_variables) inst.normalization.push_back(compute_normalization(ha, loc, v, env));

  for (const auto& plan : fl.outgoing) {
    if (!plan.invertible) continue;
    const auto it = std::find(fl.flow_variables.begin(), fl.flow_variables.end(), plan.invertible->variable);
    const auto& norm = inst.normalization[static_cast<std::size_t>(it - fl.flow_variables.begin())];
    try {
      inst.targets.push_back(make_guard_target(plan.edge, *plan.invertible, norm,
                                               flow_sign_at(loc, plan.invertible->variable, env)));
    } catch (const Error&) {
      // A level that can never be reached has no target.
    }
  }
  return inst;
}

FrequencyAutomaton convert_to_fa(const HybridAutomaton& ha) {
  if (auto diags = validate(ha); !diags.empty()) {
    std::string msg = "automaton is not valid:";
    for (const auto& d : diags) msg += "\n  " + std::string(to_string(d.kind)) + ": " + d.message;
    throw ModelError(ErrorCode::ValidationError, msg, 0, 0);
  }

  FrequencyAutomaton fa;
  fa.ha = ha;
  for (const Location& loc : ha.locations) {
    FaLocation fl;
    fl.id = loc.id;
    for (const auto& v : ha.variables) {
      if (auto it = loc.flows.find(v); it != loc.flows.end()) {
        fl.flow_variables.push_back(v);
        fl.constant_slope.push_back(is_constant(it->second).has_value());
      } else {
        fl.update_variables.push_back(v);
      }
    }
    for (std::size_t e : ha.outgoing(loc.id)) fl.outgoing.push_back({e, invertible_form(ha.edges[e].guard, loc)});
    fa.locations.push_back(std::move(fl));
  }

  const InitialState& init = ha.initial.front();
  fa.initial = fa.instantiate(*ha.location_index(init.location), init.values);
  return fa;
}

std::string dump_tables(const FrequencyAutomaton& fa) {
  std::ostringstream os;
  os.precision(9);
  os << std::fixed;
  const auto& init = fa.initial;
  for (std::size_t l = 0; l < fa.locations.size(); ++l) {
    const FaLocation& fl = fa.locations[l];
    const Location& loc = fa.ha.locations[l];
    os << "location " << fl.id << (l == init.location ? " (initial)" : "") << "\n";
    os << "  variable        slope      entry_value        max_range\n";
    for (std::size_t i = 0; i < fl.flow_variables.size(); ++i) {
      os << "  " << fl.flow_variables[i];
      os << std::string(std::max<int>(1, 16 - int(fl.flow_variables[i].size())), ' ');
      os << (fl.constant_slope[i] ? "const   " : "varying ");
      if (l == init.location) {
        os << "  " << init.normalization[i].entry_value << "  " << init.normalization[i].max_range;
      } else {
        os << "  (set on entry)";
      }
      os << "  d/dt = " << loc.flows.at(fl.flow_variables[i]).to_string() << "\n";
    }
    for (const auto& u : fl.update_variables) {
      os << "  " << u << " := " << loc.updates.at(u).to_string() << "\n";
    }
    for (const auto& plan : fl.outgoing) {
      const Edge& e = fa.ha.edges[plan.edge];
      os << "  edge " << fa.ha.edge_name(plan.edge) << "  guard " << e.guard.to_string() << "\n";
      if (plan.residual_tracked()) {
        os << "    residual-tracked\n";
        continue;
      }
      const GuardTarget* t = nullptr;
      if (l == init.location) {
        for (const auto& cand : init.targets) {
          if (cand.edge == plan.edge) t = &cand;
        }
      }
      if (!t) {
        os << "    variable " << plan.invertible->variable << ", target resolved on entry\n";
        continue;
      }
      os << "    variable " << t->variable << "  target " << t->target_value << "  normalized "
         << t->normalized_target << "  angles";
      for (double a : t->candidate_angles) os << ' ' << a;
      os << "  relation " << to_string(t->relation) << "\n";
    }
  }
  return os.str();
}

}  // namespace fasim
