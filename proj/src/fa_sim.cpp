#include "fasim/fa_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "fasim/error.hpp"

namespace fasim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = kPi / 2;
constexpr double kTwoPi = 2 * kPi;
constexpr double kPoleTol = 1e-9;   // |cos θ| below this is treated as a pole
constexpr double kSinClamp = 1e-9;  // slack for sin θ leaving [-1, 1] by rounding

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Signed difference a - b folded into (-π, π].
double angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  return d == -kPi ? kPi : d;
}

// Angular distance from theta to the next pole (π/2 or 3π/2) moving in
// direction dir; a full half-turn when theta sits on a pole.
double distance_to_pole(double theta, double dir) {
  const double u = wrap_angle(theta);
  const double d = dir > 0 ? std::fmod(kHalfPi - u + kTwoPi, kPi) : std::fmod(u - kHalfPi + kTwoPi, kPi);
  return d > 0 ? d : kPi;
}

std::string describe(const SimState& s, const FrequencyAutomaton& fa) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << s.time << " in " << fa.ha.locations[s.location].id << " {";
  for (std::size_t i = 0; i < s.env.size(); ++i) os << (i ? ", " : "") << s.env.names()[i] << '=' << s.env[i];
  os << '}';
  return os.str();
}

struct FlowView {
  const Location& loc;
  const FaLocation& fl;

  FlowView(const FrequencyAutomaton& fa, std::size_t location)
      : loc(fa.ha.locations.at(location)), fl(fa.locations.at(location)) {}

  double rate(const SimState& s, std::size_t i) const {
    return evaluate(loc.flows.at(fl.flow_variables[i]), s.env) / s.angles[i].max_range;
  }
};

// Time for the angle to move by delta at normalized rate `rate`.
double step_time(bool constant, double theta, double delta, double rate) {
  if (constant) return (std::sin(theta + delta) - std::sin(theta)) / rate;
  return delta * std::cos(theta) / rate;
}

// New (unwrapped, near theta) angle after dt.
double step_theta(bool constant, double theta, double rate, double dt) {
  if (rate == 0.0) return theta;
  if (constant) {
    double s = std::sin(theta) + rate * dt;
    if (std::abs(s) > 1.0 + kSinClamp) {
      throw Error(ErrorCode::CosineSingularity, "constant-slope step leaves the unit circle");
    }
    s = std::clamp(s, -1.0, 1.0);
    const double a = std::asin(s);
    const double next = std::cos(theta) >= 0 ? a : kPi - a;
    return next + kTwoPi * std::round((theta - next) / kTwoPi);
  }
  const double c = std::cos(theta);
  if (std::abs(c) < kPoleTol) return theta;
  double next = theta + rate / c * dt;
  const double dir = sgn(next - theta);
  const double limit = distance_to_pole(theta, dir);
  if (std::abs(next - theta) > limit) next = theta + dir * limit;
  return next;
}

void set_angles(const FrequencyAutomaton& fa, SimState& s, const std::vector<double>& thetas) {
  const Location& loc = fa.ha.locations[s.location];
  for (std::size_t i = 0; i < s.angles.size(); ++i) {
    auto& a = s.angles[i];
    a.theta = wrap_angle(thetas[i]);
    s.env.set(a.variable, a.entry_value + a.max_range * std::sin(a.theta));
  }
  apply_updates(loc, s.env);
}

std::vector<double> current_thetas(const SimState& s) {
  std::vector<double> out;
  for (const auto& a : s.angles) out.push_back(a.theta);
  return out;
}

std::vector<std::size_t> enabled_edges(const FrequencyAutomaton& fa, const SimState& s, double eq_tol) {
  std::vector<std::size_t> out;
  for (const auto& plan : fa.locations[s.location].outgoing) {
    if (evaluate_guard(fa.ha.edges[plan.edge].guard, s.env, eq_tol)) out.push_back(plan.edge);
  }
  return out;
}

double min_abs_residual(const FrequencyAutomaton& fa, const SimState& s, const std::vector<std::size_t>& edges) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e : edges) {
    for (const auto& c : fa.ha.edges[e].guard.comparisons) best = std::min(best, std::abs(c.residual(s.env)));
  }
  return best;
}

void rebuild_targets(const FrequencyAutomaton& fa, SimState& s, std::size_t i) {
  const FlowView view(fa, s.location);
  const auto& name = view.fl.flow_variables[i];
  std::erase_if(s.targets, [&](const GuardTarget& t) { return t.variable == name; });
  NormalizationParams norm{name, s.angles[i].entry_value, s.angles[i].max_range};
  const double dir = evaluate(view.loc.flows.at(name), s.env) < 0 ? -1.0 : 1.0;
  for (const auto& plan : view.fl.outgoing) {
    if (!plan.invertible || plan.invertible->variable != name) continue;
    try {
      s.targets.push_back(make_guard_target(plan.edge, *plan.invertible, norm, dir));
    } catch (const Error&) {
      // level outside the reachable set of the wrapper
    }
  }
}

// Variables without a reachable target (unguarded ones, those of
// residual-tracked guards, those moving away from every target, and those
// parked on a pole) restart their angle at the current value.
void renormalize(const FrequencyAutomaton& fa, SimState& s, const SimConfig& cfg) {
  const FlowView view(fa, s.location);
  for (std::size_t i = 0; i < s.angles.size(); ++i) {
    auto& a = s.angles[i];
    bool keep = false;
    if (std::abs(std::cos(a.theta)) >= kPoleTol) {
      for (const auto& t : s.targets) {
        if (t.variable != a.variable) continue;
        try {
          if (compute_delta(fa, s, t, cfg).reachable) keep = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Precondition) throw;
          keep = true;
        }
      }
    }
    if (keep) continue;
    const auto norm = compute_normalization(fa.ha, view.loc, a.variable, s.env);
    a.entry_value = norm.entry_value;
    a.max_range = norm.max_range;
    a.theta = 0.0;
    rebuild_targets(fa, s, i);
  }
}

void record(Trace& trace, const FrequencyAutomaton& fa, const SimState& s, StepKind kind) {
  TraceSample sample;
  sample.time = s.time;
  sample.location = fa.ha.locations[s.location].id;
  sample.kind = kind;
  sample.values.assign(s.env.values().begin(), s.env.values().end());
  for (const auto& a : s.angles) {
    sample.angular.push_back({a.variable, a.entry_value, a.max_range, a.theta, std::sin(a.theta)});
  }
  trace.samples.push_back(std::move(sample));
}

bool is_halted(const FrequencyAutomaton& fa, std::size_t location) {
  if (!fa.locations[location].outgoing.empty()) return false;
  for (const auto& [v, f] : fa.ha.locations[location].flows) {
    auto c = is_constant(f);
    if (!c || *c != 0.0) return false;
  }
  return true;
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(t_max > 0) || !std::isfinite(t_max)) fail("t_max must be positive and finite");
  if (!(max_angle > 0 && max_angle < kPi)) fail("max_angle must lie in (0, pi)");
  if (!(error_bound > 0)) fail("error_bound must be positive");
  if (!(eq_tol >= 0)) fail("eq_tol must be non-negative");
  if (max_steps == 0) fail("max_steps must be positive");
  if (!(min_dt > 0)) fail("min_dt must be positive");
}

SimState enter_location(const FrequencyAutomaton& fa, std::size_t location, Environment env, double time) {
  SimState s;
  s.time = time;
  s.location = location;
  s.env = fa.ha.blank_environment();
  for (std::size_t i = 0; i < env.size(); ++i) s.env.set(env.names()[i], env[i]);
  apply_updates(fa.ha.locations[location], s.env);

  const LocationInstance inst = fa.instantiate(location, s.env);
  for (const auto& n : inst.normalization) s.angles.push_back({n.variable, n.entry_value, n.max_range, 0.0});
  s.targets = inst.targets;
  return s;
}

std::optional<std::size_t> guard_enabled(const FrequencyAutomaton& fa, const SimState& state, double eq_tol,
                                         std::mt19937_64& rng) {
  const auto edges = enabled_edges(fa, state, eq_tol);
  if (edges.empty()) return std::nullopt;
  if (edges.size() == 1) return edges.front();
  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  return edges[pick(rng)];
}

DeltaResult compute_delta(const FrequencyAutomaton& fa, const SimState& state, const GuardTarget& target,
                          const SimConfig& cfg) {
  const FlowView view(fa, state.location);
  DeltaResult out;
  const auto it = std::find(view.fl.flow_variables.begin(), view.fl.flow_variables.end(), target.variable);
  out.variable = static_cast<std::size_t>(it - view.fl.flow_variables.begin());
  const double theta = state.angles[out.variable].theta;
  const double rate = view.rate(state, out.variable);
  const double c = std::cos(theta);
  if (rate == 0.0 || std::abs(c) < kPoleTol) return out;

  const double dir = sgn(rate) * sgn(c);
  double best = std::numeric_limits<double>::infinity();
  for (double cand : target.candidate_angles) {
    const double plus = wrap_angle(cand - theta);
    if (plus == 0.0) {
      throw Error(ErrorCode::Precondition, "variable '" + target.variable + "' already sits on its guard target");
    }
    const double delta = dir > 0 ? plus : plus - kTwoPi;
    if (std::abs(delta) < std::abs(best)) best = delta;
  }
  if (std::abs(best) > distance_to_pole(theta, dir) + 1e-12) return out;

  out.reachable = true;
  out.to_target = best;
  out.delta_theta = best;
  if (std::abs(best) > cfg.max_angle) {
    out.delta_theta = dir * cfg.max_angle;
    out.capped = true;
  }
  const bool constant = view.fl.constant_slope[out.variable];
  out.dt = step_time(constant, theta, out.delta_theta, rate);
  return out;
}

IntraResult execute_intra(const FrequencyAutomaton& fa, const SimState& state, double dt) {
  const FlowView view(fa, state.location);
  const std::size_t n = state.angles.size();
  std::vector<double> rate0(n), full(n), half(n), two(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = state.angles[i].theta;
    const bool constant = view.fl.constant_slope[i];
    rate0[i] = view.rate(state, i);
    full[i] = step_theta(constant, theta, rate0[i], dt);
    half[i] = step_theta(constant, theta, rate0[i], dt / 2);
  }

  SimState mid = state;
  set_angles(fa, mid, half);
  IntraResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = state.angles[i].theta;
    if (view.fl.constant_slope[i]) {
      two[i] = full[i];
      continue;
    }
    two[i] = step_theta(false, half[i], view.rate(mid, i), dt / 2);
    out.error = std::max(out.error, std::abs(std::sin(full[i]) - std::sin(two[i])));
    // Richardson combination of the one- and two-step results, kept on the
    // near side of the next pole.
    double next = 2 * two[i] - full[i];
    const double dir = sgn(next - theta);
    const double limit = distance_to_pole(theta, dir);
    if (std::abs(next - theta) > limit) next = theta + dir * limit;
    two[i] = next;
  }

  out.state = state;
  out.state.time = state.time + dt;
  set_angles(fa, out.state, two);
  return out;
}

RunResult simulate(const FrequencyAutomaton& fa, const SimConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  Trace& trace = result.trace;
  RunReport& report = result.report;
  trace.variables = fa.ha.variables;

  std::mt19937_64 rng(cfg.seed);
  const InitialState& init = fa.ha.initial.front();
  SimState s = enter_location(fa, *fa.ha.location_index(init.location), init.values, 0.0);
  record(trace, fa, s, StepKind::Init);

  const double inv_tol = std::max(cfg.eq_tol, cfg.error_bound);
  std::size_t iterations = 0;
  for (;;) {
    if (++iterations > cfg.max_steps) {
      report.termination = Termination::MaxSteps;
      report.diagnostics.push_back("stopped after max_steps at " + describe(s, fa));
      break;
    }

    if (auto e = guard_enabled(fa, s, cfg.eq_tol, rng)) {
      const Edge& edge = fa.ha.edges[*e];
      const Environment pre = s.env;
      s = enter_location(fa, *fa.ha.location_index(edge.target), apply_reset(edge, pre), s.time);
      trace.switches.push_back({s.time, *e, fa.ha.edge_name(*e), pre, s.env});
      record(trace, fa, s, StepKind::Switch);
      ++report.switch_count;
      continue;
    }

    const double remaining = cfg.t_max - s.time;
    if (remaining <= cfg.min_dt) break;

    renormalize(fa, s, cfg);
    const FlowView view(fa, s.location);

    // Step bound: the angular cap on every moving variable, and the
    // uncapped steps that land a variable on a guard target.
    double step = remaining;
    for (std::size_t i = 0; i < s.angles.size(); ++i) {
      const double rate = view.rate(s, i);
      if (rate == 0.0) continue;
      const double theta = s.angles[i].theta;
      const double dir = sgn(rate) * sgn(std::cos(theta));
      const double cap = std::min(cfg.max_angle, distance_to_pole(theta, dir));
      step = std::min(step, step_time(view.fl.constant_slope[i], theta, dir * cap, rate));
    }
    std::vector<std::pair<std::size_t, DeltaResult>> reachable;
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      const DeltaResult d = compute_delta(fa, s, s.targets[k], cfg);
      if (!d.reachable) continue;
      reachable.emplace_back(k, d);
      if (!d.capped) step = std::min(step, d.dt);
    }

    IntraResult r = execute_intra(fa, s, step);
    bool halved = false;
    while (r.error > cfg.error_bound) {
      step /= 2;
      halved = true;
      if (step < cfg.min_dt) {
        throw Error(ErrorCode::StepUnderflow, "step size fell below min_dt at " + describe(s, fa));
      }
      r = execute_intra(fa, s, step);
    }
    if (!halved && step == remaining) r.state.time = cfg.t_max;

    // Land on targets whose step was taken unchanged; never let a governing
    // variable run past its target.
    std::vector<std::size_t> landed;
    std::vector<double> thetas = current_thetas(r.state);
    for (const auto& [k, d] : reachable) {
      const std::size_t i = d.variable;
      const double moved = angle_diff(r.state.angles[i].theta, s.angles[i].theta);
      const bool land = !halved && !d.capped && d.dt == step;
      const bool overshoot = sgn(d.to_target) * moved > std::abs(d.to_target);
      if (!land && !overshoot) continue;
      thetas[i] = s.angles[i].theta + d.to_target;
      landed.push_back(s.targets[k].edge);
    }
    if (!landed.empty()) set_angles(fa, r.state, thetas);

    // A guard enabled without a landing (residual-tracked, or reached
    // through another variable) is located by bisection on the step size.
    const auto enabled = enabled_edges(fa, r.state, cfg.eq_tol);
    const bool unexpected = std::any_of(enabled.begin(), enabled.end(), [&](std::size_t e) {
      return std::find(landed.begin(), landed.end(), e) == landed.end();
    });
    if (unexpected) {
      double lo = 0.0, hi = step;
      SimState hi_state = r.state;
      std::vector<std::size_t> hi_enabled = enabled;
      while (hi - lo > cfg.min_dt && min_abs_residual(fa, hi_state, hi_enabled) > cfg.error_bound) {
        const double mid = 0.5 * (lo + hi);
        SimState m = execute_intra(fa, s, mid).state;
        auto m_enabled = enabled_edges(fa, m, cfg.eq_tol);
        if (m_enabled.empty()) {
          lo = mid;
        } else {
          hi = mid;
          hi_state = std::move(m);
          hi_enabled = std::move(m_enabled);
        }
      }
      r.state = std::move(hi_state);
    }

    const Location& loc = fa.ha.locations[s.location];
    if (loc.invariant && !evaluate_guard(*loc.invariant, r.state.env, inv_tol)) {
      throw Error(ErrorCode::InvariantViolated,
                  "invariant of " + loc.id + " violated at " + describe(r.state, fa));
    }

    s = std::move(r.state);
    ++report.intra_steps;
    record(trace, fa, s, StepKind::Intra);
  }

  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.final_time = s.time;
  report.final_location = fa.ha.locations[s.location].id;
  report.final_env = s.env;
  if (report.termination != Termination::MaxSteps && is_halted(fa, s.location)) {
    report.termination = Termination::Halted;
  }
  return result;
}

}  // namespace fasim
