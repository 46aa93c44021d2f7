// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fasim/error.hpp"
#include "fasim/fa_sim.hpp"
#include "fasim/metrics.hpp"
#include "fasim/model_file.hpp"
#include "fasim/ref_sim.hpp"
#include "fasim/translate.hpp"
#include "oracles.hpp"

using namespace fasim;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelFile builtin(const std::string& name) { return parse_model(*builtin_model_text(name)); }

RunResult fa_run(const ModelFile& m, double max_angle = kPi / 10, double error_bound = 1e-6) {
  SimConfig cfg;
  cfg.t_max = m.t_max;
  cfg.max_angle = max_angle;
  cfg.error_bound = error_bound;
  return simulate(convert_to_fa(m.ha), cfg);
}

RunResult ref_run(const ModelFile& m, double dt, bool naive = false) {
  RefConfig cfg;
  cfg.t_max = m.t_max;
  cfg.dt = dt;
  return naive ? simulate_naive(m.ha, cfg) : simulate_reference(m.ha, cfg);
}

const SwitchEvent* find_switch(const Trace& t, const std::string& edge) {
  for (const auto& s : t.switches) {
    if (s.edge_name == edge) return &s;
  }
  return nullptr;
}

Outcome steering_first_crossing() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = fa_run(builtin("steering_wheel"));
  const double wall = seconds_since(t0);
  const SwitchEvent* sw = find_switch(r.trace, "L1->L2");
  if (!sw) return {false, "no L1->L2 switch"};
  const double expected = oracle::Steering{}.first_switch();
  const double dt_err = std::abs(sw->time - expected);
  const double level_err = std::abs(std::cos(sw->pre.get("x")) + 0.99);
  return {dt_err <= 1e-3 && level_err <= 1e-6 && wall < 1.0,
          fmt("t=%.9f (closed form %.9f, |dt|=%.2e), |cos(x)+0.99|=%.2e, runtime %.3f s", sw->time, expected, dt_err,
              level_err, wall)};
}

Outcome step_efficiency() {
  const ModelFile m = builtin("steering_wheel");
  const RunResult fa = fa_run(m);
  const RunResult ref = ref_run(m, 0.001);
  const double ratio = static_cast<double>(fa.report.intra_steps) / static_cast<double>(ref.report.intra_steps);
  return {fa.report.intra_steps <= 100 && ratio <= 0.02,
          fmt("FA %zu intra steps, reference dt=0.001 %zu steps, ratio %.5f", fa.report.intra_steps,
              ref.report.intra_steps, ratio)};
}

Outcome accuracy() {
  bool ok = true;
  std::string detail;
  for (const auto& name : builtin_model_names()) {
    const ModelFile m = builtin(name);
    const RunResult fa = fa_run(m);
    const RunResult ref = ref_run(m, 1e-4);
    for (const auto& out : m.outputs) {
      const auto c = correlate(fa.trace, ref.trace, parse_expression(out), 0.01);
      ok = ok && c && *c >= 0.999;
      detail += fmt("%s %s=%.10f; ", name.c_str(), out.c_str(), c ? *c : std::nan(""));
    }
  }
  return {ok, detail};
}

Outcome equality_guard() {
  const ModelFile m = builtin("water_heating");
  const RunResult fa = fa_run(m);
  const SwitchEvent* sw = find_switch(fa.trace, "ON->OFF");
  if (!sw) return {false, "FA never fired ON->OFF"};
  const double expected = oracle::Water{}.off_switch();
  const double temp_err = std::abs(sw->pre.get("temp") - 100);
  const double t_err = std::abs(sw->time - expected);
  std::string naive_detail;
  bool naive_ok = true;
  for (double dt : {0.1, 0.01}) {
    const RunResult n = ref_run(m, dt, true);
    const bool fired = find_switch(n.trace, "ON->OFF") != nullptr;
    naive_ok = naive_ok && !fired;
    naive_detail += fmt(" naive dt=%g %s;", dt, fired ? "fired" : "never fired");
  }
  return {temp_err <= 1e-6 && t_err <= 1e-3 && naive_ok,
          fmt("t=%.9f (closed form %.9f, |dt|=%.2e), |temp-100|=%.2e;", sw->time, expected, t_err, temp_err) +
              naive_detail};
}

Outcome robot_stop() {
  const ModelFile m = builtin("robot");
  const RunResult fa = fa_run(m);
  if (fa.trace.switches.empty()) return {false, "no switch"};
  const SwitchEvent& sw = fa.trace.switches.back();
  const Predicate& guard = m.ha.edges[sw.edge].guard;
  const double gap = std::abs(guard.comparisons[0].residual(sw.pre));
  std::size_t penetrating = 0;
  for (std::size_t i = 0; i < fa.trace.samples.size(); ++i) {
    const auto& s = fa.trace.samples[i];
    if (s.time >= sw.time) break;
    if (evaluate_guard(guard, fa.trace.environment(i), 0.0)) ++penetrating;
  }
  const RunResult ref = ref_run(m, 1e-4);
  const double ref_t = ref.trace.switches.empty() ? std::nan("") : ref.trace.switches.back().time;
  return {gap <= 1e-3 && penetrating == 0,
          fmt("t=%.9f (reference %.9f), |y-(12x^2-54x+65)|=%.2e, samples inside guard before switch: %zu", sw.time,
              ref_t, gap, penetrating)};
}

Outcome angular_identity() {
  double worst_value = 0, worst_normalized = 0;
  std::size_t samples = 0, runs = 0;
  for (const auto& name : builtin_model_names()) {
    const ModelFile m = builtin(name);
    for (double angle : {kPi / 10, kPi / 50, kPi / 100, kPi / 150}) {
      for (double eps : {1e-6, 1e-4, 1e-2}) {
        const RunResult r = fa_run(m, angle, eps);
        ++runs;
        for (const auto& s : r.trace.samples) {
          ++samples;
          for (const auto& a : s.angular) {
            const auto idx = static_cast<std::size_t>(
                std::find(r.trace.variables.begin(), r.trace.variables.end(), a.variable) - r.trace.variables.begin());
            const double x = s.values[idx];
            worst_value = std::max(worst_value, std::abs(x - (a.entry_value + a.max_range * std::sin(a.theta))));
            worst_normalized =
                std::max(worst_normalized, std::abs((x - a.entry_value) / a.max_range - std::sin(a.theta)));
          }
        }
      }
    }
  }
  return {worst_value <= 1e-9 && worst_normalized <= 1e-12,
          fmt("%zu runs, %zu samples, max value error %.2e, max normalized error %.2e", runs, samples, worst_value,
              worst_normalized)};
}

// One variable bouncing between two thresholds with constant slopes.
struct RandomSwitching {
  HybridAutomaton ha;
  std::vector<double> switch_times;
  double t_max = 0;
};

RandomSwitching random_switching(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> start(-10, 10), slope(0.05, 5), dist(0.1, 10), unit(0, 1);
  const double x0 = start(rng);
  const double dir = unit(rng) < 0.5 ? 1.0 : -1.0;
  const double s1 = dir * slope(rng), s2 = -dir * slope(rng);
  const double d1 = dist(rng), d2 = dist(rng);
  const double q1 = x0 + dir * d1, q2 = q1 - dir * d2;
  const auto rel = [&](double d) {
    if (unit(rng) < 0.3) return Relation::Equal;
    return d > 0 ? Relation::GreaterEqual : Relation::LessEqual;
  };
  const auto x = Expression::variable("x");
  RandomSwitching out;
  out.ha.variables = {"x"};
  out.ha.locations = {Location{"A", {{"x", Expression::constant(s1)}}, {}, std::nullopt},
                      Location{"B", {{"x", Expression::constant(s2)}}, {}, std::nullopt}};
  out.ha.edges = {Edge{"A", "B", Predicate{{Comparison{x, rel(dir), q1}}}, {}},
                  Edge{"B", "A", Predicate{{Comparison{x, rel(-dir), q2}}}, {}}};
  out.ha.initial = {InitialState{"A", Environment({"x"}, {x0})}};
  double t = d1 / std::abs(s1);
  out.switch_times.push_back(t);
  t += d2 / std::abs(s2);
  out.switch_times.push_back(t);
  t += d2 / std::abs(s1);
  out.switch_times.push_back(t);
  out.t_max = t + 0.5 * d2 / std::abs(s2);
  return out;
}

Outcome trace_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240501);
  int failures = 0;
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const RandomSwitching h = random_switching(rng);
    SimConfig cfg;
    cfg.t_max = h.t_max;
    try {
      const RunResult r = simulate(convert_to_fa(h.ha), cfg);
      if (r.trace.switches.size() != h.switch_times.size()) {
        ++failures;
        continue;
      }
      for (std::size_t k = 0; k < h.switch_times.size(); ++k) {
        worst = std::max(worst, std::abs(r.trace.switches[k].time - h.switch_times[k]));
      }
    } catch (const Error&) {
      ++failures;
    }
  }
  const double wall = seconds_since(t0);
  return {failures == 0 && worst <= 1e-6 && wall < 10.0,
          fmt("200 automata, %d mismatched, max switch-time error %.2e, runtime %.3f s", failures, worst, wall)};
}

Outcome rk4_order() {
  const Location heating{"ON",
                         {{"temp", Expression::constant(0.075) *
                                       (Expression::constant(150) - Expression::variable("temp"))}},
                         {},
                         std::nullopt};
  const auto error_at = [&](double dt) {
    Environment env({"temp"}, {30.0});
    const int n = static_cast<int>(std::lround(10.0 / dt));
    for (int i = 0; i < n; ++i) env = rk4_step(heating, env, dt);
    return std::abs(env.get("temp") - (150 - 120 * std::exp(-0.75)));
  };
  const double e1 = error_at(0.4), e2 = error_at(0.2), e3 = error_at(0.1);
  const double r1 = e1 / e2, r2 = e2 / e3;
  const bool ok = r1 >= 12 && r1 <= 20 && r2 >= 12 && r2 <= 20;
  return {ok, fmt("errors %.3e, %.3e, %.3e at dt 0.4, 0.2, 0.1; ratios %.2f, %.2f", e1, e2, e3, r1, r2)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"steering-wheel first level crossing", steering_first_crossing},
      {"step-count efficiency", step_efficiency},
      {"accuracy against the reference", accuracy},
      {"equality-guard detection", equality_guard},
      {"robot obstacle stop", robot_stop},
      {"unit-circle identity", angular_identity},
      {"trace equivalence on random switching automata", trace_equivalence},
      {"RK4 order", rk4_order},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
