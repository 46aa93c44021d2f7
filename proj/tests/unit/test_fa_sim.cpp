#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fasim/fa_sim.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fasim;

namespace {

constexpr double kPi = std::numbers::pi;

Expression var(const char* n) { return Expression::variable(n); }
Expression num(double v) { return Expression::constant(v); }

SimConfig config(double t_max) {
  SimConfig cfg;
  cfg.t_max = t_max;
  return cfg;
}

RunResult run_builtin(const std::string& name, SimConfig cfg) {
  const auto model = test::builtin(name);
  cfg.t_max = model.t_max;
  return simulate(convert_to_fa(model.ha), cfg);
}

std::size_t index_of(const Trace& t, const std::string& v) {
  return static_cast<std::size_t>(std::find(t.variables.begin(), t.variables.end(), v) - t.variables.begin());
}

// Every recorded flow variable equals entry + max_range * sin(theta).
double worst_angular_identity(const Trace& t) {
  double worst = 0;
  for (const auto& s : t.samples) {
    for (const auto& a : s.angular) {
      const double x = s.values[index_of(t, a.variable)];
      worst = std::max(worst, std::abs(x - (a.entry_value + a.max_range * std::sin(a.theta))));
    }
  }
  return worst;
}

HybridAutomaton single_location(Expression flow, std::optional<Predicate> invariant = std::nullopt) {
  HybridAutomaton ha;
  ha.variables = {"x"};
  ha.locations = {Location{"A", {{"x", std::move(flow)}}, {}, std::move(invariant)}};
  ha.initial = {InitialState{"A", Environment({"x"}, {1.0})}};
  return ha;
}

// Two edges out of A that are both enabled at the start.
HybridAutomaton forked() {
  HybridAutomaton ha;
  ha.variables = {"x"};
  ha.locations = {Location{"A", {{"x", num(1)}}, {}, std::nullopt}, Location{"B", {{"x", num(0)}}, {}, std::nullopt},
                  Location{"C", {{"x", num(0)}}, {}, std::nullopt}};
  const Predicate g{{Comparison{var("x"), Relation::GreaterEqual, 0}}};
  ha.edges = {Edge{"A", "B", g, {}}, Edge{"A", "C", g, {}}};
  ha.initial = {InitialState{"A", Environment({"x"}, {0.0})}};
  return ha;
}

}  // namespace

TEST_SUITE("fa-sim") {
  TEST_CASE("steering wheel switches where cos(x) reaches -0.99") {
    const RunResult r = run_builtin("steering_wheel", SimConfig{});
    const oracle::Steering o;
    REQUIRE(r.trace.switches.size() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(r.trace.switches[k].time == doctest::Approx(o.switch_time(k)).epsilon(1e-9));
    }
    const auto& first = r.trace.switches[0];
    CHECK(first.edge_name == "L1->L2");
    CHECK(first.pre.get("x") == doctest::Approx(3.000053).epsilon(1e-6));
    CHECK(std::abs(std::cos(first.pre.get("x")) + 0.99) <= 1e-6);
    CHECK(std::abs(first.time - 14.29) < 0.01);
    CHECK(r.report.intra_steps <= 100);
    CHECK(r.report.final_time == 50.0);
    CHECK(r.report.termination == Termination::TimeLimit);
  }

  TEST_CASE("steering wheel trajectory matches the closed form") {
    const RunResult r = run_builtin("steering_wheel", SimConfig{});
    const oracle::Steering o;
    for (const auto& s : r.trace.samples) {
      CHECK(s.values[0] == doctest::Approx(o.x_at(s.time)).epsilon(1e-8));
      CHECK(s.values[1] == doctest::Approx(std::cos(s.values[0])).epsilon(1e-12));
    }
  }

  TEST_CASE("water heating fires its equality guard") {
    const RunResult r = run_builtin("water_heating", SimConfig{});
    const oracle::Water o;
    REQUIRE(r.trace.switches.size() == 2);
    CHECK(r.trace.switches[0].edge_name == "S0->ON");
    CHECK(r.trace.switches[0].time == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.trace.switches[1].edge_name == "ON->OFF");
    CHECK(std::abs(r.trace.switches[1].pre.get("temp") - 100) <= 1e-6);
    CHECK(std::abs(r.trace.switches[1].time - o.off_switch()) <= 1e-3);
    CHECK(r.report.final_location == "OFF");
    CHECK(r.report.termination == Termination::Halted);
  }

  TEST_CASE("robot stops on the parabola without crossing it") {
    const RunResult r = run_builtin("robot", SimConfig{});
    REQUIRE(r.trace.switches.size() == 1);
    const auto& sw = r.trace.switches[0];
    const double x = sw.pre.get("x"), y = sw.pre.get("y");
    CHECK(std::abs(y - (12 * x * x - 54 * x + 65)) <= 1e-3);
    const auto collision = oracle::Robot::collision(7.0);
    REQUIRE(collision);
    CHECK(std::abs(sw.time - *collision) <= 1e-3);
    for (const auto& s : r.trace.samples) {
      if (s.time >= sw.time) break;
      const double sx = s.values[0], sy = s.values[1];
      CHECK(sy - (12 * sx * sx - 54 * sx + 65) < 1e-6);
    }
  }

  TEST_CASE("zero flows take a single step to t_max") {
    HybridAutomaton ha = single_location(num(0));
    const RunResult r = simulate(convert_to_fa(ha), config(10));
    CHECK(r.report.intra_steps == 1);
    CHECK(r.trace.samples.back().time == 10.0);
    CHECK(r.trace.samples.back().values[0] == 1.0);
    CHECK(r.report.termination == Termination::Halted);
  }

  TEST_CASE("compute_delta caps the first steering step") {
    const auto fa = test::builtin_fa("steering_wheel");
    const SimState s = enter_location(fa, 0, fa.ha.initial[0].values, 0.0);
    const DeltaResult d = compute_delta(fa, s, s.targets[0], SimConfig{});
    CHECK(d.reachable);
    CHECK(d.capped);
    CHECK(d.delta_theta == doctest::Approx(kPi / 10).epsilon(1e-15));
    const double range = oracle::arccos(-0.99);
    CHECK(d.dt == doctest::Approx(std::sin(kPi / 10) * range / 0.1).epsilon(1e-12));
    CHECK(d.dt == doctest::Approx(9.2707).epsilon(1e-5));
  }

  TEST_CASE("compute_delta lands exactly near a target") {
    const auto fa = test::builtin_fa("water_heating");
    SimState s = enter_location(fa, 0, fa.ha.initial[0].values, 0.0);
    REQUIRE(s.targets.size() == 1);
    s.angles[0].theta = kPi / 2 - 0.01;
    const DeltaResult d = compute_delta(fa, s, s.targets[0], SimConfig{});
    CHECK(d.reachable);
    CHECK_FALSE(d.capped);
    CHECK(d.delta_theta == doctest::Approx(0.01).epsilon(1e-12));

    // On the pole itself the variable cannot move towards the target.
    s.angles[0].theta = kPi / 2;
    CHECK_FALSE(compute_delta(fa, s, s.targets[0], SimConfig{}).reachable);

    const auto steering = test::builtin_fa("steering_wheel");
    SimState at = enter_location(steering, 0, steering.ha.initial[0].values, 0.0);
    at.angles[0].theta = at.targets[0].candidate_angles[0];
    CHECK_THROWS_CODE(compute_delta(steering, at, at.targets[0], SimConfig{}), ErrorCode::Precondition);
  }

  TEST_CASE("execute_intra on constant and zero flows") {
    const auto fa = test::builtin_fa("steering_wheel");
    const SimState s = enter_location(fa, 0, fa.ha.initial[0].values, 0.0);
    const IntraResult r = execute_intra(fa, s, 2.0);
    CHECK(r.state.time == 2.0);
    CHECK(r.state.env.get("x") == doctest::Approx(kPi / 2 + 0.2).epsilon(1e-14));
    CHECK(r.state.env.get("y") == std::cos(r.state.env.get("x")));
    CHECK(r.error == 0.0);

    const auto still = convert_to_fa(single_location(num(0)));
    const SimState z = enter_location(still, 0, still.ha.initial[0].values, 3.0);
    const IntraResult rz = execute_intra(still, z, 1.5);
    CHECK(rz.state.time == 4.5);
    CHECK(rz.state.env == z.env);
  }

  TEST_CASE("guard_enabled detects the steering guard") {
    const auto fa = test::builtin_fa("steering_wheel");
    std::mt19937_64 rng(0);
    SimState s = enter_location(fa, 0, Environment({"x", "y"}, {oracle::arccos(-0.99), 0.0}), 0.0);
    CHECK(guard_enabled(fa, s, 1e-6, rng) == std::optional<std::size_t>(0));
    s = enter_location(fa, 0, Environment({"x", "y"}, {2.0, 0.0}), 0.0);
    CHECK_FALSE(guard_enabled(fa, s, 1e-6, rng));
  }

  TEST_CASE("ties between enabled edges are broken by the seed") {
    const auto fa = convert_to_fa(forked());
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
      SimConfig cfg = config(1);
      cfg.seed = seed;
      const RunResult a = simulate(fa, cfg);
      const RunResult b = simulate(fa, cfg);
      REQUIRE(a.trace.switches.size() == 1);
      CHECK(a.trace.switches[0].edge == b.trace.switches[0].edge);
      seen.insert(a.report.final_location);
    }
    CHECK(seen == std::set<std::string>{"B", "C"});
  }

  TEST_CASE("runs are deterministic") {
    for (const auto& name : builtin_model_names()) {
      const RunResult a = run_builtin(name, SimConfig{});
      const RunResult b = run_builtin(name, SimConfig{});
      REQUIRE(a.trace.samples.size() == b.trace.samples.size());
      for (std::size_t i = 0; i < a.trace.samples.size(); ++i) {
        CHECK(a.trace.samples[i].time == b.trace.samples[i].time);
        CHECK(a.trace.samples[i].values == b.trace.samples[i].values);
      }
    }
  }

  TEST_CASE("trace invariants over the parameter grid") {
    for (const auto& name : builtin_model_names()) {
      for (double angle : {kPi / 10, kPi / 50}) {
        for (double eps : {1e-6, 1e-4, 1e-2}) {
          SimConfig cfg;
          cfg.max_angle = angle;
          cfg.error_bound = eps;
          const RunResult r = run_builtin(name, cfg);
          CAPTURE(name);
          CAPTURE(angle);
          CAPTURE(eps);
          CHECK(worst_angular_identity(r.trace) <= 1e-9);
          for (std::size_t i = 1; i < r.trace.samples.size(); ++i) {
            const auto& prev = r.trace.samples[i - 1];
            const auto& cur = r.trace.samples[i];
            CHECK(cur.time >= prev.time);
            if (cur.kind == StepKind::Switch) CHECK(cur.time == prev.time);
            for (const auto& a : cur.angular) {
              CHECK(std::abs(a.normalized) <= 1.0);
              CHECK(a.theta >= 0);
              CHECK(a.theta < 2 * kPi);
            }
          }
          CHECK(r.report.intra_steps + r.report.switch_count + 1 == r.trace.samples.size());
        }
      }
    }
  }

  TEST_CASE("switches happen at the first guard crossing") {
    for (const auto& name : builtin_model_names()) {
      const auto model = test::builtin(name);
      const RunResult r = run_builtin(name, SimConfig{});
      std::size_t next_switch = 0;
      for (std::size_t i = 0; i + 1 < r.trace.samples.size(); ++i) {
        const auto& s = r.trace.samples[i];
        if (r.trace.samples[i + 1].kind == StepKind::Switch) {
          ++next_switch;
          continue;
        }
        const Environment env = r.trace.environment(i);
        for (std::size_t e : model.ha.outgoing(s.location)) {
          CAPTURE(name);
          CAPTURE(s.time);
          CHECK_FALSE(evaluate_guard(model.ha.edges[e].guard, env, 1e-6));
        }
      }
      CHECK(next_switch == r.trace.switches.size());
    }
  }

  TEST_CASE("error conditions") {
    SimConfig bad = config(10);
    bad.max_angle = 4.0;
    CHECK_THROWS_CODE(bad.validate(), ErrorCode::InvalidConfig);
    bad = config(-1);
    CHECK_THROWS_CODE(bad.validate(), ErrorCode::InvalidConfig);
    bad = config(10);
    bad.error_bound = 0;
    CHECK_THROWS_CODE(simulate(test::builtin_fa("steering_wheel"), bad), ErrorCode::InvalidConfig);

    SimConfig tiny = config(1);
    tiny.error_bound = 1e-300;
    CHECK_THROWS_CODE(simulate(convert_to_fa(single_location(var("x"))), tiny), ErrorCode::StepUnderflow);

    const Predicate inv{{Comparison{var("x"), Relation::LessEqual, 2.0}}};
    CHECK_THROWS_CODE(simulate(convert_to_fa(single_location(num(1), inv)), config(5)), ErrorCode::InvariantViolated);
  }

  TEST_CASE("max_steps stops the run") {
    SimConfig cfg = config(50);
    cfg.max_steps = 3;
    const RunResult r = simulate(test::builtin_fa("steering_wheel"), cfg);
    CHECK(r.report.termination == Termination::MaxSteps);
    CHECK(r.report.intra_steps <= 3);
    CHECK_FALSE(r.report.diagnostics.empty());
  }

  TEST_CASE("exponential flow tracks the closed form") {
    const RunResult r = simulate(convert_to_fa(single_location(num(0.5) * var("x"))), config(4));
    CHECK(r.report.final_env.get("x") == doctest::Approx(std::exp(2.0)).epsilon(1e-4));
  }
}
