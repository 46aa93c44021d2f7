#include "fasim/ref_sim.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "fasim/error.hpp"

namespace fasim {

void RefConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(dt > 0) || !std::isfinite(dt)) fail("dt must be positive and finite");
  if (!(t_max > 0) || !std::isfinite(t_max)) fail("t_max must be positive and finite");
  if (!(eq_tol >= 0)) fail("eq_tol must be non-negative");
  if (!(bisection_tol > 0)) fail("bisection_tol must be positive");
  if (max_steps == 0) fail("max_steps must be positive");
}

Environment rk4_step(const Location& loc, const Environment& env, double dt) {
  const std::size_t n = loc.flows.size();
  std::vector<std::size_t> slots;
  std::vector<const Expression*> flows;
  for (const auto& [v, f] : loc.flows) {
    slots.push_back(*env.index_of(v));
    flows.push_back(&f);
  }
  auto rates = [&](const Environment& e) {
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = evaluate(*flows[i], e);
    return k;
  };
  auto offset = [&](const std::vector<double>& k, double h) {
    Environment e = env;
    for (std::size_t i = 0; i < n; ++i) e[slots[i]] += h * k[i];
    apply_updates(loc, e);
    return e;
  };

  const auto k1 = rates(env);
  const auto k2 = rates(offset(k1, dt / 2));
  const auto k3 = rates(offset(k2, dt / 2));
  const auto k4 = rates(offset(k3, dt));
  Environment out = env;
  for (std::size_t i = 0; i < n; ++i) out[slots[i]] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  apply_updates(loc, out);
  return out;
}

namespace {

// Inequalities are tested exactly so that a refined crossing is not pulled
// ahead by the tolerance band; equalities keep the eq_tol window.
bool holds_exactly(const Predicate& guard, const Environment& env, double eq_tol) {
  if (guard.comparisons.empty()) return false;
  for (const auto& c : guard.comparisons) {
    if (!evaluate_comparison(c, env, c.relation == Relation::Equal ? eq_tol : 0.0)) return false;
  }
  return true;
}

bool crossed(const Predicate& guard, const Environment& before, const Environment& after, double eq_tol) {
  if (guard.comparisons.empty()) return false;
  for (const auto& c : guard.comparisons) {
    if (evaluate_comparison(c, after, c.relation == Relation::Equal ? eq_tol : 0.0)) continue;
    if (c.relation == Relation::Equal && c.residual(before) * c.residual(after) < 0) continue;
    return false;
  }
  return true;
}

class Runner {
 public:
  Runner(const HybridAutomaton& ha, const RefConfig& cfg) : ha_(ha), cfg_(cfg), rng_(cfg.seed) {}

  RunResult run() {
    const auto started = std::chrono::steady_clock::now();
    trace_.variables = ha_.variables;
    const InitialState& init = ha_.initial.front();
    loc_ = *ha_.location_index(init.location);
    env_ = ha_.blank_environment();
    for (std::size_t i = 0; i < init.values.size(); ++i) env_.set(init.values.names()[i], init.values[i]);
    apply_updates(ha_.locations[loc_], env_);
    record(StepKind::Init);

    std::size_t iterations = 0;
    for (;;) {
      if (++iterations > cfg_.max_steps) {
        report_.termination = Termination::MaxSteps;
        report_.diagnostics.push_back("stopped after max_steps");
        break;
      }
      const bool refine = cfg_.crossing_refinement == CrossingRefinement::Bisection;
      if (auto e = pick(enabled([&](const Predicate& g) {
            return refine ? holds_exactly(g, env_, cfg_.eq_tol) : evaluate_guard(g, env_, cfg_.eq_tol);
          }))) {
        take(*e, env_);
        continue;
      }
      const double remaining = cfg_.t_max - t_;
      if (remaining <= 1e-12) break;
      const bool last = remaining <= cfg_.dt * (1 + 1e-9);
      const double h = last ? remaining : cfg_.dt;
      const Location& loc = ha_.locations[loc_];
      Environment next = rk4_step(loc, env_, h);

      if (refine) {
        const Environment start = env_;
        auto crossing = [&](const Environment& e) {
          return enabled([&](const Predicate& g) { return crossed(g, start, e, cfg_.eq_tol); });
        };
        if (auto hits = crossing(next); !hits.empty()) {
          double lo = 0.0, hi = h;
          while (hi - lo > cfg_.bisection_tol) {
            const double mid = 0.5 * (lo + hi);
            Environment m = rk4_step(loc, start, mid);
            if (auto mh = crossing(m); !mh.empty()) {
              hi = mid;
              next = std::move(m);
              hits = std::move(mh);
            } else {
              lo = mid;
            }
          }
          advance(hi, std::move(next), false);
          take(*pick(hits), env_);
          continue;
        }
      }
      advance(h, std::move(next), last);
    }

    report_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report_.final_time = t_;
    report_.final_location = ha_.locations[loc_].id;
    report_.final_env = env_;
    if (report_.termination != Termination::MaxSteps && halted()) report_.termination = Termination::Halted;
    return {std::move(trace_), std::move(report_)};
  }

 private:
  template <class Pred>
  std::vector<std::size_t> enabled(Pred&& holds) const {
    std::vector<std::size_t> out;
    for (std::size_t e : ha_.outgoing(ha_.locations[loc_].id)) {
      if (holds(ha_.edges[e].guard)) out.push_back(e);
    }
    return out;
  }

  std::optional<std::size_t> pick(const std::vector<std::size_t>& edges) {
    if (edges.empty()) return std::nullopt;
    if (edges.size() == 1) return edges.front();
    std::uniform_int_distribution<std::size_t> d(0, edges.size() - 1);
    return edges[d(rng_)];
  }

  void advance(double h, Environment next, bool last) {
    t_ = last ? cfg_.t_max : t_ + h;
    env_ = std::move(next);
    ++report_.intra_steps;
    record(StepKind::Intra);
  }

  void take(std::size_t edge, const Environment& pre) {
    const Edge& e = ha_.edges[edge];
    Environment post = apply_reset(e, pre);
    loc_ = *ha_.location_index(e.target);
    apply_updates(ha_.locations[loc_], post);
    trace_.switches.push_back({t_, edge, ha_.edge_name(edge), pre, post});
    env_ = std::move(post);
    ++report_.switch_count;
    record(StepKind::Switch);
  }

  void record(StepKind kind) {
    TraceSample s;
    s.time = t_;
    s.location = ha_.locations[loc_].id;
    s.kind = kind;
    s.values.assign(env_.values().begin(), env_.values().end());
    trace_.samples.push_back(std::move(s));
  }

  bool halted() const {
    if (!ha_.outgoing(ha_.locations[loc_].id).empty()) return false;
    for (const auto& [v, f] : ha_.locations[loc_].flows) {
      auto c = is_constant(f);
      if (!c || *c != 0.0) return false;
    }
    return true;
  }

  const HybridAutomaton& ha_;
  RefConfig cfg_;
  std::mt19937_64 rng_;
  double t_ = 0.0;
  std::size_t loc_ = 0;
  Environment env_;
  Trace trace_;
  RunReport report_;
};

void require_valid(const HybridAutomaton& ha) {
  if (auto diags = validate(ha); !diags.empty()) {
    throw ModelError(ErrorCode::ValidationError, "automaton is not valid: " + diags.front().message, 0, 0);
  }
}

}  // namespace

RunResult simulate_reference(const HybridAutomaton& ha, const RefConfig& cfg) {
  cfg.validate();
  require_valid(ha);
  return Runner(ha, cfg).run();
}

RunResult simulate_naive(const HybridAutomaton& ha, RefConfig cfg) {
  cfg.crossing_refinement = CrossingRefinement::None;
  return simulate_reference(ha, cfg);
}

}  // namespace fasim
