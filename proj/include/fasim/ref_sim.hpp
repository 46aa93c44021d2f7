#pragma once

#include <cstdint>

#include "fasim/automaton.hpp"
#include "fasim/trace.hpp"

namespace fasim {

enum class CrossingRefinement { None, Bisection };

struct RefConfig {
  double dt = 1e-4;
  double t_max = 50.0;
  double eq_tol = 1e-6;
  CrossingRefinement crossing_refinement = CrossingRefinement::Bisection;
  double bisection_tol = 1e-9;
  std::uint64_t seed = 0;
  std::size_t max_steps = 100'000'000;

  // Throws Error(InvalidConfig).
  void validate() const;
};

// One classical RK4 step of the flows of `loc`; update variables are
// recomputed at every stage and at the end.
Environment rk4_step(const Location& loc, const Environment& env, double dt);

// Fixed-step RK4. With bisection refinement a guard counts as crossed when
// it holds at the end of a step (inequalities exactly, == within eq_tol) or,
// for ==, when its residual changed sign; the crossing time is then
// bisected to bisection_tol and the grid restarts from there.
RunResult simulate_reference(const HybridAutomaton& ha, const RefConfig& cfg);

// Same integrator with guards tested only at grid points.
RunResult simulate_naive(const HybridAutomaton& ha, RefConfig cfg);

}  // namespace fasim
