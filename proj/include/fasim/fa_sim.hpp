#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "fasim/trace.hpp"
#include "fasim/translate.hpp"

namespace fasim {

struct SimConfig {
  double t_max = 50.0;
  double max_angle = std::numbers::pi / 10;  // cap on |Δθ| per step
  double error_bound = 1e-6;                 // halving-loop bound on normalized error
  double eq_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t max_steps = 10'000'000;
  double min_dt = 1e-12;

  // Throws Error(InvalidConfig).
  void validate() const;
};

struct VariableAngle {
  std::string variable;
  double entry_value = 0.0;
  double max_range = 1.0;
  double theta = 0.0;  // [0, 2π)
};

struct SimState {
  double time = 0.0;
  std::size_t location = 0;
  Environment env;
  std::vector<VariableAngle> angles;  // parallel to FaLocation::flow_variables
  std::vector<GuardTarget> targets;   // invertible guards of the current location
};

// Enters `location` with `env` (post-reset values): updates are recomputed,
// normalisation is instantiated and every angle starts at 0.
SimState enter_location(const FrequencyAutomaton& fa, std::size_t location, Environment env, double time);

// Enabled outgoing edge; ties are broken uniformly with `rng`.
std::optional<std::size_t> guard_enabled(const FrequencyAutomaton& fa, const SimState& state, double eq_tol,
                                         std::mt19937_64& rng);

struct DeltaResult {
  bool reachable = false;  // false: zero flow, or a pole lies before the target
  bool capped = false;     // |Δθ| was limited to max_angle
  double delta_theta = 0.0;  // after the cap
  double to_target = 0.0;    // before the cap
  double dt = std::numeric_limits<double>::infinity();
  std::size_t variable = 0;  // index into the location's flow variables
};

// Angular step towards one guard target. The error-controlled halving of
// dt spans every variable and is done by simulate.
// Throws Error(Precondition) when the variable already sits on the target.
DeltaResult compute_delta(const FrequencyAutomaton& fa, const SimState& state, const GuardTarget& target,
                          const SimConfig& cfg);

struct IntraResult {
  SimState state;
  double error = 0.0;  // max |sin θ_full - sin θ_two_half| over non-constant flows
};

// Advances every flow variable by dt on the unit circle. Constant flows use
// the exact relation; the others take one full and two half steps of
// θ' = ẋⁿ / cos θ and keep the extrapolated combination.
IntraResult execute_intra(const FrequencyAutomaton& fa, const SimState& state, double dt);

// Throws Error with StepUnderflow, CosineSingularity, InvariantViolated,
// InvalidConfig, or expression errors.
RunResult simulate(const FrequencyAutomaton& fa, const SimConfig& cfg);

}  // namespace fasim
