#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fasim/automaton.hpp"

namespace fasim {

// Left-hand side shapes that can be inverted to a boundary value of one
// flow variable: v, cos(v) or sin(v).
enum class GuardWrapper { Identity, Cos, Sin };

struct InvertibleGuard {
  std::string variable;
  GuardWrapper wrapper = GuardWrapper::Identity;
  double level = 0.0;
  Relation relation = Relation::LessEqual;
};

// Single-comparison predicates over one flow variable (directly, or through
// an update variable of `loc`) are invertible; everything else is
// residual-tracked at run time.
std::optional<InvertibleGuard> invertible_form(const Predicate& guard, const Location& loc);
std::optional<InvertibleGuard> invertible_form(const Comparison& c, const Location& loc);

// Boundary value of the governing variable. For cos/sin wrappers the
// solution is the first one reached from `entry_value` moving in the
// direction of `flow_sign` (the principal branch shifted by 2πk).
// Throws NotStaticallyInvertible, or DomainError for an unreachable level.
double guard_boundary_value(const Comparison& c, const Location& loc, double entry_value,
                            double flow_sign);
double guard_boundary_value(const InvertibleGuard& g, double entry_value, double flow_sign);

struct NormalizationParams {
  std::string variable;
  double entry_value = 0.0;
  double max_range = 1.0;
};

// entry_env must hold every variable; update variables are recomputed here.
NormalizationParams compute_normalization(const HybridAutomaton& ha, const Location& loc,
                                          const std::string& var, const Environment& entry_env);

struct GuardTarget {
  std::size_t edge = 0;
  std::string variable;
  double target_value = 0.0;
  double normalized_target = 0.0;
  std::vector<double> candidate_angles;  // in [0, 2π); one entry at ±1
  Relation relation = Relation::LessEqual;
};

GuardTarget make_guard_target(std::size_t edge, const InvertibleGuard& g,
                              const NormalizationParams& norm, double flow_sign);

struct EdgePlan {
  std::size_t edge = 0;
  std::optional<InvertibleGuard> invertible;  // nullopt: residual-tracked

  bool residual_tracked() const { return !invertible.has_value(); }
};

struct FaLocation {
  std::string id;
  std::vector<std::string> flow_variables;
  std::vector<bool> constant_slope;  // parallel to flow_variables
  std::vector<std::string> update_variables;
  std::vector<EdgePlan> outgoing;
};

// Normalisation and guard angles of one location for a concrete entry state.
struct LocationInstance {
  std::size_t location = 0;
  std::vector<NormalizationParams> normalization;  // parallel to flow_variables
  std::vector<GuardTarget> targets;
};

struct FrequencyAutomaton {
  HybridAutomaton ha;
  std::vector<FaLocation> locations;  // same order as ha.locations
  LocationInstance initial;           // instantiated from Init

  LocationInstance instantiate(std::size_t location, const Environment& entry_env) const;
};

// Throws ModelError(ValidationError) when validate(ha) reports anything.
FrequencyAutomaton convert_to_fa(const HybridAutomaton& ha);

// Human-readable normalisation and guard-angle tables.
std::string dump_tables(const FrequencyAutomaton& fa);

// Angle wrapped into [0, 2π).
double wrap_angle(double theta);

}  // namespace fasim
