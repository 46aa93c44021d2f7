#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fasim/expr.hpp"
#include "fasim/trace.hpp"

namespace fasim {

// Value of `output` at time t. Variables are interpolated linearly between
// samples; at a switch instant the pre-switch row is used.
double sample_output(const Trace& trace, const Expression& output, double t);

// Series of `output` on the grid 0, dt, 2dt, ... up to the shorter trace end.
std::vector<double> resample(const Trace& trace, const Expression& output, double grid_dt, double t_end);

// Pearson correlation; nullopt when fewer than two points or either series
// has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

// Throws Error(InvalidConfig) for grid_dt <= 0.
std::optional<double> correlate(const Trace& a, const Trace& b, const Expression& output, double grid_dt = 0.01);

struct OutputCorrelation {
  std::string output;
  std::optional<double> correlation;
};

struct ComparisonResult {
  std::vector<OutputCorrelation> correlations;
  double step_ratio = 0.0;                  // intra steps of a / intra steps of b
  std::vector<double> switch_time_deltas;   // a - b, pairwise in order
};

ComparisonResult compare(const Trace& trace_a, const RunReport& report_a, const Trace& trace_b,
                         const RunReport& report_b, const std::vector<std::string>& outputs,
                         double grid_dt = 0.01);

}  // namespace fasim
