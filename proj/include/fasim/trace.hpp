#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fasim/expr.hpp"

namespace fasim {

enum class StepKind { Init, Intra, Switch };

const char* to_string(StepKind k);

// Unit-circle representation of one flow variable at a sample:
// value = entry_value + max_range * sin(theta), normalized = sin(theta).
struct AngularSample {
  std::string variable;
  double entry_value = 0.0;
  double max_range = 1.0;
  double theta = 0.0;
  double normalized = 0.0;
};

struct TraceSample {
  double time = 0.0;
  std::string location;
  StepKind kind = StepKind::Intra;
  std::vector<double> values;          // parallel to Trace::variables
  std::vector<AngularSample> angular;  // FA runs only
};

struct SwitchEvent {
  double time = 0.0;
  std::size_t edge = 0;
  std::string edge_name;
  Environment pre;
  Environment post;
};

struct Trace {
  std::vector<std::string> variables;
  std::vector<TraceSample> samples;
  std::vector<SwitchEvent> switches;

  Environment environment(std::size_t sample) const;
};

enum class Termination { TimeLimit, Halted, MaxSteps };

const char* to_string(Termination t);

struct RunReport {
  std::size_t intra_steps = 0;
  std::size_t switch_count = 0;
  double wall_time = 0.0;  // seconds, simulate call only
  double final_time = 0.0;
  std::string final_location;
  Environment final_env;
  Termination termination = Termination::TimeLimit;
  std::vector<std::string> diagnostics;
};

struct RunResult {
  Trace trace;
  RunReport report;
};

// CSV with header time,location,step_kind,<variables>; 17 significant digits.
void write_csv(std::ostream& os, const Trace& trace);
// Reads samples back; switch events are not reconstructed. Throws ParseError.
Trace read_csv(std::istream& is);

}  // namespace fasim
