#include "fasim/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "fasim/error.hpp"

namespace fasim {

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Init: return "init";
    case StepKind::Intra: return "intra";
    case StepKind::Switch: return "switch";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::TimeLimit: return "time_limit";
    case Termination::Halted: return "halted";
    case Termination::MaxSteps: return "max_steps";
  }
  return "?";
}

Environment Trace::environment(std::size_t sample) const {
  return Environment(variables, samples.at(sample).values);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ModelError(ErrorCode::ParseError, "bad number '" + s + "' in trace CSV", line, 0);
  }
  return v;
}

StepKind parse_kind(const std::string& s, int line) {
  if (s == "init") return StepKind::Init;
  if (s == "intra") return StepKind::Intra;
  if (s == "switch") return StepKind::Switch;
  throw ModelError(ErrorCode::ParseError, "unknown step kind '" + s + "'", line, 0);
}

}  // namespace

void write_csv(std::ostream& os, const Trace& trace) {
  os << "time,location,step_kind";
  for (const auto& v : trace.variables) os << ',' << v;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (const auto& s : trace.samples) {
    os << s.time << ',' << s.location << ',' << to_string(s.kind);
    for (double v : s.values) os << ',' << v;
    os << '\n';
  }
  os.precision(old_precision);
}

Trace read_csv(std::istream& is) {
  Trace trace;
  std::string line;
  if (!std::getline(is, line)) throw ModelError(ErrorCode::ParseError, "empty trace CSV", 1, 0);
  auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "time" || header[1] != "location" || header[2] != "step_kind") {
    throw ModelError(ErrorCode::ParseError, "trace CSV header must start with time,location,step_kind", 1, 0);
  }
  trace.variables.assign(header.begin() + 3, header.end());
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ModelError(ErrorCode::ParseError, "wrong field count in trace CSV", lineno, 0);
    }
    TraceSample s;
    s.time = parse_number(fields[0], lineno);
    s.location = fields[1];
    s.kind = parse_kind(fields[2], lineno);
    for (std::size_t i = 3; i < fields.size(); ++i) s.values.push_back(parse_number(fields[i], lineno));
    trace.samples.push_back(std::move(s));
  }
  return trace;
}

}  // namespace fasim
