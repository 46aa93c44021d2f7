#include "fasim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fasim/error.hpp"

namespace fasim {

double sample_output(const Trace& trace, const Expression& output, double t) {
  const auto& samples = trace.samples;
  if (samples.empty()) throw Error(ErrorCode::Precondition, "empty trace");
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const TraceSample& s, double v) { return s.time < v; });
  Environment env(trace.variables);
  if (it == samples.end()) {
    env = trace.environment(samples.size() - 1);
  } else if (it->time == t || it == samples.begin()) {
    env = trace.environment(static_cast<std::size_t>(it - samples.begin()));
  } else {
    const TraceSample& hi = *it;
    const TraceSample& lo = *(it - 1);
    const double w = (t - lo.time) / (hi.time - lo.time);
    for (std::size_t i = 0; i < trace.variables.size(); ++i) {
      env[i] = lo.values[i] + w * (hi.values[i] - lo.values[i]);
    }
  }
  return evaluate(output, env);
}

std::vector<double> resample(const Trace& trace, const Expression& output, double grid_dt, double t_end) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor(t_end / grid_dt + 1e-9));
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out.push_back(sample_output(trace, output, static_cast<double>(k) * grid_dt));
  return out;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return std::nullopt;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> correlate(const Trace& a, const Trace& b, const Expression& output, double grid_dt) {
  if (!(grid_dt > 0)) throw Error(ErrorCode::InvalidConfig, "grid_dt must be positive");
  if (a.samples.empty() || b.samples.empty()) return std::nullopt;
  const double t_end = std::min(a.samples.back().time, b.samples.back().time);
  return pearson(resample(a, output, grid_dt, t_end), resample(b, output, grid_dt, t_end));
}

ComparisonResult compare(const Trace& trace_a, const RunReport& report_a, const Trace& trace_b,
                         const RunReport& report_b, const std::vector<std::string>& outputs, double grid_dt) {
  ComparisonResult r;
  for (const auto& o : outputs) r.correlations.push_back({o, correlate(trace_a, trace_b, parse_expression(o), grid_dt)});
  r.step_ratio = report_b.intra_steps == 0
                     ? (report_a.intra_steps == 0 ? 1.0 : std::numeric_limits<double>::infinity())
                     : static_cast<double>(report_a.intra_steps) / static_cast<double>(report_b.intra_steps);
  const std::size_t n = std::min(trace_a.switches.size(), trace_b.switches.size());
  for (std::size_t i = 0; i < n; ++i) r.switch_time_deltas.push_back(trace_a.switches[i].time - trace_b.switches[i].time);
  return r;
}

}  // namespace fasim
