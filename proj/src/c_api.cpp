#include "fasim/fasim.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

#include "fasim/error.hpp"
#include "fasim/fa_sim.hpp"
#include "fasim/metrics.hpp"
#include "fasim/model_file.hpp"
#include "fasim/ref_sim.hpp"

struct fasim_model {
  fasim::ModelFile file;
  fasim::FrequencyAutomaton fa;
};

struct fasim_run {
  fasim::RunResult result;
};

namespace {

thread_local std::string g_last_error;

fasim_status status_of(fasim::ErrorCode code) {
  using fasim::ErrorCode;
  switch (code) {
    case ErrorCode::UnboundVariable: return FASIM_ERR_UNBOUND_VARIABLE;
    case ErrorCode::DomainError: return FASIM_ERR_DOMAIN;
    case ErrorCode::DivideByZero: return FASIM_ERR_DIVIDE_BY_ZERO;
    case ErrorCode::ParseError: return FASIM_ERR_PARSE;
    case ErrorCode::ValidationError: return FASIM_ERR_VALIDATION;
    case ErrorCode::NotStaticallyInvertible: return FASIM_ERR_NOT_INVERTIBLE;
    case ErrorCode::StepUnderflow: return FASIM_ERR_STEP_UNDERFLOW;
    case ErrorCode::CosineSingularity: return FASIM_ERR_COSINE_SINGULARITY;
    case ErrorCode::InvariantViolated: return FASIM_ERR_INVARIANT_VIOLATED;
    case ErrorCode::InvalidConfig: return FASIM_ERR_INVALID_CONFIG;
    case ErrorCode::ZeroVariance: return FASIM_ERR_ZERO_VARIANCE;
    case ErrorCode::Precondition: return FASIM_ERR_PRECONDITION;
    case ErrorCode::Io: return FASIM_ERR_IO;
  }
  return FASIM_ERR_INTERNAL;
}

fasim_status fail(fasim_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
fasim_status guarded(F&& body) {
  try {
    return body();
  } catch (const fasim::ModelError& e) {
    std::string msg = e.what();
    if (e.line() > 0) msg = "line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ": " + msg;
    return fail(status_of(e.code()), msg);
  } catch (const fasim::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(FASIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FASIM_ERR_INTERNAL, "unknown error");
  }
}

fasim_status make_model(std::string_view text, fasim_model** out) {
  auto model = std::make_unique<fasim_model>();
  model->file = fasim::parse_model(text);
  model->fa = fasim::convert_to_fa(model->file.ha);
  *out = model.release();
  return FASIM_OK;
}

}  // namespace

extern "C" {

const char* fasim_version(void) { return "1.0.0"; }

const char* fasim_last_error(void) { return g_last_error.c_str(); }

const char* fasim_status_string(fasim_status status) {
  switch (status) {
    case FASIM_OK: return "ok";
    case FASIM_ERR_NULL_ARGUMENT: return "null argument";
    case FASIM_ERR_PARSE: return "parse error";
    case FASIM_ERR_VALIDATION: return "validation error";
    case FASIM_ERR_UNBOUND_VARIABLE: return "unbound variable";
    case FASIM_ERR_DOMAIN: return "domain error";
    case FASIM_ERR_DIVIDE_BY_ZERO: return "divide by zero";
    case FASIM_ERR_NOT_INVERTIBLE: return "guard not statically invertible";
    case FASIM_ERR_STEP_UNDERFLOW: return "step underflow";
    case FASIM_ERR_COSINE_SINGULARITY: return "cosine singularity";
    case FASIM_ERR_INVARIANT_VIOLATED: return "invariant violated";
    case FASIM_ERR_INVALID_CONFIG: return "invalid configuration";
    case FASIM_ERR_ZERO_VARIANCE: return "zero variance";
    case FASIM_ERR_PRECONDITION: return "precondition violated";
    case FASIM_ERR_IO: return "i/o error";
    case FASIM_ERR_OUT_OF_RANGE: return "index out of range";
    case FASIM_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case FASIM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

fasim_status fasim_model_from_text(const char* text, fasim_model** out) {
  if (!text || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "text and out must not be null");
  *out = nullptr;
  return guarded([&] { return make_model(text, out); });
}

fasim_status fasim_model_from_file(const char* path, fasim_model** out) {
  if (!path || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "path and out must not be null");
  *out = nullptr;
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(FASIM_ERR_IO, std::string("cannot open '") + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  return guarded([&] { return make_model(text, out); });
}

fasim_status fasim_model_builtin(const char* name, fasim_model** out) {
  if (!name || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "name and out must not be null");
  *out = nullptr;
  auto text = fasim::builtin_model_text(name);
  if (!text) return fail(FASIM_ERR_OUT_OF_RANGE, std::string("no built-in model named '") + name + "'");
  return guarded([&] { return make_model(*text, out); });
}

void fasim_model_free(fasim_model* model) { delete model; }

size_t fasim_builtin_count(void) { return fasim::builtin_model_names().size(); }

const char* fasim_builtin_name(size_t index) {
  const auto& names = fasim::builtin_model_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

const char* fasim_builtin_text(const char* name) {
  if (!name) return nullptr;
  auto text = fasim::builtin_model_text(name);
  return text ? text->data() : nullptr;
}

const char* fasim_model_name(const fasim_model* model) { return model ? model->file.name.c_str() : nullptr; }

double fasim_model_t_max(const fasim_model* model) {
  return model ? model->file.t_max : std::numeric_limits<double>::quiet_NaN();
}

size_t fasim_model_variable_count(const fasim_model* model) { return model ? model->file.ha.variables.size() : 0; }

const char* fasim_model_variable_name(const fasim_model* model, size_t index) {
  if (!model || index >= model->file.ha.variables.size()) return nullptr;
  return model->file.ha.variables[index].c_str();
}

size_t fasim_model_output_count(const fasim_model* model) { return model ? model->file.outputs.size() : 0; }

const char* fasim_model_output(const fasim_model* model, size_t index) {
  if (!model || index >= model->file.outputs.size()) return nullptr;
  return model->file.outputs[index].c_str();
}

fasim_status fasim_model_translate_dump(const fasim_model* model, char* buffer, size_t capacity, size_t* needed) {
  if (!model) return fail(FASIM_ERR_NULL_ARGUMENT, "model must not be null");
  return guarded([&] {
    const std::string text = fasim::dump_tables(model->fa);
    if (needed) *needed = text.size() + 1;
    if (!buffer || capacity < text.size() + 1) {
      if (buffer && capacity > 0) buffer[0] = '\0';
      return fail(FASIM_ERR_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(text.size() + 1) + " bytes");
    }
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    return FASIM_OK;
  });
}

void fasim_sim_options_default(fasim_sim_options* options) {
  if (!options) return;
  const fasim::SimConfig sim;
  const fasim::RefConfig ref;
  options->engine = FASIM_ENGINE_FA;
  options->t_max = 0.0;
  options->max_angle = sim.max_angle;
  options->error_bound = sim.error_bound;
  options->eq_tol = sim.eq_tol;
  options->min_dt = sim.min_dt;
  options->dt = ref.dt;
  options->bisection_tol = ref.bisection_tol;
  options->seed = sim.seed;
  options->max_steps = sim.max_steps;
}

fasim_status fasim_simulate(const fasim_model* model, const fasim_sim_options* options, fasim_run** out) {
  if (!model || !options || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "model, options and out must not be null");
  *out = nullptr;
  return guarded([&] {
    const double t_max = options->t_max > 0 ? options->t_max : model->file.t_max;
    auto run = std::make_unique<fasim_run>();
    switch (options->engine) {
      case FASIM_ENGINE_FA: {
        fasim::SimConfig cfg;
        cfg.t_max = t_max;
        cfg.max_angle = options->max_angle;
        cfg.error_bound = options->error_bound;
        cfg.eq_tol = options->eq_tol;
        cfg.min_dt = options->min_dt;
        cfg.seed = options->seed;
        cfg.max_steps = static_cast<std::size_t>(options->max_steps);
        run->result = fasim::simulate(model->fa, cfg);
        break;
      }
      case FASIM_ENGINE_REFERENCE:
      case FASIM_ENGINE_NAIVE: {
        fasim::RefConfig cfg;
        cfg.t_max = t_max;
        cfg.dt = options->dt;
        cfg.eq_tol = options->eq_tol;
        cfg.bisection_tol = options->bisection_tol;
        cfg.seed = options->seed;
        cfg.max_steps = static_cast<std::size_t>(options->max_steps);
        run->result = options->engine == FASIM_ENGINE_NAIVE ? fasim::simulate_naive(model->file.ha, cfg)
                                                            : fasim::simulate_reference(model->file.ha, cfg);
        break;
      }
      default:
        return fail(FASIM_ERR_INVALID_CONFIG, "unknown engine");
    }
    *out = run.release();
    return FASIM_OK;
  });
}

void fasim_run_free(fasim_run* run) { delete run; }

fasim_status fasim_run_get_stats(const fasim_run* run, fasim_run_stats* out) {
  if (!run || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "run and out must not be null");
  const auto& r = run->result;
  out->intra_steps = r.report.intra_steps;
  out->switch_count = r.report.switch_count;
  out->sample_count = r.trace.samples.size();
  out->wall_time = r.report.wall_time;
  out->final_time = r.report.final_time;
  out->first_switch_time =
      r.trace.switches.empty() ? std::numeric_limits<double>::quiet_NaN() : r.trace.switches.front().time;
  out->halted = r.report.termination == fasim::Termination::Halted ? 1 : 0;
  return FASIM_OK;
}

fasim_status fasim_run_sample(const fasim_run* run, size_t index, double* time, double* values,
                              fasim_step_kind* kind) {
  if (!run) return fail(FASIM_ERR_NULL_ARGUMENT, "run must not be null");
  const auto& samples = run->result.trace.samples;
  if (index >= samples.size()) return fail(FASIM_ERR_OUT_OF_RANGE, "sample index out of range");
  const auto& s = samples[index];
  if (time) *time = s.time;
  if (values) std::copy(s.values.begin(), s.values.end(), values);
  if (kind) *kind = static_cast<fasim_step_kind>(s.kind);
  return FASIM_OK;
}

const char* fasim_run_sample_location(const fasim_run* run, size_t index) {
  if (!run || index >= run->result.trace.samples.size()) return nullptr;
  return run->result.trace.samples[index].location.c_str();
}

fasim_status fasim_run_switch(const fasim_run* run, size_t index, double* time, const char** edge_name) {
  if (!run) return fail(FASIM_ERR_NULL_ARGUMENT, "run must not be null");
  const auto& switches = run->result.trace.switches;
  if (index >= switches.size()) return fail(FASIM_ERR_OUT_OF_RANGE, "switch index out of range");
  if (time) *time = switches[index].time;
  if (edge_name) *edge_name = switches[index].edge_name.c_str();
  return FASIM_OK;
}

fasim_status fasim_run_write_csv(const fasim_run* run, const char* path) {
  if (!run || !path) return fail(FASIM_ERR_NULL_ARGUMENT, "run and path must not be null");
  return guarded([&] {
    std::ofstream os(path);
    if (!os) return fail(FASIM_ERR_IO, std::string("cannot write '") + path + "'");
    fasim::write_csv(os, run->result.trace);
    if (!os) return fail(FASIM_ERR_IO, std::string("write to '") + path + "' failed");
    return FASIM_OK;
  });
}

fasim_status fasim_correlate(const fasim_run* a, const fasim_run* b, const char* output, double grid_dt,
                             double* out) {
  if (!a || !b || !output || !out) return fail(FASIM_ERR_NULL_ARGUMENT, "arguments must not be null");
  return guarded([&] {
    auto r = fasim::correlate(a->result.trace, b->result.trace, fasim::parse_expression(output), grid_dt);
    if (!r) {
      *out = std::numeric_limits<double>::quiet_NaN();
      return fail(FASIM_ERR_ZERO_VARIANCE, "correlation undefined: fewer than two points or zero variance");
    }
    *out = *r;
    return FASIM_OK;
  });
}

}  // extern "C"
