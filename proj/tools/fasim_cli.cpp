// fasim command-line driver. Uses only the C interface in fasim/fasim.h.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fasim/fasim.h"

namespace fs = std::filesystem;

namespace {

struct CliError {
  fasim_status status;
  std::string message;
};

void check(fasim_status s) {
  if (s != FASIM_OK) throw CliError{s, fasim_last_error()};
}

using ModelPtr = std::unique_ptr<fasim_model, decltype(&fasim_model_free)>;
using RunPtr = std::unique_ptr<fasim_run, decltype(&fasim_run_free)>;

ModelPtr load_model(const std::string& source) {
  fasim_model* m = nullptr;
  std::error_code ec;
  if (fs::is_regular_file(source, ec)) {
    check(fasim_model_from_file(source.c_str(), &m));
  } else if (fasim_builtin_text(source.c_str())) {
    check(fasim_model_builtin(source.c_str(), &m));
  } else {
    throw CliError{FASIM_ERR_IO, "'" + source + "' is neither a model file nor a built-in model"};
  }
  return {m, fasim_model_free};
}

RunPtr run_model(const fasim_model* m, const fasim_sim_options& o) {
  fasim_run* r = nullptr;
  check(fasim_simulate(m, &o, &r));
  return {r, fasim_run_free};
}

fasim_run_stats stats_of(const fasim_run* r) {
  fasim_run_stats s{};
  check(fasim_run_get_stats(r, &s));
  return s;
}

std::vector<double> switch_times(const fasim_run* r) {
  std::vector<double> out;
  const auto n = stats_of(r).switch_count;
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0;
    check(fasim_run_switch(r, i, &t, nullptr));
    out.push_back(t);
  }
  return out;
}

std::optional<double> correlation(const fasim_run* a, const fasim_run* b, const std::string& output, double grid) {
  double c = 0;
  const fasim_status s = fasim_correlate(a, b, output.c_str(), grid, &c);
  if (s == FASIM_ERR_ZERO_VARIANCE) return std::nullopt;
  check(s);
  return c;
}

std::string model_label(const fasim_model* m, const std::string& source) {
  const std::string name = fasim_model_name(m);
  return name.empty() ? fs::path(source).stem().string() : name;
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("FASIM_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v, int precision = 6) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v, int precision = 10) {
  return v ? fmt(*v, precision) : std::string("undefined");
}

std::string angle_label(double a) {
  const double div = std::numbers::pi / a;
  if (std::abs(div - std::round(div)) < 1e-9) return "pi/" + std::to_string(static_cast<long>(std::round(div)));
  return fmt(a);
}

const char* engine_name(fasim_engine e) {
  switch (e) {
    case FASIM_ENGINE_FA: return "fa";
    case FASIM_ENGINE_REFERENCE: return "ref";
    case FASIM_ENGINE_NAIVE: return "naive";
  }
  return "?";
}

// Parses "pi/10", "0.314" or "3.14159".
double parse_angle(const std::string& s) {
  if (s.rfind("pi/", 0) == 0) return std::numbers::pi / std::stod(s.substr(3));
  if (s == "pi") return std::numbers::pi;
  return std::stod(s);
}

struct SimFlags {
  std::string model;
  std::string engine = "fa";
  std::string max_angle = "pi/10";
  double err = 1e-6;
  double dt = 1e-4;
  double tmax = 0;
  double eq_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string out;
};

fasim_sim_options options_from(const SimFlags& f) {
  fasim_sim_options o;
  fasim_sim_options_default(&o);
  static const std::map<std::string, fasim_engine> engines{
      {"fa", FASIM_ENGINE_FA}, {"ref", FASIM_ENGINE_REFERENCE}, {"naive", FASIM_ENGINE_NAIVE}};
  o.engine = engines.at(f.engine);
  o.max_angle = parse_angle(f.max_angle);
  o.error_bound = f.err;
  o.dt = f.dt;
  o.t_max = f.tmax;
  o.eq_tol = f.eq_tol;
  o.seed = f.seed;
  return o;
}

void print_run(const std::string& label, const fasim_run* r) {
  const auto s = stats_of(r);
  std::cout << label << ": " << s.intra_steps << " intra steps, " << s.switch_count << " switches, final t "
            << fmt(s.final_time, 10) << ", wall " << fmt(s.wall_time, 4) << " s\n";
  for (std::size_t i = 0; i < s.switch_count; ++i) {
    double t = 0;
    const char* edge = nullptr;
    check(fasim_run_switch(r, i, &t, &edge));
    std::cout << "  switch " << edge << " at t = " << fmt(t, 12) << "\n";
  }
}

int cmd_simulate(const SimFlags& f) {
  auto model = load_model(f.model);
  const auto opts = options_from(f);
  auto run = run_model(model.get(), opts);
  fs::path out = f.out;
  if (out.empty()) out = output_dir("") / (model_label(model.get(), f.model) + "_" + f.engine + ".csv");
  check(fasim_run_write_csv(run.get(), out.string().c_str()));
  print_run(f.engine, run.get());
  std::cout << "trace written to " << out.string() << "\n";
  return 0;
}

int cmd_compare(const SimFlags& f, double grid, const std::string& out_flag) {
  auto model = load_model(f.model);
  const std::string label = model_label(model.get(), f.model);
  auto fa_opts = options_from(f);
  fa_opts.engine = FASIM_ENGINE_FA;
  auto ref_opts = fa_opts;
  ref_opts.engine = FASIM_ENGINE_REFERENCE;
  auto fa = run_model(model.get(), fa_opts);
  auto ref = run_model(model.get(), ref_opts);

  const fs::path dir = output_dir(out_flag);
  check(fasim_run_write_csv(fa.get(), (dir / (label + "_fa.csv")).string().c_str()));
  check(fasim_run_write_csv(ref.get(), (dir / (label + "_ref.csv")).string().c_str()));

  print_run("fa", fa.get());
  print_run("ref", ref.get());
  const auto fs_ = stats_of(fa.get()), rs = stats_of(ref.get());
  const double ratio = rs.intra_steps ? double(fs_.intra_steps) / double(rs.intra_steps) : NAN;
  const auto ta = switch_times(fa.get()), tb = switch_times(ref.get());

  std::ofstream summary(dir / (label + "_compare.csv"));
  summary << "quantity,value\n";
  summary << "step_ratio," << fmt(ratio, 10) << "\n";
  std::cout << "step ratio fa/ref: " << fmt(ratio, 6) << "\n";
  for (std::size_t i = 0; i < fasim_model_output_count(model.get()); ++i) {
    const std::string out = fasim_model_output(model.get(), i);
    const auto c = correlation(fa.get(), ref.get(), out, grid);
    summary << "correlation[" << out << "]," << fmt(c) << "\n";
    std::cout << "correlation " << out << ": " << fmt(c) << "\n";
  }
  for (std::size_t i = 0; i < std::min(ta.size(), tb.size()); ++i) {
    summary << "switch_delta[" << i << "]," << fmt(ta[i] - tb[i], 10) << "\n";
    std::cout << "switch " << i << " delta: " << fmt(ta[i] - tb[i], 6) << " s\n";
  }
  std::cout << "traces and summary written to " << dir.string() << "\n";
  return 0;
}

struct BenchRow {
  std::string model, engine, setting;
  double max_angle = NAN, error_bound = NAN, dt = NAN;
  fasim_run_stats stats{};
  std::optional<double> correlation;
  double first_switch_delta = NAN;
};

int cmd_bench(const std::vector<std::string>& models, double grid, const std::string& out_flag) {
  const std::vector<double> angles{std::numbers::pi / 10, std::numbers::pi / 50, std::numbers::pi / 100,
                                   std::numbers::pi / 150};
  const std::vector<double> errors{1e-6, 1e-4, 1e-2};
  const std::vector<double> steps{0.1, 0.01, 0.001};
  constexpr double kReferenceDt = 1e-4;

  std::vector<BenchRow> rows;
  for (const auto& source : models) {
    auto model = load_model(source);
    const std::string label = model_label(model.get(), source);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < fasim_model_output_count(model.get()); ++i) outputs.emplace_back(fasim_model_output(model.get(), i));

    fasim_sim_options base;
    fasim_sim_options_default(&base);
    auto truth_opts = base;
    truth_opts.engine = FASIM_ENGINE_REFERENCE;
    truth_opts.dt = kReferenceDt;
    auto truth = run_model(model.get(), truth_opts);
    const double truth_switch = stats_of(truth.get()).first_switch_time;

    auto add = [&](BenchRow row, const fasim_run* run) {
      row.model = label;
      row.stats = stats_of(run);
      for (const auto& o : outputs) {
        const auto c = correlation(run, truth.get(), o, grid);
        if (!c) {
          row.correlation.reset();
          break;
        }
        row.correlation = row.correlation ? std::min(*row.correlation, *c) : *c;
      }
      row.first_switch_delta = row.stats.first_switch_time - truth_switch;
      rows.push_back(row);
    };

    for (double a : angles) {
      for (double e : errors) {
        auto o = base;
        o.max_angle = a;
        o.error_bound = e;
        auto run = run_model(model.get(), o);
        BenchRow row;
        row.engine = "fa";
        row.setting = "FA(" + angle_label(a) + ", " + fmt(e) + ")";
        row.max_angle = a;
        row.error_bound = e;
        add(row, run.get());
      }
    }
    for (fasim_engine engine : {FASIM_ENGINE_REFERENCE, FASIM_ENGINE_NAIVE}) {
      for (double dt : steps) {
        auto o = base;
        o.engine = engine;
        o.dt = dt;
        auto run = run_model(model.get(), o);
        BenchRow row;
        row.engine = engine_name(engine);
        row.setting = std::string(engine == FASIM_ENGINE_NAIVE ? "naive" : "RK4") + "(dt=" + fmt(dt) + ")";
        row.dt = dt;
        add(row, run.get());
      }
    }
  }

  const fs::path dir = output_dir(out_flag);
  const fs::path csv_path = dir / "bench_summary.csv";
  std::ofstream csv(csv_path);
  csv << "model,engine,max_angle,error_bound,dt,intra_steps,switches,first_switch_time,first_switch_delta,"
         "correlation,wall_time\n";
  for (const auto& r : rows) {
    csv << r.model << ',' << r.engine << ',' << fmt(r.max_angle, 17) << ',' << fmt(r.error_bound) << ','
        << fmt(r.dt) << ',' << r.stats.intra_steps << ',' << r.stats.switch_count << ','
        << fmt(r.stats.first_switch_time, 12) << ',' << fmt(r.first_switch_delta, 6) << ','
        << (r.correlation ? fmt(*r.correlation, 12) : "nan") << ',' << fmt(r.stats.wall_time, 6) << '\n';
  }

  std::printf("%-15s %-22s %10s %9s %16s %14s %10s\n", "model", "setting", "steps", "switches", "correlation",
              "switch delta", "wall (s)");
  for (const auto& r : rows) {
    std::printf("%-15s %-22s %10llu %9llu %16s %14s %10s\n", r.model.c_str(), r.setting.c_str(),
                static_cast<unsigned long long>(r.stats.intra_steps),
                static_cast<unsigned long long>(r.stats.switch_count), fmt(r.correlation).c_str(),
                fmt(r.first_switch_delta, 3).c_str(), fmt(r.stats.wall_time, 3).c_str());
  }
  std::cout << "summary written to " << csv_path.string() << "\n";
  return 0;
}

int cmd_translate(const std::string& source) {
  auto model = load_model(source);
  std::size_t needed = 0;
  fasim_model_translate_dump(model.get(), nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(fasim_model_translate_dump(model.get(), buf.data(), buf.size(), nullptr));
  std::cout << buf.c_str();
  return 0;
}

void add_sim_flags(CLI::App* cmd, SimFlags& f, bool with_engine) {
  cmd->add_option("model", f.model, "model file or built-in name")->required();
  if (with_engine) {
    cmd->add_option("--engine", f.engine, "fa, ref or naive")->check(CLI::IsMember({"fa", "ref", "naive"}));
  }
  cmd->add_option("--max-angle", f.max_angle, "FA angular cap per step, e.g. pi/10 or 0.314");
  cmd->add_option("--err", f.err, "FA error bound for step halving");
  cmd->add_option("--dt", f.dt, "fixed step of the ref/naive engines");
  cmd->add_option("--tmax", f.tmax, "simulated horizon in seconds (default: model's t_max)");
  cmd->add_option("--eq-tol", f.eq_tol, "tolerance of guard comparisons");
  cmd->add_option("--seed", f.seed, "seed for choosing among simultaneously enabled edges");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid automaton simulation by angular stepping"};
  app.require_subcommand(1);

  SimFlags sim;
  auto* simulate = app.add_subcommand("simulate", "run one engine and write its trace as CSV");
  add_sim_flags(simulate, sim, true);
  simulate->add_option("--out", sim.out, "trace CSV path");

  SimFlags cmp;
  double cmp_grid = 0.01;
  std::string cmp_dir;
  auto* compare = app.add_subcommand("compare", "run the FA and reference engines and compare them");
  add_sim_flags(compare, cmp, false);
  compare->add_option("--grid", cmp_grid, "resampling grid for correlation");
  compare->add_option("--out-dir", cmp_dir, "output directory (default: $FASIM_OUT_DIR or .)");

  std::vector<std::string> bench_models;
  double bench_grid = 0.01;
  std::string bench_dir;
  auto* bench = app.add_subcommand("bench", "run the built-in benchmarks over the parameter grid");
  bench->add_option("--models", bench_models, "models to run (default: all built-ins)")->delimiter(',');
  bench->add_option("--grid", bench_grid, "resampling grid for correlation");
  bench->add_option("--out-dir", bench_dir, "output directory (default: $FASIM_OUT_DIR or .)");

  std::string translate_model;
  bool dump = false;
  auto* translate = app.add_subcommand("translate", "show the normalisation and guard-angle tables");
  translate->add_option("model", translate_model, "model file or built-in name")->required();
  translate->add_flag("--dump", dump, "print the tables (default)");

  auto* list = app.add_subcommand("list", "list built-in models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (compare->parsed()) return cmd_compare(cmp, cmp_grid, cmp_dir);
    if (bench->parsed()) {
      if (bench_models.empty()) {
        for (std::size_t i = 0; i < fasim_builtin_count(); ++i) bench_models.emplace_back(fasim_builtin_name(i));
      }
      return cmd_bench(bench_models, bench_grid, bench_dir);
    }
    if (translate->parsed()) return cmd_translate(translate_model);
    if (list->parsed()) {
      for (std::size_t i = 0; i < fasim_builtin_count(); ++i) std::cout << fasim_builtin_name(i) << "\n";
      return 0;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << fasim_status_string(e.status) << ": " << e.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
