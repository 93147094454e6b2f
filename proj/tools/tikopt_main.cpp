// Command-line front end: single solves, parameter certification, benchmark
// sweeps, trace diagnostics, and profile recomputation. All numeric output is
// written with 17 significant digits.
//
// Exit codes:
//   0  success (run: converged)
//   1  configuration or input error
//   2  run stopped at the iteration cap
//   3  run diverged
//   4  certification failure (check-params)
//   5  diagnose window not covered with stride-1 iterates
//   6  diagnose found inequality violations outside the pre-certified regime

#include "tikopt/config.hpp"
#include "tikopt/diagnostics.hpp"
#include "tikopt/metrics.hpp"
#include "tikopt/schedules.hpp"
#include "tikopt/solvers.hpp"
#include "tikopt/sweep.hpp"
#include "tikopt/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIterationCap = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitCertification = 4;
constexpr int kExitStride = 5;
constexpr int kExitViolations = 6;

struct RunFlags {
  tikopt::RunConfig config;
  std::string start_csv;
  std::string fgap_ref = "auto";
  std::string iterates_window;
  std::string config_file;  // expanded before parsing; kept for --help
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  auto& c = flags.config;
  cmd->add_option("--config", flags.config_file,
                  "flat key=value file; explicit flags win over file values");
  cmd->add_option("--problem", c.problem_uri, "problem URI (quadratic:n=10, mm:file.mtx, libsvm:file, gauss-ls:n=12,seed=3)")->required();
  cmd->add_option("--method", c.method, "triga | nag | nadtr")->check(CLI::IsMember({"triga", "nag", "nadtr"}));
  cmd->add_option("--schedule", c.schedule_kind, "power | critical")->check(CLI::IsMember({"power", "critical"}));
  cmd->add_option("--p", c.p, "decay exponent for power schedules");
  cmd->add_option("--c", c.c, "coefficient for the critical schedule");
  cmd->add_option("--step-frac", c.step_fraction, "s = 1/(frac*L); 1.1 and 2.1 are the standard choices");
  cmd->add_option("--step", c.step_explicit, "explicit step size (overrides --step-frac)");
  cmd->add_option("--alpha", c.alpha, "inertia constant of the plain accelerated method");
  cmd->add_option("--nadtr-a", c.nadtr_a, "");
  cmd->add_option("--nadtr-c", c.nadtr_c, "");
  cmd->add_option("--nadtr-q", c.nadtr_q, "inertia exponent of the two-term method");
  cmd->add_option("--delta", c.delta, "damping level (default 2^{p/2}/sqrt(s))");
  cmd->add_option("--q", c.q, "analysis constant (default derived from the step bound)");
  cmd->add_option("--seed", c.seed, "seed for starts and synthetic data");
  cmd->add_option("--start", flags.start_csv, "explicit start point, comma-separated");
  cmd->add_option("--max-iters", c.max_iterations, "iteration cap");
  cmd->add_option("--grad-tol", c.gradient_tolerance, "gradient-norm stopping tolerance");
  cmd->add_option("--stride", c.stride, "record stride (0 = 1 up to k=1000 then 10)");
  cmd->add_option("--k-max", c.cert_horizon, "certification horizon");
  cmd->add_option("--iterates", flags.iterates_window, "store full iterates on LO:HI (for diagnose)");
  cmd->add_option("--fgap-ref", flags.fgap_ref, "auto | none | <value>: reference for f-gaps");
  cmd->add_option("--out", c.out_dir, "output directory");
}

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

json params_to_json(const tikopt::SolverParameters& p) {
  return {{"s", p.s},      {"delta", p.delta}, {"lambda", p.lambda}, {"q", p.q},
          {"a", p.a},      {"b", p.b},         {"k0", p.k0}};
}

tikopt::SolverParameters params_from_json(const json& j) {
  tikopt::SolverParameters p;
  p.s = j.at("s").get<double>();
  p.delta = j.at("delta").get<double>();
  p.lambda = j.at("lambda").get<double>();
  p.q = j.at("q").get<double>();
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.k0 = j.at("k0").get<long>();
  return p;
}

int cmd_run(RunFlags& flags) {
  auto& config = flags.config;
  if (!flags.start_csv.empty()) config.start = parse_csv_doubles(flags.start_csv);
  if (!flags.iterates_window.empty()) {
    auto colonpos = flags.iterates_window.find(':');
    if (colonpos == std::string::npos)
      throw tikopt::ConfigError("--iterates expects LO:HI");
    config.iterates_lo = std::stol(flags.iterates_window.substr(0, colonpos));
    config.iterates_hi = std::stol(flags.iterates_window.substr(colonpos + 1));
  }

  tikopt::ResolvedRun rr = tikopt::resolve_run(config);

  tikopt::RunOptions opts = rr.options;
  if (flags.fgap_ref == "auto") {
    if (!rr.problem->optimum_value())
      opts.f_reference = tikopt::reference_by_overconvergence(*rr.problem, config.seed);
  } else if (flags.fgap_ref != "none") {
    opts.f_reference = std::stod(flags.fgap_ref);
  }

  fs::create_directories(config.out_dir);
  json meta;
  meta["config"] = rr.resolved.to_json();
  meta["config"]["start"] = std::vector<double>(rr.x1.data(), rr.x1.data() + rr.x1.size());
  meta["problem_dimension"] = rr.problem->dimension();
  meta["lipschitz"] = rr.problem->lipschitz();
  meta["step"] = rr.step;
  if (config.method == "triga") {
    meta["params"] = params_to_json(rr.params);
    meta["certification"] = tikopt::certificate_to_json(rr.certificate);
    if (!rr.selection_error.empty()) meta["selection_error"] = rr.selection_error;
  }
  if (opts.f_reference) meta["f_reference"] = *opts.f_reference;

  int exit_code = kExitOk;
  tikopt::Trace trace;
  try {
    trace = tikopt::run(*rr.problem, rr.method, rr.x0, rr.x1, opts);
    exit_code = trace.status == tikopt::RunStatus::Converged ? kExitOk : kExitIterationCap;
    meta["status"] = trace.status == tikopt::RunStatus::Converged ? "converged" : "iteration_cap";
  } catch (const tikopt::DivergenceError& e) {
    trace = e.partial_trace();
    meta["status"] = "diverged";
    meta["divergence_k"] = e.k();
    exit_code = kExitDivergence;
  }

  meta["iterations"] = trace.final_k;
  meta["final_grad_norm"] = trace.final_grad_norm;
  meta["final_value"] = trace.final_value;
  if (!trace.records.empty()) meta["wall_time"] = trace.records.back().wall_time;

  tikopt::write_trace_csv((fs::path(config.out_dir) / "trace.csv").string(), trace);
  if (trace.window_hi >= trace.window_lo)
    tikopt::write_iterates_csv((fs::path(config.out_dir) / "iterates.csv").string(), trace);
  std::ofstream((fs::path(config.out_dir) / "meta.json").string()) << meta.dump(2) << '\n';

  std::cout << "status: " << meta["status"].get<std::string>() << ", iterations: "
            << trace.final_k << ", final |grad|: " << tikopt::fmt17(trace.final_grad_norm)
            << '\n';
  return exit_code;
}

struct CheckParamsFlags {
  double delta = 0.0;
  double q = 0.0;
  double p = 0.0;
  double c = 0.0;
  double lipschitz = 0.0;
  std::string problem_uri;
  double step_fraction = 1.1;
  double step_explicit = 0.0;
  long k_max = 1000000;
  bool prefer_large_a = false;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_check_params(const CheckParamsFlags& flags) {
  double lip = flags.lipschitz;
  if (lip <= 0.0) {
    if (flags.problem_uri.empty())
      throw tikopt::ConfigError("check-params: provide --L or --problem");
    lip = tikopt::make_problem(flags.problem_uri, flags.seed)->lipschitz();
  }
  if (flags.p <= 0.0 && flags.c <= 0.0)
    throw tikopt::ConfigError("check-params: provide --p (power) or --c (critical)");

  double step = flags.step_explicit > 0.0 ? flags.step_explicit : 1.0 / (flags.step_fraction * lip);
  double q = flags.q > 0.0 ? flags.q : tikopt::default_q(lip, step);
  bool critical = flags.c > 0.0;
  double delta =
      flags.delta > 0.0 ? flags.delta : tikopt::default_delta(critical ? 2.0 : flags.p, step);
  tikopt::TikhonovSchedule schedule =
      critical ? tikopt::TikhonovSchedule::critical(flags.c)
               : tikopt::TikhonovSchedule::power(flags.p);

  json report;
  report["lipschitz"] = lip;
  report["step"] = step;
  report["q"] = q;
  report["delta"] = delta;
  report["schedule"] = schedule.describe();

  try {
    tikopt::SelectedParameters sel =
        tikopt::select_parameters(delta, q, lip, step, flags.prefer_large_a);
    tikopt::K1Report k1 = tikopt::check_K1(sel.params, lip);
    tikopt::K0Certificate cert = tikopt::find_k0(sel.params, schedule, lip, flags.k_max);

    report["table_row"] = sel.table_row;
    report["step_bound"] = sel.step_bound;
    report["params"] = params_to_json(sel.params);
    report["K1_slack"] = k1.slack;
    report["certification"] = tikopt::certificate_to_json(cert);

    // per-condition slack arrays on a geometric sample of the verified range
    if (cert.certified) {
      json ks = json::array();
      std::array<json, 4> lhs_arrays = {json::array(), json::array(), json::array(),
                                        json::array()};
      long k = cert.k0;
      while (k <= cert.verified_up_to) {
        tikopt::K0Report r = tikopt::check_K0_at(sel.params, schedule, lip, k);
        ks.push_back(k);
        for (std::size_t i = 0; i < 4; ++i) lhs_arrays[i].push_back(r.lhs[i]);
        if (k == cert.verified_up_to) break;
        k = std::min(cert.verified_up_to,
                     std::max(k + 1, static_cast<long>(std::ceil(1.3 * double(k)))));
      }
      report["K0_samples"] = {{"k", ks},
                              {"lhs_i", lhs_arrays[0]},
                              {"lhs_ii", lhs_arrays[1]},
                              {"lhs_iii", lhs_arrays[2]},
                              {"lhs_iv", lhs_arrays[3]}};
    }

    std::cout << "selected (row " << sel.table_row << "): a=" << tikopt::fmt17(sel.params.a)
              << " b=" << tikopt::fmt17(sel.params.b)
              << " lambda=" << tikopt::fmt17(sel.params.lambda) << " q=" << tikopt::fmt17(q)
              << " delta=" << tikopt::fmt17(delta) << '\n';
    std::cout << "step: s=" << tikopt::fmt17(step) << " (bound " << tikopt::fmt17(sel.step_bound)
              << ")\n";
    std::cout << "K1 slacks:";
    for (double s : k1.slack) std::cout << ' ' << tikopt::fmt17(s);
    std::cout << '\n';

    bool certified = cert.certified;
    double c_min = 0.0;
    if (critical) {
      c_min = tikopt::critical_c_bound(sel.params);
      report["critical_c_bound"] = c_min;
      std::cout << "critical coefficient bound: c_min=" << tikopt::fmt17(c_min)
                << " (given c=" << tikopt::fmt17(flags.c) << ")\n";
      if (flags.c <= c_min) {
        std::cout << "FAIL: c is below the admissible bound\n";
        certified = false;
        report["failure"] = "c <= c_min";
      }
    }
    if (cert.certified) {
      std::cout << "certified: k0=" << cert.k0 << ", verified up to " << cert.verified_up_to
                << (cert.monotone_regime ? "" : " (monotone-regime check FAILED, downgraded)")
                << '\n';
    } else {
      std::cout << "certification FAILED: " << cert.failure_message << '\n';
    }
    if (!flags.out.empty()) std::ofstream(flags.out) << report.dump(2) << '\n';
    return certified && cert.monotone_regime ? kExitOk : kExitCertification;
  } catch (const tikopt::SelectionError& e) {
    std::cout << "selection FAILED: " << e.what() << '\n';
    report["failure"] = e.what();
    if (!flags.out.empty()) std::ofstream(flags.out) << report.dump(2) << '\n';
    return kExitCertification;
  } catch (const tikopt::CertificationError& e) {
    std::cout << "certification FAILED: " << e.what() << '\n';
    report["failure"] = e.what();
    if (!flags.out.empty()) std::ofstream(flags.out) << report.dump(2) << '\n';
    return kExitCertification;
  }
}

int cmd_sweep(tikopt::SweepConfig& config) {
  config.problems.erase(
      std::remove_if(config.problems.begin(), config.problems.end(),
                     [](const std::string& s) { return s.empty(); }),
      config.problems.end());
  tikopt::SweepOutcome outcome = tikopt::run_sweep(config);
  tikopt::write_sweep_outputs(config, outcome);
  std::cout << "sweep: " << outcome.succeeded << " cells ran, " << outcome.failed
            << " recorded as skipped/failed; outputs in " << config.out_dir << '\n';
  return outcome.succeeded > 0 ? kExitOk : kExitConfig;
}

struct DiagnoseFlags {
  std::string trace_dir;
  long from = 0;
  long to = 0;
  std::string out;
};

int cmd_diagnose(const DiagnoseFlags& flags) {
  fs::path dir(flags.trace_dir);
  std::ifstream meta_in((dir / "meta.json").string());
  if (!meta_in) throw tikopt::ConfigError("diagnose: missing meta.json in " + flags.trace_dir);
  json meta = json::parse(meta_in);

  tikopt::RunConfig config = tikopt::RunConfig::from_json(meta.at("config"));
  if (config.method != "triga")
    throw tikopt::ConfigError("diagnose: trace was not produced by the regularized method");
  auto problem = tikopt::make_problem(config.problem_uri, config.seed);
  if (!problem->min_norm_solution())
    throw tikopt::ConfigError("diagnose: x* unavailable for this problem family");

  tikopt::SolverParameters params = params_from_json(meta.at("params"));
  tikopt::TikhonovSchedule schedule = config.schedule_kind == "critical"
                                          ? tikopt::TikhonovSchedule::critical(config.c)
                                          : tikopt::TikhonovSchedule::power(config.p);

  tikopt::Trace trace = tikopt::read_trace_csv((dir / "trace.csv").string());
  if (fs::exists(dir / "iterates.csv"))
    tikopt::read_iterates_csv((dir / "iterates.csv").string(), trace);

  long lo = flags.from > 0 ? flags.from : std::max<long>(params.k0, 2);
  long hi = flags.to > 0 ? flags.to : lo + 500;
  if (!(trace.window_lo <= lo - 1 && trace.window_hi >= hi + 1)) {
    std::cerr << "diagnose: window [" << lo << ", " << hi
              << "] needs stride-1 iterates on [" << (lo - 1) << ", " << (hi + 1)
              << "]; rerun with --iterates " << (lo - 1) << ':' << (hi + 1) << '\n';
    return kExitStride;
  }

  tikopt::AuditReport audit =
      tikopt::audit_energy_decay(trace, lo, hi, *problem, schedule, params);
  auto curve_violations = tikopt::check_viscosity_lemmas(*problem, schedule, lo, hi);
  auto bound_violations =
      tikopt::check_energy_bounds(trace, lo, hi, *problem, schedule, params);

  json report;
  report["window"] = {lo, hi};
  report["params"] = params_to_json(params);
  report["energy_audit"] = tikopt::audit_to_json(audit);
  report["viscosity_lemmas"] = tikopt::violations_to_json(curve_violations);
  report["level_bounds"] = tikopt::violations_to_json(bound_violations);

  long total = audit.violation_count + static_cast<long>(curve_violations.size()) +
               static_cast<long>(bound_violations.size());
  report["violations_total"] = total;

  fs::path out = flags.out.empty() ? dir / "diagnose.json" : fs::path(flags.out);
  std::ofstream(out.string()) << report.dump(2) << '\n';
  std::cout << "diagnose: " << total << " violations on [" << lo << ", " << hi << "] ("
            << audit.pre_regime_count << " pre-regime entries excluded); report: " << out
            << '\n';
  return total == 0 ? kExitOk : kExitViolations;
}

struct ProfileFlags {
  std::string costs_csv;
  std::string out = "profile.csv";
};

int cmd_profile(const ProfileFlags& flags) {
  std::vector<std::string> solvers, problems;
  tikopt::Matrix costs;
  tikopt::read_costs_csv(flags.costs_csv, solvers, problems, costs);
  tikopt::PerformanceProfile profile = tikopt::performance_profile(costs, solvers, problems);
  tikopt::write_profile_csv(flags.out, profile);
  for (const auto& dropped : profile.dropped_problems)
    std::cerr << "warning: dropped problem where every solver failed: " << dropped << '\n';
  std::cout << "profile written to " << flags.out << '\n';
  return kExitOk;
}

// Expands "--config FILE" into "--key value" tokens placed right after the
// subcommand, skipping keys whose flag already appears explicitly (so command
// line beats file).
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") path = args[i + 1];
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw tikopt::ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw tikopt::ConfigError("config file: expected key=value, got '" + line + "'");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  std::vector<std::string> expanded;
  expanded.push_back(args.front());  // the subcommand
  for (const auto& [key, value] : pairs) {
    std::string flag = "--" + key;
    bool explicit_flag = false;
    for (const auto& a : args)
      if (a == flag) explicit_flag = true;
    if (!explicit_flag) {
      expanded.push_back(flag);
      expanded.push_back(value);
    }
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order solvers with vanishing regularization: runs, certification, benchmarks"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "solve one problem and write trace.csv + meta.json");
  add_run_flags(run_cmd, run_flags);

  CheckParamsFlags cp_flags;
  auto* cp_cmd = app.add_subcommand("check-params", "select and certify an analysis tuple");
  cp_cmd->add_option("--delta", cp_flags.delta, "damping level (default 2^{p/2}/sqrt(s))");
  cp_cmd->add_option("--q", cp_flags.q, "analysis constant (default from the step bound)");
  cp_cmd->add_option("--p", cp_flags.p, "power schedule exponent");
  cp_cmd->add_option("--c", cp_flags.c, "critical schedule coefficient");
  cp_cmd->add_option("--L", cp_flags.lipschitz, "Lipschitz constant");
  cp_cmd->add_option("--problem", cp_flags.problem_uri, "derive L from a problem URI");
  cp_cmd->add_option("--step-frac", cp_flags.step_fraction, "s = 1/(frac*L)");
  cp_cmd->add_option("--step", cp_flags.step_explicit, "explicit step size");
  cp_cmd->add_option("--k-max", cp_flags.k_max, "certification horizon");
  cp_cmd->add_flag("--large-a", cp_flags.prefer_large_a, "use the unbounded-a table rows");
  cp_cmd->add_option("--seed", cp_flags.seed, "seed (for --problem URIs with random data)");
  cp_cmd->add_option("--out", cp_flags.out, "write the JSON report here");

  tikopt::SweepConfig sweep_config;
  sweep_config.methods = {"triga", "nadtr"};
  auto* sweep_cmd = app.add_subcommand("sweep", "run method x problem x p cells and emit profiles");
  sweep_cmd->add_option("--config", run_flags.config_file,
                        "flat key=value file; explicit flags win over file values");
  sweep_cmd->add_option("--problems", sweep_config.problems, "problem URIs (space-separated)")->required();
  sweep_cmd->add_option("--methods", sweep_config.methods, "methods (default: triga nadtr)");
  sweep_cmd->add_option("--p-values", sweep_config.p_values, "decay exponents");
  sweep_cmd->add_option("--criteria", sweep_config.criteria, "time and/or iterations");
  sweep_cmd->add_option("--seed", sweep_config.seed, "shared seed (starts + data)");
  sweep_cmd->add_option("--step-frac", sweep_config.step_fraction, "s = 1/(frac*L)");
  sweep_cmd->add_option("--step", sweep_config.step_explicit, "explicit step size");
  sweep_cmd->add_option("--max-iters", sweep_config.max_iterations, "iteration cap");
  sweep_cmd->add_option("--grad-tol", sweep_config.gradient_tolerance, "stopping tolerance");
  sweep_cmd->add_option("--out", sweep_config.out_dir, "output directory");

  DiagnoseFlags diag_flags;
  auto* diag_cmd = app.add_subcommand("diagnose", "audit a recorded trace window");
  diag_cmd->add_option("--trace-dir", diag_flags.trace_dir, "directory with trace.csv/meta.json/iterates.csv")->required();
  diag_cmd->add_option("--from", diag_flags.from, "window start (default k0)");
  diag_cmd->add_option("--to", diag_flags.to, "window end (default k0+500)");
  diag_cmd->add_option("--out", diag_flags.out, "report path (default <dir>/diagnose.json)");

  ProfileFlags prof_flags;
  auto* prof_cmd = app.add_subcommand("profile", "recompute profile curves from a costs CSV");
  prof_cmd->add_option("--costs", prof_flags.costs_csv, "costs CSV (from sweep)")->required();
  prof_cmd->add_option("--out", prof_flags.out, "output CSV");

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const tikopt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::vector<const char*> argv2;
  argv2.push_back(argc > 0 ? argv[0] : "tikopt");
  for (const auto& a : args) argv2.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (cp_cmd->parsed()) return cmd_check_params(cp_flags);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_config);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_flags);
    if (prof_cmd->parsed()) return cmd_profile(prof_flags);
  } catch (const tikopt::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const tikopt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
