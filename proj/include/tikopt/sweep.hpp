#pragma once

#include "tikopt/config.hpp"
#include "tikopt/metrics.hpp"
#include "tikopt/trace_io.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tikopt {

struct SweepConfig {
  std::vector<std::string> problems;
  std::vector<std::string> methods;  // triga | nadtr | nag
  std::vector<double> p_values = {0.3, 0.6, 0.9, 1.2, 1.5, 1.95, 1.99};
  std::uint64_t seed = 1;
  std::vector<std::string> criteria = {"time", "iterations"};
  double step_fraction = 1.1;
  double step_explicit = 0.0;
  long max_iterations = 100000;
  double gradient_tolerance = 1e-6;
  double alpha = 3.0;
  double nadtr_a = 1.0, nadtr_c = 1.0, nadtr_q = 0.99;
  std::string out_dir = "sweep-out";
};

struct SweepCell {
  std::string solver_label;  // e.g. "triga_p1.95"
  std::string problem_uri;
  RunConfig config;
};

struct SweepCellResult {
  CellResult cell;
  bool ran = false;
  std::string note;  // "certification-skipped: ..." or "diverged: ..."
};

inline int worker_count_from_env() {
  if (const char* env = std::getenv("TIKOPT_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct SweepOutcome {
  std::vector<std::string> solvers;
  std::vector<std::string> problems;
  std::map<std::string, std::map<std::string, SweepCellResult>> results;
  long succeeded = 0;
  long failed = 0;
};

namespace detail {

inline std::string p_label(double p) {
  std::ostringstream out;
  out << p;
  return out.str();
}

}  // namespace detail

/// Enumerates method x problem x p cells. The inertia-only method takes no
/// decay exponent and contributes one cell per problem.
inline std::vector<SweepCell> enumerate_cells(const SweepConfig& sweep) {
  if (sweep.problems.empty()) throw ConfigError("sweep: empty problem list");
  if (sweep.methods.empty()) throw ConfigError("sweep: empty method list");
  for (double p : sweep.p_values)
    if (!(p > 0.0 && p < 2.0)) throw ConfigError("sweep: p values must lie in (0, 2)");

  std::vector<SweepCell> cells;
  for (const auto& method : sweep.methods) {
    std::vector<double> ps = method == "nag" ? std::vector<double>{0.0} : sweep.p_values;
    for (double p : ps) {
      std::string label = method == "nag" ? method : method + "_p" + detail::p_label(p);
      for (const auto& uri : sweep.problems) {
        SweepCell cell;
        cell.solver_label = label;
        cell.problem_uri = uri;
        RunConfig& cfg = cell.config;
        cfg.problem_uri = uri;
        cfg.method = method;
        cfg.schedule_kind = "power";
        cfg.p = method == "nag" ? 1.95 : p;
        cfg.step_fraction = sweep.step_fraction;
        cfg.step_explicit = sweep.step_explicit;
        cfg.seed = sweep.seed;
        cfg.max_iterations = sweep.max_iterations;
        cfg.gradient_tolerance = sweep.gradient_tolerance;
        cfg.alpha = sweep.alpha;
        cfg.nadtr_a = sweep.nadtr_a;
        cfg.nadtr_c = sweep.nadtr_c;
        cfg.nadtr_q = sweep.nadtr_q;
        cfg.certify = false;  // the per-index scan is a check-params concern
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

/// Runs all cells in a worker pool (TIKOPT_WORKERS overrides the pool size).
/// Problems are constructed once and shared read-only across workers; every
/// compared method starts from the same seeded point. Each cell writes its
/// trace and meta into its own directory, so workers never share a file.
inline SweepOutcome run_sweep(const SweepConfig& sweep) {
  namespace fs = std::filesystem;
  std::vector<SweepCell> cells = enumerate_cells(sweep);

  // shared immutable problems, one per uri
  std::map<std::string, std::unique_ptr<Problem>> problems;
  std::map<std::string, Vector> starts;
  for (const auto& uri : sweep.problems) {
    if (problems.count(uri)) continue;
    problems[uri] = make_problem(uri, sweep.seed);
    starts[uri] = gaussian_vector(sweep.seed, problems[uri]->dimension());
  }

  SweepOutcome outcome;
  for (const auto& cell : cells) {
    if (std::find(outcome.solvers.begin(), outcome.solvers.end(), cell.solver_label) ==
        outcome.solvers.end())
      outcome.solvers.push_back(cell.solver_label);
  }
  outcome.problems = sweep.problems;

  std::mutex mutex;
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const SweepCell& cell = cells[i];
      SweepCellResult result;

      fs::path dir = fs::path(sweep.out_dir) / "cells" / cell.solver_label /
                     detail::sanitize(cell.problem_uri);
      fs::create_directories(dir);

      try {
        const Problem& problem = *problems.at(cell.problem_uri);
        double lip = problem.lipschitz();
        double step = cell.config.step_explicit > 0.0
                          ? cell.config.step_explicit
                          : 1.0 / (cell.config.step_fraction * lip);

        Method method;
        SolverParameters params;
        if (cell.config.method == "triga") {
          double q = default_q(lip, step);
          double delta = default_delta(cell.config.p, step);
          // selection failure = no admissible analysis tuple for this cell
          SelectedParameters sel = select_parameters(delta, q, lip, step);
          params = sel.params;
          method = TrigaMethod{TikhonovSchedule::power(cell.config.p), params};
        } else if (cell.config.method == "nag") {
          method = NagMethod{step, cell.config.alpha};
        } else if (cell.config.method == "nadtr") {
          NadtrParameters np;
          np.s = step;
          np.a = cell.config.nadtr_a;
          np.c = cell.config.nadtr_c;
          np.p = cell.config.p;
          np.q = cell.config.nadtr_q;
          method = NadtrMethod{np};
        } else {
          throw ConfigError("unknown method '" + cell.config.method + "'");
        }

        RunOptions opts;
        opts.stop.max_iterations = cell.config.max_iterations;
        opts.stop.gradient_tolerance = cell.config.gradient_tolerance;
        const Vector& start = starts.at(cell.problem_uri);

        Trace trace = run(problem, method, start, start, opts);
        result.cell = cell_from_trace(trace);
        result.ran = true;
        write_trace_csv((dir / "trace.csv").string(), trace);

        nlohmann::json meta = cell.config.to_json();
        meta["solver_label"] = cell.solver_label;
        meta["status"] =
            trace.status == RunStatus::Converged ? "converged" : "iteration_cap";
        meta["iterations"] = trace.final_k;
        meta["final_grad_norm"] = trace.final_grad_norm;
        std::ofstream((dir / "meta.json").string()) << meta.dump(2) << '\n';
      } catch (const SelectionError& e) {
        result.note = std::string("certification-skipped: ") + e.what();
        std::ofstream((dir / "skipped.txt").string()) << result.note << '\n';
      } catch (const DivergenceError& e) {
        result.note = std::string("diverged: ") + e.what();
        write_trace_csv((dir / "trace.csv").string(), e.partial_trace());
        std::ofstream((dir / "diverged.txt").string()) << result.note << '\n';
      } catch (const std::exception& e) {
        result.note = std::string("error: ") + e.what();
        std::ofstream((dir / "error.txt").string()) << result.note << '\n';
      }

      std::lock_guard<std::mutex> lock(mutex);
      outcome.results[cell.solver_label][cell.problem_uri] = std::move(result);
    }
  };

  int workers = std::min<int>(worker_count_from_env(), static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < std::max(1, workers); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  for (const auto& [solver, row] : outcome.results)
    for (const auto& [uri, res] : row) (res.ran ? outcome.succeeded : outcome.failed) += 1;
  return outcome;
}

/// Aggregation: cost matrices, per-criterion profile curves, and a flat
/// summary table. Single-threaded and order-independent.
inline void write_sweep_outputs(const SweepConfig& sweep, const SweepOutcome& outcome) {
  namespace fs = std::filesystem;
  fs::create_directories(sweep.out_dir);

  std::map<std::string, std::map<std::string, CellResult>> cells;
  for (const auto& [solver, row] : outcome.results)
    for (const auto& [uri, res] : row) {
      CellResult c = res.cell;
      if (!res.ran) {
        c.status = RunStatus::IterationCap;
        c.final_grad_norm = std::numeric_limits<double>::infinity();
      }
      cells[solver][uri] = c;
    }

  for (const auto& crit_name : sweep.criteria) {
    CostCriterion crit =
        crit_name == "time" ? CostCriterion::CpuTime : CostCriterion::Iterations;
    ComparisonSummary summary =
        summarize_comparison(cells, crit, sweep.gradient_tolerance);
    write_costs_csv((fs::path(sweep.out_dir) / ("costs_" + crit_name + ".csv")).string(),
                    summary.solvers, summary.problems, summary.costs);
    write_profile_csv((fs::path(sweep.out_dir) / ("profile_" + crit_name + ".csv")).string(),
                      summary.profile);
  }

  std::ofstream table((fs::path(sweep.out_dir) / "summary.csv").string());
  table << "solver,problem,ran,status,iterations,wall_time,note\n";
  for (const auto& [solver, row] : outcome.results)
    for (const auto& [uri, res] : row) {
      table << solver << ',' << uri << ',' << (res.ran ? 1 : 0) << ','
            << (res.cell.status == RunStatus::Converged ? "converged" : "iteration_cap") << ','
            << res.cell.iterations << ',' << fmt17(res.cell.wall_time) << ','
            << res.note << '\n';
    }
}

}  // namespace tikopt
