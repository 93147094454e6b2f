// End-to-end checks of the command-line tool: exit-code discipline, file
// outputs, config round-trip, and byte-level determinism.

#include "tikopt/config.hpp"
#include "tikopt/sweep.hpp"
#include "tikopt/trace_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string cli_path() { return TIKOPT_CLI_PATH; }

int run_cli(const std::string& args, const std::string& log_name = "cli.log") {
  std::string cmd = cli_path() + " " + args + " > " + log_name + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path(::testing::TempDir()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, RunWritesTraceAndResolvedMeta) {
  fs::path dir = fresh_dir("cli_run");
  int rc = run_cli("run --problem quadratic:n=10 --method triga --p 1.95 --step-frac 1.1"
                   " --max-iters 20000 --k-max 1000 --out " + dir.string());
  EXPECT_EQ(rc, 0);  // reaches the 1e-6 gradient tolerance
  ASSERT_TRUE(fs::exists(dir / "trace.csv"));
  ASSERT_TRUE(fs::exists(dir / "meta.json"));

  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  // delta resolves to 2^{p/2}/sqrt(s) with s = 1/(1.1 L), L = 2
  EXPECT_NEAR(meta["config"]["delta"].get<double>(), 2.915517054407098, 1e-9);
  EXPECT_EQ(meta["status"], "converged");
  // resolved meta re-loads into an equivalent config
  tikopt::RunConfig back = tikopt::RunConfig::from_json(meta["config"]);
  EXPECT_EQ(back.problem_uri, "quadratic:n=10");
  EXPECT_EQ(back.method, "triga");
  EXPECT_DOUBLE_EQ(back.p, 1.95);
  EXPECT_EQ(back.max_iterations, 20000);
}

TEST(Cli, RunFromOptimumStopsAtOnce) {
  fs::path dir = fresh_dir("cli_nag");
  int rc = run_cli("run --problem quadratic:n=1 --method nag --alpha 3 --start 0.5,0.5 --out " +
                   dir.string());
  EXPECT_EQ(rc, 0);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_EQ(meta["iterations"].get<long>(), 1);
}

TEST(Cli, MatrixMarketProblemEndToEnd) {
  fs::path dir = fresh_dir("cli_mm");
  std::ofstream(dir / "small.mtx") << "%%MatrixMarket matrix coordinate real general\n"
                                    << "3 2 4\n1 1 2\n2 2 1\n3 1 1\n3 2 1\n";
  int rc = run_cli("run --problem mm:" + (dir / "small.mtx").string() +
                   " --method triga --p 1.5 --seed 4 --max-iters 50000 --k-max 100 --out " +
                   dir.string());
  EXPECT_EQ(rc, 0);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_GT(meta["lipschitz"].get<double>(), 0.0);
}

TEST(Cli, LogisticReferenceByOverconvergence) {
  fs::path dir = fresh_dir("cli_fgap");
  std::string data = std::string(TIKOPT_DATA_DIR) + "/binary_clusters.libsvm";
  int rc = run_cli("run --problem libsvm:" + data +
                   " --method triga --p 1.95 --max-iters 200 --out " + dir.string());
  EXPECT_EQ(rc, 2);  // 200 iterations will not reach 1e-6 here
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  ASSERT_TRUE(meta.contains("f_reference"));
  // the reference sits at or below every recorded value, so gaps stay positive
  tikopt::Trace trace = tikopt::read_trace_csv((dir / "trace.csv").string());
  for (const auto& r : trace.records) EXPECT_GE(r.f_gap, 0.0);
}

TEST(Cli, BundledSparseMatrixThroughSweep) {
  fs::path dir = fresh_dir("cli_mm_sweep");
  std::string mtx = std::string(TIKOPT_DATA_DIR) + "/sparse_rect_60x40.mtx";
  int rc = run_cli("sweep --problems mm:" + mtx +
                   " gauss-ls:n=8,seed=2 --methods triga nadtr --p-values 1.95 --seed 5"
                   " --out " + dir.string());
  EXPECT_EQ(rc, 0);
  std::string summary = slurp(dir / "summary.csv");
  EXPECT_NE(summary.find("sparse_rect_60x40"), std::string::npos);
}

TEST(Cli, CriticalScheduleRunRecordsCoefficient) {
  fs::path dir = fresh_dir("cli_critical");
  int rc = run_cli("run --problem quadratic:n=10 --method triga --schedule critical --c 149"
                   " --step-frac 2.1 --q 2 --delta 1.9 --max-iters 30000 --k-max 5000 --out " +
                   dir.string());
  EXPECT_EQ(rc, 0);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_EQ(meta["config"]["schedule"], "critical");
  EXPECT_DOUBLE_EQ(meta["config"]["c"].get<double>(), 149.0);
  EXPECT_TRUE(meta["certification"]["certified"].get<bool>());
}

TEST(Cli, MissingMatrixFileIsConfigError) {
  EXPECT_EQ(run_cli("run --problem mm:nofile.mtx --out " +
                    fresh_dir("cli_missing").string()),
            1);
}

TEST(Cli, PowerExponentTwoIsRedirectedToCritical) {
  EXPECT_EQ(run_cli("run --problem quadratic:n=2 --method triga --p 2.0 --out " +
                    fresh_dir("cli_p2").string()),
            1);
}

TEST(Cli, IterationCapExitCode) {
  fs::path dir = fresh_dir("cli_cap");
  int rc = run_cli("run --problem quadratic:n=10 --method triga --p 0.3 --max-iters 50"
                   " --k-max 100 --out " + dir.string());
  EXPECT_EQ(rc, 2);
}

TEST(Cli, DivergenceExitCode) {
  fs::path dir = fresh_dir("cli_div");
  int rc = run_cli("run --problem quadratic:n=2 --method nag --step 1e8 --out " + dir.string());
  EXPECT_EQ(rc, 3);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_EQ(meta["status"], "diverged");
}

TEST(Cli, CheckParamsCertifiesAndRejects) {
  fs::path dir = fresh_dir("cli_cp");
  EXPECT_EQ(run_cli("check-params --delta 1 --q 1 --p 0.6 --L 1 --step 0.4 --k-max 20000 --out " +
                    (dir / "report.json").string()),
            0);
  auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(report["certification"]["certified"].get<bool>());
  ASSERT_TRUE(report.contains("K0_samples"));
  for (const auto& v : report["K0_samples"]["lhs_i"]) EXPECT_LE(v.get<double>(), 0.0);
  // step at the admissibility bound for the given q
  EXPECT_EQ(run_cli("check-params --delta 1 --q 1 --p 0.6 --L 1 --step 0.6 --k-max 1000"), 4);
  // critical coefficient below the admissible bound
  EXPECT_EQ(run_cli("check-params --delta 1.9 --q 2 --c 30 --L 2 --step-frac 2.1 --k-max 20000"),
            4);
}

TEST(Cli, SweepProducesProfilesAndSummary) {
  fs::path dir = fresh_dir("cli_sweep");
  int rc = run_cli("sweep --problems quadratic:n=4 gauss-ls:n=6,seed=5 --methods triga nadtr"
                   " --p-values 1.95 --seed 3 --max-iters 30000 --out " + dir.string());
  EXPECT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(dir / "profile_time.csv"));
  EXPECT_TRUE(fs::exists(dir / "profile_iterations.csv"));
  EXPECT_TRUE(fs::exists(dir / "costs_iterations.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "cells"));
}

TEST(Cli, SweepProfileHasOneColumnPerExponent) {
  fs::path dir = fresh_dir("cli_sweep_pgrid");
  int rc = run_cli("sweep --problems quadratic:n=4 quadratic:n=8 --methods triga"
                   " --p-values 0.9 1.95 --seed 3 --out " + dir.string());
  EXPECT_EQ(rc, 0);
  std::string header = slurp(dir / "profile_iterations.csv").substr(0, 64);
  EXPECT_NE(header.find("rho_triga_p0.9"), std::string::npos);
  EXPECT_NE(header.find("rho_triga_p1.95"), std::string::npos);
}

TEST(Cli, SweepWorkerPoolMatchesSerialExecution) {
  // same cells, 1 worker vs 4 workers: per-cell iteration counts must agree
  tikopt::SweepConfig sweep;
  sweep.problems = {"quadratic:n=4", "gauss-ls:n=6,seed=5"};
  sweep.methods = {"triga", "nadtr"};
  sweep.p_values = {1.5, 1.95};
  sweep.seed = 3;
  sweep.max_iterations = 30000;

  setenv("TIKOPT_WORKERS", "1", 1);
  sweep.out_dir = (fs::path(::testing::TempDir()) / "sweep_serial").string();
  fs::remove_all(sweep.out_dir);
  tikopt::SweepOutcome serial = tikopt::run_sweep(sweep);

  setenv("TIKOPT_WORKERS", "4", 1);
  sweep.out_dir = (fs::path(::testing::TempDir()) / "sweep_pool").string();
  fs::remove_all(sweep.out_dir);
  tikopt::SweepOutcome pooled = tikopt::run_sweep(sweep);
  unsetenv("TIKOPT_WORKERS");

  ASSERT_EQ(serial.results.size(), pooled.results.size());
  for (const auto& [solver, row] : serial.results) {
    for (const auto& [uri, res] : row) {
      const auto& other = pooled.results.at(solver).at(uri);
      EXPECT_EQ(res.ran, other.ran) << solver << " " << uri;
      EXPECT_EQ(res.cell.iterations, other.cell.iterations) << solver << " " << uri;
      EXPECT_EQ(res.cell.final_grad_norm, other.cell.final_grad_norm) << solver << " " << uri;
    }
  }
}

TEST(Cli, UncertifiedRunStillExecutesAndRecordsWhy) {
  // an explicit q incompatible with the step leaves no analysis tuple; the
  // iteration itself only needs (s, delta) and must still run
  fs::path dir = fresh_dir("cli_uncert");
  int rc = run_cli("run --problem quadratic:n=4 --method triga --p 1.0 --step-frac 1.1"
                   " --q 0.5 --max-iters 40 --grad-tol 0 --out " + dir.string());
  EXPECT_EQ(rc, 2);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_TRUE(meta.contains("selection_error"));
  EXPECT_EQ(meta["iterations"].get<long>(), 40);
}

TEST(Cli, SweepWithEmptyProblemsFails) {
  EXPECT_EQ(run_cli("sweep --problems \"\" --methods triga --out " +
                    fresh_dir("cli_sweep_empty").string()),
            1);
}

TEST(Cli, DiagnoseCleanWindowAndStrideGuard) {
  fs::path dir = fresh_dir("cli_diag");
  // certified setup (frozen k0 = 578); record iterates around the window
  int rc = run_cli(
      "run --problem quadratic:n=4 --method triga --p 1.0 --step-frac 2.1 --q 0.95 --delta 1"
      " --k-max 5000 --max-iters 1000 --grad-tol 0 --stride 1 --iterates 500:1000 --out " +
      dir.string());
  EXPECT_EQ(rc, 2);  // runs to the cap by construction
  ASSERT_TRUE(fs::exists(dir / "iterates.csv"));

  int diag = run_cli("diagnose --trace-dir " + dir.string() + " --from 578 --to 900");
  EXPECT_EQ(diag, 0);
  EXPECT_TRUE(fs::exists(dir / "diagnose.json"));
  auto report = nlohmann::json::parse(slurp(dir / "diagnose.json"));
  EXPECT_EQ(report["violations_total"].get<long>(), 0);

  // window outside the stored iterates must demand a stride-1 rerun
  EXPECT_EQ(run_cli("diagnose --trace-dir " + dir.string() + " --from 578 --to 1000"), 5);

  // tampering one stored iterate must surface as violations (dedicated code)
  {
    std::ifstream in(dir / "iterates.csv");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    std::size_t victim = lines.size() / 2;
    auto comma = lines[victim].find(',');
    std::string k_part = lines[victim].substr(0, comma);
    lines[victim] = k_part + ",9.5,9.5,9.5,9.5,9.5,9.5,9.5,9.5";
    std::ofstream out(dir / "iterates.csv");
    for (const auto& l : lines) out << l << '\n';
  }
  EXPECT_EQ(run_cli("diagnose --trace-dir " + dir.string() + " --from 578 --to 900"), 6);
}

TEST(Cli, DiagnoseRefusesProblemsWithoutKnownMinimizer) {
  fs::path dir = fresh_dir("cli_diag_logistic");
  std::string data = std::string(TIKOPT_DATA_DIR) + "/binary_clusters.libsvm";
  int rc = run_cli("run --problem libsvm:" + data +
                   " --method triga --p 1.0 --max-iters 200 --grad-tol 0 --stride 1"
                   " --iterates 1:200 --k-max 100 --fgap-ref none --out " + dir.string());
  EXPECT_EQ(rc, 2);
  EXPECT_EQ(run_cli("diagnose --trace-dir " + dir.string() + " --from 5 --to 100"), 1);
}

TEST(Cli, ProfileRecomputationFromCosts) {
  fs::path dir = fresh_dir("cli_profile");
  std::ofstream(dir / "costs.csv") << "problem,s1,s2\np1,1,2\np2,4,2\n";
  int rc = run_cli("profile --costs " + (dir / "costs.csv").string() + " --out " +
                   (dir / "profile.csv").string());
  EXPECT_EQ(rc, 0);
  std::string text = slurp(dir / "profile.csv");
  EXPECT_NE(text.find("t,rho_s1,rho_s2"), std::string::npos);
}

TEST(Cli, SeedDeterminismByteIdenticalModuloWallTime) {
  fs::path d1 = fresh_dir("cli_det1");
  fs::path d2 = fresh_dir("cli_det2");
  std::string base = "run --problem gauss-ls:n=8,seed=11 --method triga --p 1.5"
                     " --step-frac 2.1 --seed 7 --max-iters 2000 --grad-tol 0 --k-max 100 --out ";
  ASSERT_EQ(run_cli(base + d1.string()), 2);
  ASSERT_EQ(run_cli(base + d2.string()), 2);

  tikopt::Trace t1 = tikopt::read_trace_csv((d1 / "trace.csv").string());
  tikopt::Trace t2 = tikopt::read_trace_csv((d2 / "trace.csv").string());
  ASSERT_EQ(t1.records.size(), t2.records.size());
  for (std::size_t i = 0; i < t1.records.size(); ++i) {
    EXPECT_EQ(t1.records[i].k, t2.records[i].k);
    EXPECT_EQ(t1.records[i].f_gap, t2.records[i].f_gap);
    EXPECT_EQ(t1.records[i].grad_norm, t2.records[i].grad_norm);
    EXPECT_EQ(t1.records[i].velocity, t2.records[i].velocity);
    EXPECT_EQ(t1.records[i].epsilon, t2.records[i].epsilon);
  }
}

TEST(Cli, ConfigFileWithFlagOverride) {
  fs::path dir = fresh_dir("cli_cfg");
  std::ofstream(dir / "run.cfg") << "problem=quadratic:n=4\nmethod=triga\np=1.0\n"
                                  << "max-iters=40\nk-max=100\n";
  // flag overrides the file's p
  int rc = run_cli("run --config " + (dir / "run.cfg").string() + " --p 1.95 --out " +
                   dir.string());
  EXPECT_EQ(rc, 2);
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  EXPECT_DOUBLE_EQ(meta["config"]["p"].get<double>(), 1.95);
  EXPECT_EQ(meta["config"]["max_iterations"].get<long>(), 40);
}
