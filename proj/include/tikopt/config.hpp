#pragma once

#include "tikopt/libsvm.hpp"
#include "tikopt/matrix_market.hpp"
#include "tikopt/problems.hpp"
#include "tikopt/rng.hpp"
#include "tikopt/schedules.hpp"
#include "tikopt/solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace tikopt {

namespace detail {

inline std::map<std::string, std::string> parse_kv_list(const std::string& text) {
  std::map<std::string, std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline std::string sanitize(const std::string& name) {
  std::string out;
  for (char ch : name) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ||
                               ch == '-' || ch == '_')
                                  ? ch
                                  : '_';
  return out;
}

}  // namespace detail

// fixed salts keeping the independent random streams apart
constexpr std::uint64_t kRhsSalt = 0xb5ad4eceda1ce2a9ull;
constexpr std::uint64_t kMatrixSalt = 0x2545f4914f6cdd1dull;

/// Builds a problem from a URI-like string:
///   quadratic:n=10
///   mm:path.mtx                       (rhs drawn from the run seed)
///   libsvm:path[?dim=N]
///   gauss-ls:n=12[,m=..][,rank=..][,seed=..][,scale=..]   (seeded Gaussian)
inline std::unique_ptr<Problem> make_problem(const std::string& uri, std::uint64_t run_seed) {
  auto colon = uri.find(':');
  if (colon == std::string::npos)
    throw ConfigError("problem uri '" + uri + "' has no scheme");
  std::string scheme = uri.substr(0, colon);
  std::string rest = uri.substr(colon + 1);

  if (scheme == "quadratic") {
    auto kv = detail::parse_kv_list(rest);
    if (!kv.count("n")) throw ConfigError("quadratic: missing n");
    long n = std::stol(kv.at("n"));
    return std::make_unique<QuadraticCoupling>(n);
  }

  if (scheme == "mm") {
    SparseMatrix a = load_matrix_market(rest);
    Vector b = gaussian_vector(run_seed ^ kRhsSalt, a.rows());
    return std::make_unique<LeastSquares>(std::move(a), std::move(b), uri);
  }

  if (scheme == "libsvm") {
    std::string path = rest;
    std::optional<Index> hint;
    auto qm = rest.find('?');
    if (qm != std::string::npos) {
      path = rest.substr(0, qm);
      auto kv = detail::parse_kv_list(rest.substr(qm + 1));
      if (kv.count("dim")) hint = std::stol(kv.at("dim"));
    }
    LibsvmData data = load_libsvm(path, hint);
    return std::make_unique<LogisticRegression>(std::move(data.features), std::move(data.labels),
                                                uri);
  }

  if (scheme == "gauss-ls") {
    auto kv = detail::parse_kv_list(rest);
    if (!kv.count("n")) throw ConfigError("gauss-ls: missing n");
    Index n = std::stol(kv.at("n"));
    Index m = kv.count("m") ? std::stol(kv.at("m")) : n;
    Index rank = kv.count("rank") ? std::stol(kv.at("rank")) : 0;
    std::uint64_t seed = kv.count("seed") ? std::stoull(kv.at("seed")) : run_seed;
    double scale = kv.count("scale") ? std::stod(kv.at("scale")) : 1.0;
    Matrix a;
    if (rank > 0) {
      Matrix g1 = gaussian_matrix(seed ^ kMatrixSalt, m, rank);
      Matrix g2 = gaussian_matrix((seed + 1) ^ kMatrixSalt, rank, n);
      a = scale / std::sqrt(static_cast<double>(rank)) * (g1 * g2);
    } else {
      a = scale * gaussian_matrix(seed ^ kMatrixSalt, m, n);
    }
    Vector b = gaussian_vector(seed ^ kRhsSalt, m);
    return std::make_unique<LeastSquares>(a, std::move(b), uri);
  }

  throw ConfigError("unknown problem scheme '" + scheme + "'");
}

/// Everything needed to reproduce one solve. Flags override file values;
/// the resolved copy is what meta.json records.
struct RunConfig {
  std::string problem_uri;
  std::string method = "triga";         // triga | nag | nadtr
  std::string schedule_kind = "power";  // power | critical
  double p = 1.95;
  double c = 1.0;
  double step_fraction = 1.1;  // s = 1/(fraction * L)
  double step_explicit = 0.0;  // used instead when > 0
  double alpha = 3.0;
  double nadtr_a = 1.0;
  double nadtr_c = 1.0;
  double nadtr_q = 0.99;  // inertia exponent of the comparison method
  double delta = 0.0;     // 0 = 2^{p/2}/sqrt(s)
  double q = 0.0;         // 0 = derived from the step bound
  std::uint64_t seed = 1;
  std::vector<double> start;  // empty = seeded gaussian
  long max_iterations = 100000;
  double gradient_tolerance = 1e-6;
  long stride = 0;
  long cert_horizon = 1000000;
  bool certify = true;  // run find_k0 during resolution (triga only)
  long iterates_lo = 1;
  long iterates_hi = 0;
  std::string out_dir = ".";

  nlohmann::json to_json() const {
    return {
        {"problem", problem_uri},
        {"method", method},
        {"schedule", schedule_kind},
        {"p", p},
        {"c", c},
        {"step_fraction", step_fraction},
        {"step_explicit", step_explicit},
        {"alpha", alpha},
        {"nadtr_a", nadtr_a},
        {"nadtr_c", nadtr_c},
        {"nadtr_q", nadtr_q},
        {"delta", delta},
        {"q", q},
        {"seed", seed},
        {"start", start},
        {"max_iterations", max_iterations},
        {"gradient_tolerance", gradient_tolerance},
        {"stride", stride},
        {"cert_horizon", cert_horizon},
        {"certify", certify},
        {"iterates_lo", iterates_lo},
        {"iterates_hi", iterates_hi},
    };
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.problem_uri = j.at("problem").get<std::string>();
    c.method = j.at("method").get<std::string>();
    c.schedule_kind = j.at("schedule").get<std::string>();
    c.p = j.at("p").get<double>();
    c.c = j.at("c").get<double>();
    c.step_fraction = j.at("step_fraction").get<double>();
    c.step_explicit = j.at("step_explicit").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.nadtr_a = j.at("nadtr_a").get<double>();
    c.nadtr_c = j.at("nadtr_c").get<double>();
    c.nadtr_q = j.at("nadtr_q").get<double>();
    c.delta = j.at("delta").get<double>();
    c.q = j.at("q").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.start = j.at("start").get<std::vector<double>>();
    c.max_iterations = j.at("max_iterations").get<long>();
    c.gradient_tolerance = j.at("gradient_tolerance").get<double>();
    c.stride = j.at("stride").get<long>();
    c.cert_horizon = j.at("cert_horizon").get<long>();
    c.certify = j.at("certify").get<bool>();
    c.iterates_lo = j.at("iterates_lo").get<long>();
    c.iterates_hi = j.at("iterates_hi").get<long>();
    return c;
  }
};

/// q must satisfy L s < q/(q+1), i.e. q > Ls/(1-Ls). Below 1 the midpoint of
/// (bound, 1] keeps the small-q regime; above 1 the bound is doubled.
inline double default_q(double lipschitz, double s) {
  double ls = lipschitz * s;
  if (!(ls < 1.0)) throw ConfigError("step too large: L*s must be < 1 for a valid q");
  double q_min = ls / (1.0 - ls);
  return q_min < 1.0 ? 0.5 * (q_min + 1.0) : 2.0 * q_min;
}

struct ResolvedRun {
  std::unique_ptr<Problem> problem;
  Method method;
  Vector x0, x1;
  RunOptions options;
  SolverParameters params;       // triga only; includes k0 when certified
  K0Certificate certificate;     // triga only
  TikhonovSchedule schedule = TikhonovSchedule::power(1.0);
  double step = 0.0;
  std::string selection_error;   // nonempty when the analysis tuple failed
  RunConfig resolved;            // config with defaults filled in
};

/// Turns a config into a runnable (problem, method, start) triple, applying
/// the default rules for s, q and delta and attempting certification for the
/// main method. Certification failure does not block the run; the outcome is
/// recorded and surfaced through meta.json.
inline ResolvedRun resolve_run(const RunConfig& config) {
  ResolvedRun r;
  r.resolved = config;
  r.problem = make_problem(config.problem_uri, config.seed);
  double lip = r.problem->lipschitz();
  if (!(lip > 0.0)) throw ConfigError("problem has a degenerate (zero) Lipschitz bound");

  r.step = config.step_explicit > 0.0 ? config.step_explicit : 1.0 / (config.step_fraction * lip);
  r.resolved.step_explicit = r.step;

  if (config.method == "triga") {
    bool critical = config.schedule_kind == "critical";
    if (!critical && config.p >= 2.0)
      throw ConfigError("power schedules require p < 2; use --schedule critical for p = 2");
    r.schedule = critical ? TikhonovSchedule::critical(config.c)
                          : TikhonovSchedule::power(config.p);
    double q = config.q > 0.0 ? config.q : default_q(lip, r.step);
    double delta =
        config.delta > 0.0 ? config.delta : default_delta(critical ? 2.0 : config.p, r.step);
    r.resolved.q = q;
    r.resolved.delta = delta;
    try {
      SelectedParameters sel = select_parameters(delta, q, lip, r.step);
      r.params = sel.params;
      if (config.certify) {
        r.certificate = find_k0(r.params, r.schedule, lip, config.cert_horizon);
        r.params.k0 = r.certificate.certified ? r.certificate.k0 : 0;
      }
    } catch (const SelectionError& e) {
      r.selection_error = e.what();
      r.params = SolverParameters{};
      r.params.s = r.step;
      r.params.delta = delta;
      r.params.q = q;
    }
    r.method = TrigaMethod{r.schedule, r.params};
  } else if (config.method == "nag") {
    r.method = NagMethod{r.step, config.alpha};
  } else if (config.method == "nadtr") {
    NadtrParameters np;
    np.s = r.step;
    np.a = config.nadtr_a;
    np.c = config.nadtr_c;
    np.p = config.p;
    np.q = config.nadtr_q;
    r.method = NadtrMethod{np};
  } else {
    throw ConfigError("unknown method '" + config.method + "'");
  }

  Index dim = r.problem->dimension();
  Vector start;
  if (!config.start.empty()) {
    if (static_cast<Index>(config.start.size()) != dim)
      throw ConfigError("explicit start has length " + std::to_string(config.start.size()) +
                        ", problem dimension is " + std::to_string(dim));
    start = Eigen::Map<const Vector>(config.start.data(), dim);
  } else {
    start = gaussian_vector(config.seed, dim);
  }
  r.x0 = start;
  r.x1 = start;

  r.options.stop.max_iterations = config.max_iterations;
  r.options.stop.gradient_tolerance = config.gradient_tolerance;
  r.options.stride = config.stride;
  r.options.iterate_window_lo = config.iterates_lo;
  r.options.iterate_window_hi = config.iterates_hi;
  return r;
}

/// Reference objective value for families without a closed-form optimum:
/// over-converge with the main method (p = 1.95, step 1/(1.1 L)) to gradient
/// norm 1e-10 and take the best value seen.
inline double reference_by_overconvergence(const Problem& problem, std::uint64_t seed,
                                           long cap = 200000) {
  double lip = problem.lipschitz();
  double s = 1.0 / (1.1 * lip);
  SolverParameters params;
  params.s = s;
  params.delta = default_delta(1.95, s);
  Method method = TrigaMethod{TikhonovSchedule::power(1.95), params};
  Vector start = gaussian_vector(seed, problem.dimension());
  RunOptions opts;
  opts.stop.max_iterations = cap;
  opts.stop.gradient_tolerance = 1e-10;
  opts.stride = 1000;
  Trace trace = run(problem, method, start, start, opts);
  return trace.final_value;
}

}  // namespace tikopt
