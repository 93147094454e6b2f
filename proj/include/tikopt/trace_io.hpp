#pragma once

#include "tikopt/diagnostics.hpp"
#include "tikopt/metrics.hpp"
#include "tikopt/schedules.hpp"
#include "tikopt/solvers.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tikopt {

/// Round-trip-exact formatting for 64-bit floats.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline const char* kTraceHeader = "k,f_gap,grad_norm,velocity,dist_to_xstar,epsilon,wall_time";

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << fmt17(r.f_gap) << ',' << fmt17(r.grad_norm) << ',' << fmt17(r.velocity)
        << ',' << (std::isnan(r.dist_to_xstar) ? std::string() : fmt17(r.dist_to_xstar)) << ','
        << fmt17(r.epsilon) << ',' << fmt17(r.wall_time) << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trace_csv(out, trace);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline Trace read_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace csv: empty file", 1);
  if (line.rfind("k,", 0) != 0) throw ParseError("trace csv: missing header", 1);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 7) throw ParseError("trace csv: expected 7 fields", lineno);
    TraceRecord r;
    try {
      r.k = std::stol(fields[0]);
      r.f_gap = std::stod(fields[1]);
      r.grad_norm = std::stod(fields[2]);
      r.velocity = std::stod(fields[3]);
      r.dist_to_xstar = fields[4].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : std::stod(fields[4]);
      r.epsilon = std::stod(fields[5]);
      r.wall_time = std::stod(fields[6]);
    } catch (const std::exception&) {
      throw ParseError("trace csv: bad numeric field", lineno);
    }
    trace.records.push_back(r);
  }
  if (!trace.records.empty()) {
    trace.final_k = trace.records.back().k;
    trace.final_grad_norm = trace.records.back().grad_norm;
  }
  return trace;
}

inline Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_trace_csv(in);
}

// full iterate snapshots for a stride-1 window, one row per k
inline void write_iterates_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k";
  Index dim = trace.iterates.empty() ? 0 : trace.iterates.front().size();
  for (Index i = 0; i < dim; ++i) out << ",x" << i;
  out << '\n';
  for (long k = trace.window_lo; k <= trace.window_hi; ++k) {
    const Vector& x = trace.iterate(k);
    out << k;
    for (Index i = 0; i < x.size(); ++i) out << ',' << fmt17(x[i]);
    out << '\n';
  }
}

inline void read_iterates_csv(const std::string& path, Trace& trace) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("iterates csv: empty file", 1);
  long lineno = 1;
  std::vector<long> ks;
  std::vector<Vector> xs;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 2) throw ParseError("iterates csv: too few fields", lineno);
    Vector x(static_cast<Index>(fields.size() - 1));
    try {
      ks.push_back(std::stol(fields[0]));
      for (std::size_t i = 1; i < fields.size(); ++i)
        x[static_cast<Index>(i - 1)] = std::stod(fields[i]);
    } catch (const std::exception&) {
      throw ParseError("iterates csv: bad numeric field", lineno);
    }
    xs.push_back(std::move(x));
  }
  if (ks.empty()) throw ParseError("iterates csv: no rows");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] != ks[i - 1] + 1) throw ParseError("iterates csv: ks not consecutive");
  trace.window_lo = ks.front();
  trace.window_hi = ks.back();
  trace.iterates = std::move(xs);
}

// ---------------------------------------------------------------------------
// profiles and cost tables

inline void write_profile_csv(std::ostream& out, const PerformanceProfile& profile) {
  out << "t";
  for (const auto& s : profile.solvers) out << ",rho_" << s;
  out << '\n';
  for (double t : profile.breakpoints) {
    out << fmt17(t);
    for (const auto& curve : profile.curves) out << ',' << fmt17(curve.at(t));
    out << '\n';
  }
}

inline void write_profile_csv(const std::string& path, const PerformanceProfile& profile) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_profile_csv(out, profile);
}

inline void write_costs_csv(std::ostream& out, const std::vector<std::string>& solvers,
                            const std::vector<std::string>& problems, const Matrix& costs) {
  out << "problem";
  for (const auto& s : solvers) out << ',' << s;
  out << '\n';
  for (Index p = 0; p < costs.cols(); ++p) {
    out << problems[static_cast<std::size_t>(p)];
    for (Index s = 0; s < costs.rows(); ++s) {
      double v = costs(s, p);
      out << ',' << (std::isfinite(v) ? fmt17(v) : std::string("failed"));
    }
    out << '\n';
  }
}

inline void write_costs_csv(const std::string& path, const std::vector<std::string>& solvers,
                            const std::vector<std::string>& problems, const Matrix& costs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_costs_csv(out, solvers, problems, costs);
}

/// Reads a costs table written by write_costs_csv (used by profile-only
/// recomputation). "failed" cells become +inf.
inline void read_costs_csv(const std::string& path, std::vector<std::string>& solvers,
                           std::vector<std::string>& problems, Matrix& costs) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("costs csv: empty file", 1);
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "problem")
    throw ParseError("costs csv: bad header", 1);
  solvers.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("costs csv: wrong field count", lineno);
    problems.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i] == "failed") row.push_back(kFailureCost);
      else {
        try {
          row.push_back(std::stod(fields[i]));
        } catch (const std::exception&) {
          throw ParseError("costs csv: bad cost", lineno);
        }
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("costs csv: no rows");
  costs.resize(static_cast<Index>(solvers.size()), static_cast<Index>(rows.size()));
  for (std::size_t p = 0; p < rows.size(); ++p)
    for (std::size_t s = 0; s < solvers.size(); ++s)
      costs(static_cast<Index>(s), static_cast<Index>(p)) = rows[p][s];
}

// ---------------------------------------------------------------------------
// JSON reports

inline nlohmann::json certificate_to_json(const K0Certificate& cert) {
  return {
      {"certified", cert.certified},
      {"k0", cert.k0},
      {"verified_up_to", cert.verified_up_to},
      {"failed_condition", cert.failed_condition},
      {"pre_regime_throughout", cert.pre_regime_throughout},
      {"monotone_regime", cert.monotone_regime},
      {"worst_lhs", cert.worst_lhs},
      {"failure_message", cert.failure_message},
  };
}

inline nlohmann::json audit_to_json(const AuditReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries)
    entries.push_back({{"k", e.k},
                       {"lhs", e.lhs},
                       {"rhs", e.rhs},
                       {"margin", e.margin},
                       {"pre_regime", e.pre_regime},
                       {"violation", e.violation}});
  return {{"entries", entries},
          {"violations", report.violation_count},
          {"pre_regime", report.pre_regime_count}};
}

inline nlohmann::json violations_to_json(const std::vector<LemmaViolation>& violations) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : violations)
    arr.push_back({{"k", v.k}, {"which", v.which}, {"margin", v.margin}});
  return arr;
}

}  // namespace tikopt
