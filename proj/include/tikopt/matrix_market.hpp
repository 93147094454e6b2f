#pragma once

#include "tikopt/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tikopt {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool parse_double(const std::string& tok, double& out) {
  std::size_t pos = 0;
  try {
    out = std::stod(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

inline bool parse_long(const std::string& tok, long& out) {
  std::size_t pos = 0;
  try {
    out = std::stol(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

}  // namespace detail

/// Reads a MatrixMarket file (coordinate or array format, real-valued).
/// Symmetric storage is expanded to both triangles. Errors name the offending
/// 1-based line.
inline SparseMatrix load_matrix_market(std::istream& in) {
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw ParseError("matrix market: empty file", 1);
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket")
    throw ParseError("matrix market: missing %%MatrixMarket banner", lineno);
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix") throw ParseError("matrix market: object must be 'matrix'", lineno);
  bool coordinate = format == "coordinate";
  if (!coordinate && format != "array")
    throw ParseError("matrix market: format must be coordinate or array", lineno);
  if (field != "real" && field != "integer")
    throw ParseError("matrix market: field '" + field + "' is not real-valued", lineno);
  bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw ParseError("matrix market: unsupported symmetry '" + symmetry + "'", lineno);

  // skip comments and blank lines before the size line
  std::string size_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) continue;
    size_line = line;
    break;
  }
  if (size_line.empty()) throw ParseError("matrix market: missing size line", lineno);

  std::istringstream size_in(size_line);
  long rows = 0, cols = 0, nnz = 0;
  if (coordinate) {
    if (!(size_in >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
      throw ParseError("matrix market: bad coordinate size line", lineno);
  } else {
    if (!(size_in >> rows >> cols) || rows <= 0 || cols <= 0)
      throw ParseError("matrix market: bad array size line", lineno);
  }
  if (symmetric && rows != cols)
    throw ParseError("matrix market: symmetric matrix must be square", lineno);

  std::vector<Eigen::Triplet<double>> entries;

  if (coordinate) {
    entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    long seen = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      std::string itok, jtok, vtok;
      if (!(ls >> itok >> jtok >> vtok))
        throw ParseError("matrix market: expected 'i j value'", lineno);
      long i = 0, j = 0;
      double v = 0.0;
      if (!detail::parse_long(itok, i) || !detail::parse_long(jtok, j))
        throw ParseError("matrix market: bad index", lineno);
      if (!detail::parse_double(vtok, v))
        throw ParseError("matrix market: bad value '" + vtok + "'", lineno);
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError("matrix market: entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") outside declared " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " shape",
                         lineno);
      entries.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
      if (symmetric && i != j)
        entries.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
      ++seen;
    }
    if (seen != nnz)
      throw ParseError("matrix market: header declares " + std::to_string(nnz) +
                           " entries, file has " + std::to_string(seen),
                       lineno);
  } else {
    // array format: dense column-major values
    entries.reserve(static_cast<std::size_t>(rows * cols));
    long expected = symmetric ? rows * (rows + 1) / 2 : rows * cols;
    long count = 0;
    long r = 0, c = 0;
    if (symmetric) r = c = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) {
        double v = 0.0;
        if (!detail::parse_double(tok, v))
          throw ParseError("matrix market: bad value '" + tok + "'", lineno);
        if (count >= expected) throw ParseError("matrix market: too many values", lineno);
        if (v != 0.0) {
          entries.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
          if (symmetric && r != c) entries.emplace_back(static_cast<int>(c), static_cast<int>(r), v);
        }
        ++count;
        ++r;
        if (r == rows) {
          ++c;
          r = symmetric ? c : 0;
        }
      }
    }
    if (count != expected)
      throw ParseError("matrix market: expected " + std::to_string(expected) + " values, got " +
                           std::to_string(count),
                       lineno);
  }

  SparseMatrix a(rows, cols);
  a.setFromTriplets(entries.begin(), entries.end());  // duplicates are summed
  a.makeCompressed();
  return a;
}

inline SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("matrix market: cannot open '" + path + "'");
  return load_matrix_market(in);
}

}  // namespace tikopt
