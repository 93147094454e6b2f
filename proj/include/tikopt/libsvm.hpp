#pragma once

#include "tikopt/types.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tikopt {

struct LibsvmData {
  SparseMatrix features;  // one row per sample
  Vector labels;          // entries in {-1, +1}
};

/// Parses LIBSVM sparse text: "label idx:val idx:val ..." per nonempty line,
/// 1-based strictly increasing indices. Labels in {-1,+1} pass through; {0,1}
/// datasets are remapped (0 -> -1). Anything else is rejected.
inline LibsvmData load_libsvm(std::istream& in, std::optional<Index> dimension_hint = {}) {
  std::vector<double> labels;
  std::vector<Eigen::Triplet<double>> entries;
  Index max_index = 0;

  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string label_tok;
    ls >> label_tok;
    double label = 0.0;
    {
      std::size_t pos = 0;
      try {
        label = std::stod(label_tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != label_tok.size())
        throw ParseError("libsvm: bad label '" + label_tok + "'", lineno);
    }
    if (label == 0.0)
      label = -1.0;
    else if (label != 1.0 && label != -1.0)
      throw ParseError("libsvm: label " + label_tok + " is not in {-1,+1} or {0,1}", lineno);

    long prev_index = 0;
    std::string pair;
    while (ls >> pair) {
      auto colon = pair.find(':');
      if (colon == std::string::npos)
        throw ParseError("libsvm: expected 'index:value', got '" + pair + "'", lineno);
      long idx = 0;
      double val = 0.0;
      std::size_t pos = 0;
      try {
        idx = std::stol(pair.substr(0, colon), &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != colon) throw ParseError("libsvm: bad feature index in '" + pair + "'", lineno);
      std::string vtok = pair.substr(colon + 1);
      pos = 0;
      try {
        val = std::stod(vtok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != vtok.size() || vtok.empty())
        throw ParseError("libsvm: bad feature value in '" + pair + "'", lineno);
      if (idx < 1) throw ParseError("libsvm: indices are 1-based", lineno);
      if (idx <= prev_index)
        throw ParseError("libsvm: indices must be strictly increasing", lineno);
      prev_index = idx;
      max_index = std::max<Index>(max_index, idx);
      entries.emplace_back(static_cast<int>(labels.size()), static_cast<int>(idx - 1), val);
    }
    labels.push_back(label);
  }

  Index dim = max_index;
  if (dimension_hint && *dimension_hint > dim) dim = *dimension_hint;
  if (labels.empty()) throw ParseError("libsvm: no samples found", lineno ? lineno : 1);
  if (dim == 0) throw ParseError("libsvm: no features found", lineno);

  LibsvmData data;
  data.features = SparseMatrix(static_cast<Index>(labels.size()), dim);
  data.features.setFromTriplets(entries.begin(), entries.end());
  data.features.makeCompressed();
  data.labels = Eigen::Map<Vector>(labels.data(), static_cast<Index>(labels.size()));
  return data;
}

inline LibsvmData load_libsvm(const std::string& path, std::optional<Index> dimension_hint = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("libsvm: cannot open '" + path + "'");
  return load_libsvm(in, dimension_hint);
}

/// Writes in the same format (labels as +1/-1, zero entries skipped).
inline void write_libsvm(std::ostream& out, const LibsvmData& data) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> rows = data.features;
  for (Index i = 0; i < rows.rows(); ++i) {
    out << (data.labels[i] > 0 ? "+1" : "-1");
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << ' ' << (it.col() + 1) << ':' << buf;
    }
    out << '\n';
  }
}

}  // namespace tikopt
