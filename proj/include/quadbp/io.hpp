#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadbp/model.hpp"

namespace quadbp {

enum class MatrixFormat { dense_text, matrix_market };

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_real(const std::string& tok, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse number '" + tok + "'");
  }
  if (pos != tok.size())
    throw std::runtime_error(where + ": trailing characters in number '" + tok + "'");
  return v;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

}  // namespace detail

// Whitespace-separated rows, one matrix row per line. Blank lines are skipped.
inline Matrix load_dense_text(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(detail::parse_real(tok, path));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
  if (rows.size() != rows.front().size())
    throw std::runtime_error(path + ": matrix is not square");
  const int n = static_cast<int>(rows.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  return m;
}

// Matrix Market, coordinate real symmetric, lower triangle stored (row >= col,
// 1-based). Explicit zeros on the diagonal are rejected.
inline Matrix load_matrix_market(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw std::runtime_error(path + ": missing MatrixMarket banner");
    if (detail::lower(object) != "matrix" || detail::lower(format) != "coordinate" ||
        detail::lower(field) != "real" || detail::lower(symmetry) != "symmetric")
      throw std::runtime_error(path + ": expected 'matrix coordinate real symmetric'");
  }
  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '%') continue;
    std::istringstream ls(line);
    if (!(ls >> rows >> cols >> nnz)) continue;  // skip blank lines before the size line
    break;
  }
  if (rows < 1 || cols < 1 || nnz < 0) throw std::runtime_error(path + ": bad size line");
  if (rows != cols) throw std::runtime_error(path + ": matrix is not square");
  const int n = static_cast<int>(rows);
  Matrix m = Matrix::Zero(n, n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  long read = 0;
  while (read < nnz) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated entry list");
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    long i = 0, j = 0;
    std::string tok;
    if (!(ls >> i >> j >> tok)) throw std::runtime_error(path + ": bad entry line '" + line + "'");
    const double v = detail::parse_real(tok, path);
    if (i < 1 || i > n || j < 1 || j > n) throw std::runtime_error(path + ": entry index out of range");
    if (j > i) throw std::runtime_error(path + ": entry above the diagonal in symmetric file");
    if (i == j && v == 0.0) throw std::runtime_error(path + ": explicit zero on the diagonal");
    const int r = static_cast<int>(i) - 1;
    const int c = static_cast<int>(j) - 1;
    if (seen(r, c)) throw std::runtime_error(path + ": duplicate entry");
    seen(r, c) = true;
    m(r, c) = v;
    m(c, r) = v;
    ++read;
  }
  return m;
}

// One value per line (extra whitespace tolerated).
inline Vector load_vector(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(detail::parse_real(tok, path));
  if (vals.empty()) throw std::runtime_error(path + ": empty vector");
  Vector v(static_cast<int>(vals.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = vals[i];
  return v;
}

inline MatrixFormat detect_format(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("%%MatrixMarket", 0) == 0) return MatrixFormat::matrix_market;
  return MatrixFormat::dense_text;
}

// Loads a model; gamma is symmetrized, h defaults to all ones when no vector
// file is given.
inline QuadraticModel load_model(const std::string& path, MatrixFormat format,
                                 const std::optional<std::string>& h_path = std::nullopt) {
  Matrix raw = format == MatrixFormat::matrix_market ? load_matrix_market(path)
                                                     : load_dense_text(path);
  if (h_path) {
    Vector h = load_vector(*h_path);
    if (h.size() != raw.rows())
      throw std::runtime_error(*h_path + ": h dimension mismatch with matrix");
    return make_model(raw, std::move(h));
  }
  return make_model(raw);
}

inline void write_dense_text(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  char buf[64];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
}

// Writes the lower triangle; zero diagonal entries are omitted (they would be
// rejected on load).
inline void write_matrix_market(const std::string& path, const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("write_matrix_market: matrix must be square");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const int n = static_cast<int>(m.rows());
  long nnz = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      if (m(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << n << " " << n << " " << nnz << "\n";
  char buf[64];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      if (m(i, j) != 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << (i + 1) << " " << (j + 1) << " " << buf << "\n";
      }
}

}  // namespace quadbp
