// Copyright 2026 The funcproc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FUNCPROC_IO_HPP_
#define FUNCPROC_IO_HPP_

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "funcproc/errors.hpp"
#include "funcproc/grid.hpp"
#include "funcproc/measurement.hpp"
#include "funcproc/process.hpp"

namespace funcproc {

class IoError : public Error {
 public:
  using Error::Error;
};

namespace io {

// Shortest text that round-trips the double.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      std::vector<std::string>* header) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (first) {
      first = false;
      if (header) *header = cells;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(where + ": not a number: '" + s + "'");
  }
}

// Real matrix as k,l,value with node labels.
inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& A,
                             const std::vector<int>& nodes) {
  auto f = open_out(path);
  f << "k,l,value\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      f << nodes[i] << ',' << nodes[j] << ',' << num(A(i, j)) << '\n';
    }
  }
}

inline void write_vector_csv(const std::string& path, const Eigen::VectorXd& v,
                             const std::vector<int>& nodes) {
  auto f = open_out(path);
  f << "k,value\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) f << nodes[i] << ',' << num(v(i)) << '\n';
}

inline void write_complex_matrix_csv(const std::string& path, const Eigen::MatrixXcd& A) {
  auto f = open_out(path);
  f << "i,j,value_re,value_im\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      f << i << ',' << j << ',' << num(A(i, j).real()) << ',' << num(A(i, j).imag()) << '\n';
    }
  }
}

inline void write_record_csv(const std::string& path, const ReadoutRecord& r) {
  auto f = open_out(path);
  f << "t,r\n";
  for (int k = 0; k <= r.grid.n_steps; ++k) {
    f << num(r.grid.node(k)) << ',' << num(r.values[k]) << '\n';
  }
}

// Record CSV with columns t,r; times must sit on the grid nodes.
inline ReadoutRecord read_record_csv(const std::string& path, const TimeGrid& g) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  if (header.size() < 2 || header[0] != "t" || header[1] != "r") {
    throw IoError(path + ": expected header t,r");
  }
  ReadoutRecord rec{g, std::vector<double>(static_cast<std::size_t>(g.n_nodes()), 0.0)};
  std::vector<bool> seen(rec.values.size(), false);
  for (const auto& row : rows) {
    if (row.size() < 2) throw IoError(path + ": short row");
    const int k = node_of_time(g, to_double(row[0], path));
    rec.values[k] = to_double(row[1], path);
    seen[k] = true;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) throw IoError(path + ": missing node " + std::to_string(k));
  }
  return rec;
}

// Kernel CSV: k,l then the 2x2 block row-major as re/im pairs.
inline MemoryKernel read_kernel_csv(const std::string& path, const TimeGrid& g) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  if (header.size() != 10 || header[0] != "k" || header[1] != "l") {
    throw IoError(path + ": expected header k,l,a00_re,a00_im,a01_re,a01_im,a10_re,a10_im,a11_re,a11_im");
  }
  MemoryKernel K = MemoryKernel::zero(g);
  for (const auto& row : rows) {
    if (row.size() != 10) throw IoError(path + ": row must have 10 cells");
    const int k = static_cast<int>(to_double(row[0], path));
    const int l = static_cast<int>(to_double(row[1], path));
    if (k < 0 || l < 0 || k > g.n_steps || l > g.n_steps) throw IoError(path + ": node out of range");
    Matrix2cd B;
    for (int e = 0; e < 4; ++e) {
      B(e / 2, e % 2) = cplx(to_double(row[2 + 2 * e], path), to_double(row[3 + 2 * e], path));
    }
    K.at(k, l) = B;
  }
  return K;
}

inline void write_kernel_csv(const std::string& path, const MemoryKernel& K) {
  auto f = open_out(path);
  f << "k,l,a00_re,a00_im,a01_re,a01_im,a10_re,a10_im,a11_re,a11_im\n";
  for (int k = 0; k <= K.grid.n_steps; ++k) {
    for (int l = 0; l <= K.grid.n_steps; ++l) {
      f << k << ',' << l;
      const Matrix2cd& B = K.at(k, l);
      for (int e = 0; e < 4; ++e) {
        f << ',' << num(B(e / 2, e % 2).real()) << ',' << num(B(e / 2, e % 2).imag());
      }
      f << '\n';
    }
  }
}

}  // namespace io
}  // namespace funcproc

#endif  // FUNCPROC_IO_HPP_
