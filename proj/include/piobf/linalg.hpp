// Copyright 2026 PI-Obfuscate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef PIOBF_LINALG_HPP_
#define PIOBF_LINALG_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace piobf {

using Vec = std::vector<double>;

// Dense row-major matrix. Small sizes only; everything here is desk scale.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

inline Vec sub(const Vec& x, const Vec& y) {
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

inline Vec add(const Vec& x, const Vec& y) {
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

inline Vec scaled(const Vec& x, double c) {
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = c * x[i];
  return r;
}

inline void axpy(double c, const Vec& x, Vec& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

// y = M x
inline Vec matvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols)
    throw std::invalid_argument("matvec: dimension mismatch");
  Vec y(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    const double* row = &m.a[static_cast<size_t>(r) * m.cols];
    for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

// y = M^T x
inline Vec matTvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.rows)
    throw std::invalid_argument("matTvec: dimension mismatch");
  Vec y(m.cols, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    const double* row = &m.a[static_cast<size_t>(r) * m.cols];
    for (int c = 0; c < m.cols; ++c) y[c] += row[c] * x[r];
  }
  return y;
}

// Orthonormalizes the columns of m in place with modified Gram-Schmidt,
// re-orthogonalized once. Requires rows >= cols and numerically
// independent columns.
inline void orthonormalize_columns(Matrix& m) {
  if (m.rows < m.cols) throw std::invalid_argument("orthonormalize: rows < cols");
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < m.cols; ++j) {
      for (int i = 0; i < j; ++i) {
        double proj = 0.0;
        for (int r = 0; r < m.rows; ++r) proj += m(r, i) * m(r, j);
        for (int r = 0; r < m.rows; ++r) m(r, j) -= proj * m(r, i);
      }
      double len = 0.0;
      for (int r = 0; r < m.rows; ++r) len += m(r, j) * m(r, j);
      len = std::sqrt(len);
      if (len < 1e-12) throw std::runtime_error("orthonormalize: rank-deficient input");
      for (int r = 0; r < m.rows; ++r) m(r, j) /= len;
    }
  }
}

}  // namespace piobf

#endif  // PIOBF_LINALG_HPP_
