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
#ifndef PIOBF_SVD_HPP_
#define PIOBF_SVD_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "piobf/linalg.hpp"

namespace piobf {

struct SvdResult {
  Matrix u;    // rows x n
  Vec s;       // n, descending, non-negative
  Matrix v;    // cols x n,  M ~= U diag(S) V^T
};

// One-sided Jacobi SVD: rotates column pairs of a working copy until all
// pairs are numerically orthogonal. Small and accurate, which is all the
// desk-scale images need.
inline SvdResult svd(const Matrix& m_in) {
  if (m_in.rows < 1 || m_in.cols < 1) throw std::invalid_argument("svd: empty matrix");
  if (m_in.rows > 512 || m_in.cols > 512) throw std::invalid_argument("svd: matrix too large");
  for (double v : m_in.a)
    if (!std::isfinite(v)) throw std::invalid_argument("svd: non-finite entry");

  const bool transposed = m_in.rows < m_in.cols;
  Matrix a = m_in;
  if (transposed) {
    a = Matrix(m_in.cols, m_in.rows);
    for (int r = 0; r < m_in.rows; ++r)
      for (int c = 0; c < m_in.cols; ++c) a(c, r) = m_in(r, c);
  }
  const int rows = a.rows, n = a.cols;

  Matrix v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  const double eps = 1e-15;
  const int max_sweeps = 64;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int r = 0; r < rows; ++r) {
          app += a(r, p) * a(r, p);
          aqq += a(r, q) * a(r, q);
          apq += a(r, p) * a(r, q);
        }
        if (std::fabs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        converged = false;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int r = 0; r < rows; ++r) {
          const double ap = a(r, p), aq = a(r, q);
          a(r, p) = cs * ap - sn * aq;
          a(r, q) = sn * ap + cs * aq;
        }
        for (int r = 0; r < n; ++r) {
          const double vp = v(r, p), vq = v(r, q);
          v(r, p) = cs * vp - sn * vq;
          v(r, q) = sn * vp + cs * vq;
        }
      }
    }
  }
  if (!converged) throw std::runtime_error("svd: Jacobi sweeps did not converge");

  Vec sigma(n, 0.0);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += a(r, c) * a(r, c);
    sigma[c] = std::sqrt(s);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return sigma[x] > sigma[y]; });

  Matrix u(rows, n), vs(n, n);
  Vec s(n);
  double smax = 0.0;
  for (double val : sigma) smax = std::max(smax, val);
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    s[j] = sigma[src];
    for (int r = 0; r < n; ++r) vs(r, j) = v(r, src);
    if (sigma[src] > smax * 1e-14 && sigma[src] > 0.0) {
      for (int r = 0; r < rows; ++r) u(r, j) = a(r, src) / sigma[src];
    } else {
      s[j] = 0.0;
      // Null column: complete U with any unit vector orthogonal to the
      // columns already placed.
      for (int seed = 0; seed < rows; ++seed) {
        Vec cand(rows, 0.0);
        cand[seed] = 1.0;
        for (int jj = 0; jj < j; ++jj) {
          double proj = 0.0;
          for (int r = 0; r < rows; ++r) proj += u(r, jj) * cand[r];
          for (int r = 0; r < rows; ++r) cand[r] -= proj * u(r, jj);
        }
        const double len = norm(cand);
        if (len > 1e-8) {
          for (int r = 0; r < rows; ++r) u(r, j) = cand[r] / len;
          break;
        }
      }
    }
  }

  SvdResult out;
  if (transposed) {
    out.u = vs;
    out.v = u;
  } else {
    out.u = u;
    out.v = vs;
  }
  out.s = s;
  return out;
}

// U diag(S) V^T with the first `rank` singular values (all of them if rank
// is negative or past the end).
inline Matrix svd_reconstruct(const SvdResult& r, int rank = -1) {
  const int n = static_cast<int>(r.s.size());
  const int use = rank < 0 ? n : std::min(rank, n);
  Matrix m(r.u.rows, r.v.rows);
  for (int j = 0; j < use; ++j) {
    const double s = r.s[j];
    if (s == 0.0) continue;
    for (int row = 0; row < m.rows; ++row) {
      const double us = r.u(row, j) * s;
      for (int col = 0; col < m.cols; ++col) m(row, col) += us * r.v(col, j);
    }
  }
  return m;
}

}  // namespace piobf

#endif  // PIOBF_SVD_HPP_
