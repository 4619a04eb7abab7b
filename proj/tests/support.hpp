// Shared test oracles, implemented independently of the library's solver.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dcl/linalg.hpp"

namespace testsupport {

using dcl::Mat;
using dcl::Vec;

// Dense solve by Gaussian elimination with partial pivoting. Returns false
// when the system is (numerically) singular.
inline bool gauss_solve(Mat a, Vec b, Vec& x) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw std::invalid_argument("gauss_solve: shape");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    }
    if (std::abs(a(piv, col)) < 1e-12) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return true;
}

struct NnqpOracle {
  Vec v;
  double objective = 0.0;
  bool found = false;
};

// Exhaustive solve of min 1/2 v'Hv + q'v, v >= 0 by complementarity
// enumeration: guess the support F, solve H_FF v_F = -q_F, keep candidates
// with v_F >= -eps and (Hv+q)_i >= -eps off the support.
inline NnqpOracle nnqp_oracle(const Mat& h, const Vec& q, double eps = 1e-9) {
  const std::size_t n = q.size();
  if (n > 20) throw std::invalid_argument("nnqp_oracle: too large");
  NnqpOracle best;
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1ul << i)) free.push_back(i);
    }
    Vec v(n, 0.0);
    if (!free.empty()) {
      Mat sub(free.size(), free.size());
      Vec rhs(free.size());
      for (std::size_t i = 0; i < free.size(); ++i) {
        rhs[i] = -q[free[i]];
        for (std::size_t j = 0; j < free.size(); ++j) sub(i, j) = h(free[i], free[j]);
      }
      Vec vf;
      if (!gauss_solve(sub, rhs, vf)) continue;
      bool nonneg = true;
      for (double x : vf) nonneg = nonneg && x >= -eps;
      if (!nonneg) continue;
      for (std::size_t i = 0; i < free.size(); ++i) v[free[i]] = vf[i];
    }
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      double grad = q[i];
      for (std::size_t j = 0; j < n; ++j) grad += h(i, j) * v[j];
      if (v[i] <= eps && grad < -eps) ok = false;
    }
    if (!ok) continue;
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += q[i] * v[i];
      for (std::size_t j = 0; j < n; ++j) obj += 0.5 * v[i] * h(i, j) * v[j];
    }
    if (!best.found || obj < best.objective) {
      best.found = true;
      best.objective = obj;
      best.v = v;
    }
  }
  return best;
}

struct OracleResult {
  Vec x;  // projection of g onto {x : A x <= 0}
  Vec v;  // multipliers, one per constraint row
  bool found = false;
};

// Exhaustive active-set solver for min 1/2||x-g||^2 s.t. A x <= 0: try every
// subset S of rows as the active set, solve the equality-constrained
// projection, and accept the KKT-consistent candidate. Exponential in the
// row count, which is fine for test-sized problems.
inline OracleResult project_oracle(const Mat& a, const Vec& g, double eps = 1e-9) {
  const std::size_t m = a.rows;
  if (m > 20) throw std::invalid_argument("project_oracle: too many rows");
  OracleResult best;
  double best_dist = 0.0;
  for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1ul << i)) active.push_back(i);
    }
    Vec x = g;
    Vec lam(active.size(), 0.0);
    if (!active.empty()) {
      // x = g - A_S^T lam with A_S A_S^T lam = A_S g.
      Mat gram(active.size(), active.size());
      Vec rhs(active.size());
      for (std::size_t i = 0; i < active.size(); ++i) {
        rhs[i] = dcl::dot_n(a.row(active[i]), g.data(), a.cols);
        for (std::size_t j = 0; j < active.size(); ++j) {
          gram(i, j) = dcl::dot_n(a.row(active[i]), a.row(active[j]), a.cols);
        }
      }
      if (!gauss_solve(gram, rhs, lam)) continue;
      for (std::size_t i = 0; i < active.size(); ++i) {
        for (std::size_t c = 0; c < a.cols; ++c) x[c] -= lam[i] * a.row(active[i])[c];
      }
    }
    bool ok = true;
    for (std::size_t i = 0; i < active.size() && ok; ++i) ok = lam[i] >= -eps;
    for (std::size_t i = 0; i < m && ok; ++i) {
      ok = dcl::dot_n(a.row(i), x.data(), a.cols) <= eps;
    }
    if (!ok) continue;
    const double dist = dcl::norm2(dcl::vsub(x, g));
    if (!best.found || dist < best_dist) {
      best.found = true;
      best_dist = dist;
      best.x = x;
      best.v.assign(m, 0.0);
      for (std::size_t i = 0; i < active.size(); ++i) best.v[active[i]] = lam[i];
    }
  }
  return best;
}

// A point of {x : A x <= 0} near `start`, by repeatedly projecting onto the
// worst violated halfspace. The cone always contains 0, so this converges.
inline bool feasible_point(const Mat& a, Vec start, int max_iters, Vec& out) {
  for (int it = 0; it < max_iters; ++it) {
    std::size_t worst = 0;
    double worst_viol = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
      const double viol = dcl::dot_n(a.row(i), start.data(), a.cols);
      if (viol > worst_viol) {
        worst_viol = viol;
        worst = i;
      }
    }
    if (worst_viol <= 1e-12) {
      out = std::move(start);
      return true;
    }
    const double nn = dcl::dot_n(a.row(worst), a.row(worst), a.cols);
    if (nn < 1e-30) return false;
    const double f = worst_viol / nn;
    for (std::size_t c = 0; c < a.cols; ++c) start[c] -= f * a.row(worst)[c];
  }
  return false;
}

}  // namespace testsupport
