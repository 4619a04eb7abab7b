#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "dcl/linalg.hpp"

namespace dcl {

// min_{v >= 0}  1/2 v'Hv + q'v   with H symmetric PSD.
struct NnqpProblem {
  Mat h;
  Vec q;
};

struct NnqpSolution {
  Vec v;
  int sweeps = 0;
  bool converged = true;
};

inline constexpr double kNnqpTol = 1e-12;
inline constexpr int kNnqpMaxSweeps = 10000;

// Cyclic projected coordinate descent: v_i <- max(0, v_i - (Hv+q)_i / H_ii).
//
// If q >= 0 elementwise, v = 0 is optimal and is returned without touching H,
// so callers relying on the exact no-op path get it unconditionally. A ridge
// of kEpsZero * (trace(H)/n + 1) is added to the diagonal otherwise; it keeps
// degenerate diagonals (duplicate or zero rows) harmless and perturbs
// well-conditioned solutions far below any tolerance used in this library.
// Convergence criterion: |min(v_i, (Hv+q)_i)| < tol for every coordinate.
inline NnqpSolution solve_nnqp(const NnqpProblem& p, double tol = kNnqpTol,
                               int max_sweeps = kNnqpMaxSweeps) {
  const std::size_t n = p.q.size();
  require(p.h.rows == n && p.h.cols == n, "solve_nnqp: H/q dimension mismatch");
  if (!all_finite(p.h) || !all_finite(p.q)) {
    throw std::invalid_argument("solve_nnqp: non-finite input");
  }

  NnqpSolution sol;
  sol.v.assign(n, 0.0);
  if (n == 0) return sol;

  bool all_nonneg = true;
  for (double qi : p.q) {
    if (qi < 0.0) {
      all_nonneg = false;
      break;
    }
  }
  if (all_nonneg) return sol;  // gradient at v = 0 already points outward

  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += p.h(i, i);
  const double ridge = kEpsZero * (trace / static_cast<double>(n) + 1.0);

  Vec& v = sol.v;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    sol.sweeps = sweep;
    for (std::size_t i = 0; i < n; ++i) {
      const double hv = dot_n(p.h.row(i), v.data(), n) + ridge * v[i];
      const double diag = p.h(i, i) + ridge;
      v[i] = std::max(0.0, v[i] - (hv + p.q[i]) / diag);
    }
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = dot_n(p.h.row(i), v.data(), n) + ridge * v[i] + p.q[i];
      resid = std::max(resid, std::abs(std::min(v[i], grad)));
    }
    if (resid < tol) return sol;
  }
  sol.converged = false;
  return sol;
}

struct Correction {
  Vec g_tilde;
  Vec v;                        // multipliers, one per constraint row
  bool solver_converged = true;
};

// Project g onto {x : A x <= 0}: the corrected gradient is the closest vector
// to g that does not oppose any constraint row. Solved through the
// nonnegative dual min_v 1/2 v'AA'v - (Ag)'v, recovered as g - A'v.
//
// A with zero rows returns g unchanged (exact copy), as does A g <= 0.
// If the solver fails to converge the raw g is returned with the flag down.
inline Correction correct_gradient(const Vec& g, const Mat& a) {
  if (!all_finite(g) || !all_finite(a)) {
    throw std::invalid_argument("correct_gradient: non-finite input");
  }
  Correction c;
  if (a.rows == 0) {
    c.g_tilde = g;
    return c;
  }
  require(a.cols == g.size(), "correct_gradient: A/g dimension mismatch");

  NnqpProblem p;
  p.q = vscale(matvec(a, g), -1.0);
  bool noop = true;
  for (double qi : p.q) {
    if (qi < 0.0) {
      noop = false;
      break;
    }
  }
  if (noop) {  // already feasible: keep g bit-for-bit
    c.g_tilde = g;
    c.v.assign(a.rows, 0.0);
    return c;
  }

  p.h = gram(a);
  NnqpSolution sol = solve_nnqp(p);
  if (!sol.converged) {
    c.g_tilde = g;
    c.v.assign(a.rows, 0.0);
    c.solver_converged = false;
    return c;
  }
  c.v = std::move(sol.v);
  c.g_tilde = g;
  for (std::size_t i = 0; i < a.rows; ++i) {
    if (c.v[i] != 0.0) {
      const double* ai = a.row(i);
      for (std::size_t j = 0; j < a.cols; ++j) c.g_tilde[j] -= c.v[i] * ai[j];
    }
  }
  return c;
}

// Worst violation across the four optimality conditions of the projection:
// stationarity, primal feasibility, dual feasibility, complementary slack.
inline double kkt_residual(const Vec& g, const Mat& a, const Vec& g_tilde, const Vec& v) {
  require(g_tilde.size() == g.size(), "kkt_residual: g/g_tilde length mismatch");
  require(v.size() == a.rows, "kkt_residual: v/A dimension mismatch");
  double r = 0.0;
  // stationarity: g_tilde - g + A'v = 0
  Vec stat = vsub(g_tilde, g);
  if (a.rows > 0) axpy(1.0, mat_tvec(a, v), stat);
  r = std::max(r, norm_inf(stat));
  if (a.rows > 0) {
    const Vec ag = matvec(a, g_tilde);
    for (std::size_t i = 0; i < a.rows; ++i) {
      r = std::max(r, std::max(ag[i], 0.0));          // primal: A g_tilde <= 0
      r = std::max(r, std::max(-v[i], 0.0));          // dual: v >= 0
      r = std::max(r, std::abs(v[i] * ag[i]));        // complementarity
    }
  }
  return r;
}

}  // namespace dcl
