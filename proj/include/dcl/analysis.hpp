#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcl/linalg.hpp"
#include "dcl/mlp.hpp"
#include "dcl/rng.hpp"

namespace dcl {

// One training step as seen by the analytics: tracked weights before the
// update, the raw gradient, and the gradient the optimizer actually consumed.
struct TraceRecord {
  long t = 0;
  int epoch = 1;
  Vec w;
  Vec g;
  Vec g_tilde;
  double loss = 0.0;
  double lr = 0.0;
  bool corrected = false;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  bool diverged = false;
};

// The gradient that drove the step.
inline const Vec& effective_grad(const TraceRecord& r) { return r.corrected ? r.g_tilde : r.g; }

namespace detail {

inline void check_index(const TrainTrace& tr, std::size_t k, std::size_t m) {
  if (k >= tr.records.size()) throw std::out_of_range("congruency: k out of range");
  if (m >= k) throw std::out_of_range("congruency: need m < k");
}

inline std::optional<double> cos_or_missing(const Vec& a, const Vec& b) {
  if (norm2(a) < kEpsZero || norm2(b) < kEpsZero) return std::nullopt;
  return cosine_sim(a, b);
}

}  // namespace detail

// cos of the angle between the step-k gradient and the sum of gradients
// accumulated since step m (both update-effective). Missing when either
// vector is numerically zero.
inline std::optional<double> congruency_at(const TrainTrace& tr, std::size_t k, std::size_t m) {
  detail::check_index(tr, k, m);
  Vec acc(tr.records[k].g.size(), 0.0);
  for (std::size_t i = m; i < k; ++i) axpy(1.0, effective_grad(tr.records[i]), acc);
  return detail::cos_or_missing(effective_grad(tr.records[k]), acc);
}

// Mean per-step congruency over every record in `epoch`, anchored at record
// m. Undefined steps are skipped; missing when nothing contributes.
inline std::optional<double> epoch_congruency(const TrainTrace& tr, int epoch, std::size_t m = 0) {
  if (tr.records.empty() || m >= tr.records.size()) return std::nullopt;
  Vec acc(tr.records[m].g.size(), 0.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = m; k < tr.records.size(); ++k) {
    if (k > m && tr.records[k].epoch == epoch) {
      if (auto c = detail::cos_or_missing(effective_grad(tr.records[k]), acc)) {
        sum += *c;
        ++count;
      }
    }
    axpy(1.0, effective_grad(tr.records[k]), acc);
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// Mean congruency across every step after the anchor, i.e. the whole-run
// variant of epoch_congruency.
inline std::optional<double> path_congruency(const TrainTrace& tr, std::size_t m = 0) {
  if (tr.records.empty() || m + 1 >= tr.records.size()) return std::nullopt;
  Vec acc(tr.records[m].g.size(), 0.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = m; k < tr.records.size(); ++k) {
    if (k > m) {
      if (auto c = detail::cos_or_missing(effective_grad(tr.records[k]), acc)) {
        sum += *c;
        ++count;
      }
    }
    axpy(1.0, effective_grad(tr.records[k]), acc);
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

enum class MagnitudeMode { absolute, relative };

// Mean update magnitude across the records of one epoch. `absolute` measures
// against the first recorded weights, `relative` against the immediately
// preceding record (the very first record has no predecessor and is skipped).
inline std::optional<double> magnitude(const TrainTrace& tr, int epoch, MagnitudeMode mode) {
  if (tr.records.empty()) return std::nullopt;
  const Vec& w1 = tr.records.front().w;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    if (tr.records[i].epoch != epoch) continue;
    if (mode == MagnitudeMode::absolute) {
      sum += norm2(vsub(tr.records[i].w, w1));
      ++count;
    } else if (i > 0) {
      sum += norm2(vsub(tr.records[i].w, tr.records[i - 1].w));
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// --- congruency lower bound --------------------------------------------------

// Gradient history of a plain fixed-step gradient-descent run on an L-smooth
// objective: grads[i] = grad f(x_i).
struct BoundInput {
  std::vector<Vec> grads;
  double lipschitz = 0.0;
  double eta = 0.0;
};

// Measured congruency of step k against the accumulated history.
inline std::optional<double> measured_congruency(const BoundInput& b, std::size_t k) {
  require(k >= 1 && k < b.grads.size(), "measured_congruency: k out of range");
  Vec acc(b.grads[0].size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) axpy(1.0, b.grads[i], acc);
  return detail::cos_or_missing(b.grads[k], acc);
}

// Lower bound on the measured congruency at step k, from the descent lemma:
//
//   cos(g_k, sum_{i<k} g_i) >=
//     [ (1 - L*eta) * sum_{i<k} ||g_i||^2
//       - L*eta * sum_{i<k} ||g_i|| * ||sum_{j<i} g_j|| ]
//     / ( ||g_k|| * ||sum_{i<k} g_i|| ),
//
// clamped below at -1 (a cosine can never do worse). Missing when either
// denominator norm vanishes. Valid for any fixed eta > 0; it is only
// informative (> -1) when eta is small relative to 1/L.
inline std::optional<double> congruency_lower_bound(const BoundInput& b, std::size_t k) {
  require(b.lipschitz > 0.0, "congruency_lower_bound: lipschitz must be > 0");
  require(b.eta > 0.0, "congruency_lower_bound: eta must be > 0");
  require(k >= 1 && k < b.grads.size(), "congruency_lower_bound: k out of range");
  const double le = b.lipschitz * b.eta;
  Vec acc(b.grads[0].size(), 0.0);
  double sum_sq = 0.0;
  double sum_cross = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double gn = norm2(b.grads[i]);
    sum_sq += gn * gn;
    sum_cross += gn * norm2(acc);
    axpy(1.0, b.grads[i], acc);
  }
  const double nk = norm2(b.grads[k]);
  const double nacc = norm2(acc);
  if (nk < kEpsZero || nacc < kEpsZero) return std::nullopt;
  const double bound = ((1.0 - le) * sum_sq - le * sum_cross) / (nk * nacc);
  return std::max(bound, -1.0);
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
// seeded start vector. Used to get L for quadratic objectives.
inline double largest_eigenvalue(const Mat& q, double tol = 1e-10, int max_iters = 100000) {
  require(q.rows == q.cols && q.rows >= 1, "largest_eigenvalue: square matrix required");
  Rng rng(0x9e3779b97f4a7c15ull);
  Vec v = rng.gaussian_vec(q.rows);
  double nv = norm2(v);
  for (auto& x : v) x /= nv;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vec qv = matvec(q, v);
    const double next = dot(v, qv);  // Rayleigh quotient
    const double nqv = norm2(qv);
    if (nqv < kEpsZero) return 0.0;  // v landed in the null space
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = qv[i] / nqv;
    if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

// cos between the tracked-layer gradients of two sample batches at fixed
// weights. Missing when either gradient is numerically zero.
inline std::optional<double> pairwise_sample_congruency(const Mlp& m, LossKind loss,
                                                        const Batch& s1, const Batch& s2) {
  const Vec g1 = tracked_loss_grad(m, s1, loss);
  const Vec g2 = tracked_loss_grad(m, s2, loss);
  return detail::cos_or_missing(g1, g2);
}

}  // namespace dcl
