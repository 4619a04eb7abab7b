#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcl/errors.hpp"

namespace dcl {

using Vec = std::vector<double>;

// Tolerances shared across the library.
inline constexpr double kEpsZero = 1e-12;  // below this a magnitude counts as zero
inline constexpr double kEpsFeas = 1e-8;   // allowed constraint violation

// Dense row-major matrix. rows == 0 is a valid empty matrix (cols may still
// record the intended width).
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dot_n(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// cos of the angle between a and b, clamped into [-1, 1]. Near-zero inputs
// have no direction; the caller decides what "undefined" means for it.
inline double cosine_sim(const Vec& a, const Vec& b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na < kEpsZero || nb < kEpsZero) {
    throw std::domain_error("cosine_sim: vector norm below " + std::to_string(kEpsZero));
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline Vec vadd(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vadd: length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec vsub(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vsub: length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec vscale(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// A * x (rows of A dotted with x).
inline Vec matvec(const Mat& a, const Vec& x) {
  require(a.rows == 0 || a.cols == x.size(), "matvec: dimension mismatch");
  Vec r(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) r[i] = dot_n(a.row(i), x.data(), a.cols);
  return r;
}

// A' * v.
inline Vec mat_tvec(const Mat& a, const Vec& v) {
  require(a.rows == v.size(), "mat_tvec: dimension mismatch");
  Vec r(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) r[j] += ai[j] * v[i];
  }
  return r;
}

// A * A'. Symmetric positive semidefinite by construction.
inline Mat gram(const Mat& a) {
  Mat h(a.rows, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = dot_n(a.row(i), a.row(j), a.cols);
      h(i, j) = s;
      h(j, i) = s;
    }
  }
  return h;
}

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.data); }

}  // namespace dcl
