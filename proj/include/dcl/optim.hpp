#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dcl/linalg.hpp"

namespace dcl {

enum class OptKind { sgd, rmsprop, adam };

struct OptimizerConfig {
  OptKind kind = OptKind::sgd;
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  double beta1 = 0.9;    // adam first-moment decay
  double beta2 = 0.999;  // adam second-moment decay
  double alpha = 0.99;   // rmsprop smoothing
  double eps = 1e-8;
};

// Per-parameter-block slots. m doubles as the momentum buffer (sgd, rmsprop)
// and the first moment (adam); s is the squared-gradient accumulator.
struct OptimizerState {
  Vec m;
  Vec s;
  long step = 0;

  void ensure(std::size_t n) {
    if (m.size() != n) m.assign(n, 0.0);
    if (s.size() != n) s.assign(n, 0.0);
  }
};

inline void sgd_step(Vec& w, const Vec& g, OptimizerState& st, const OptimizerConfig& c) {
  require(w.size() == g.size(), "sgd_step: w/g length mismatch");
  st.ensure(w.size());
  ++st.step;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i] + c.weight_decay * w[i];
    st.m[i] = c.momentum * st.m[i] + gi;
    w[i] -= c.lr * st.m[i];
  }
}

inline void rmsprop_step(Vec& w, const Vec& g, OptimizerState& st, const OptimizerConfig& c) {
  require(w.size() == g.size(), "rmsprop_step: w/g length mismatch");
  st.ensure(w.size());
  ++st.step;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i] + c.weight_decay * w[i];
    st.s[i] = c.alpha * st.s[i] + (1.0 - c.alpha) * gi * gi;
    st.m[i] = c.momentum * st.m[i] + gi / std::sqrt(st.s[i] + c.eps);
    w[i] -= c.lr * st.m[i];
  }
}

inline void adam_step(Vec& w, const Vec& g, OptimizerState& st, const OptimizerConfig& c) {
  require(w.size() == g.size(), "adam_step: w/g length mismatch");
  st.ensure(w.size());
  ++st.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i] + c.weight_decay * w[i];
    st.m[i] = c.beta1 * st.m[i] + (1.0 - c.beta1) * gi;
    st.s[i] = c.beta2 * st.s[i] + (1.0 - c.beta2) * gi * gi;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.s[i] / bc2;
    w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

inline void optimizer_step(Vec& w, const Vec& g, OptimizerState& st, const OptimizerConfig& c) {
  switch (c.kind) {
    case OptKind::sgd: sgd_step(w, g, st, c); break;
    case OptKind::rmsprop: rmsprop_step(w, g, st, c); break;
    case OptKind::adam: adam_step(w, g, st, c); break;
  }
}

// Learning-rate schedules, keyed by 1-based epoch.
struct LrPolicy {
  enum class Kind { constant, halving, milestones } kind = Kind::constant;
  std::vector<int> milestones;  // ascending epochs at which lr drops
  double gamma = 0.1;           // multiplier applied at each milestone
};

inline double schedule_lr(int epoch, const LrPolicy& p, double base) {
  require(epoch >= 1, "schedule_lr: epoch must be >= 1");
  switch (p.kind) {
    case LrPolicy::Kind::constant:
      return base;
    case LrPolicy::Kind::halving:
      return base * std::pow(0.5, static_cast<double>(epoch - 1));
    case LrPolicy::Kind::milestones: {
      double lr = base;
      for (int m : p.milestones) {
        if (epoch >= m) lr *= p.gamma;
      }
      return lr;
    }
  }
  return base;
}

inline OptKind parse_opt_kind(const std::string& s) {
  if (s == "sgd" || s == "gd") return OptKind::sgd;
  if (s == "rmsprop") return OptKind::rmsprop;
  if (s == "adam") return OptKind::adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

inline const char* opt_kind_name(OptKind k) {
  switch (k) {
    case OptKind::sgd: return "sgd";
    case OptKind::rmsprop: return "rmsprop";
    case OptKind::adam: return "adam";
  }
  return "?";
}

}  // namespace dcl
