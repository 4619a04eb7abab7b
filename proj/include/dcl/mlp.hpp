#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dcl/errors.hpp"
#include "dcl/linalg.hpp"
#include "dcl/optim.hpp"
#include "dcl/rng.hpp"

namespace dcl {

enum class Activation { relu, tanh };
enum class LossKind { softmax_ce, mse_onehot };

struct MlpConfig {
  int d = 2;   // input width
  int h = 16;  // hidden width
  int c = 2;   // classes
  Activation act = Activation::relu;
};

// Two-layer perceptron, logits = W2' a(W1' x + b1) + b2. Weights are stored
// row-major with fan-in as the row index: w1 is d x h, w2 is h x c.
struct Mlp {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
  Activation act = Activation::relu;

  int d() const { return static_cast<int>(w1.rows); }
  int h() const { return static_cast<int>(w1.cols); }
  int c() const { return static_cast<int>(w2.cols); }
};

struct Batch {
  Mat x;               // n x d
  std::vector<int> y;  // n labels in [0, c)

  std::size_t size() const { return x.rows; }
};

struct Grads {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
// Draw order is fixed (w1 row-major, then w2) so a seed pins the init.
inline Mlp init_mlp(const MlpConfig& cfg, Rng& rng) {
  require(cfg.d >= 1 && cfg.h >= 1 && cfg.c >= 2, "init_mlp: bad dimensions");
  Mlp m;
  m.act = cfg.act;
  m.w1 = Mat(cfg.d, cfg.h);
  m.b1.assign(cfg.h, 0.0);
  m.w2 = Mat(cfg.h, cfg.c);
  m.b2.assign(cfg.c, 0.0);
  const double lim1 = std::sqrt(6.0 / (cfg.d + cfg.h));
  for (auto& w : m.w1.data) w = rng.uniform(-lim1, lim1);
  const double lim2 = std::sqrt(6.0 / (cfg.h + cfg.c));
  for (auto& w : m.w2.data) w = rng.uniform(-lim2, lim2);
  return m;
}

inline double activate(Activation a, double z) {
  return a == Activation::relu ? std::max(0.0, z) : std::tanh(z);
}

inline double activate_grad(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

namespace detail {

// Hidden pre-activation and activation for one input row.
inline void hidden_forward(const Mlp& m, const double* x, Vec& z1, Vec& u) {
  const std::size_t d = m.w1.rows, h = m.w1.cols;
  z1.assign(h, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* w1i = m.w1.row(i);
    for (std::size_t j = 0; j < h; ++j) z1[j] += xi * w1i[j];
  }
  u.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    z1[j] += m.b1[j];
    u[j] = activate(m.act, z1[j]);
  }
}

inline void output_forward(const Mlp& m, const Vec& u, Vec& logits) {
  const std::size_t h = m.w2.rows, c = m.w2.cols;
  logits = m.b2;
  for (std::size_t j = 0; j < h; ++j) {
    const double uj = u[j];
    if (uj == 0.0) continue;
    const double* w2j = m.w2.row(j);
    for (std::size_t k = 0; k < c; ++k) logits[k] += uj * w2j[k];
  }
}

// Per-sample loss and d(loss)/d(logits) before the 1/n batch scaling.
inline double loss_grad_logits(LossKind kind, const Vec& logits, int label, Vec& dz) {
  const std::size_t c = logits.size();
  dz.resize(c);
  if (kind == LossKind::softmax_ce) {
    double mx = logits[0];
    for (double z : logits) mx = std::max(mx, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t k = 0; k < c; ++k) dz[k] = std::exp(logits[k] - lse);
    dz[static_cast<std::size_t>(label)] -= 1.0;
    return lse - logits[static_cast<std::size_t>(label)];
  }
  // mse_onehot: 1/2 || logits - onehot(label) ||^2
  double loss = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double r = logits[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    dz[k] = r;
    loss += 0.5 * r * r;
  }
  return loss;
}

}  // namespace detail

inline Vec forward(const Mlp& m, const Vec& x) {
  require(x.size() == m.w1.rows, "forward: input width mismatch");
  Vec z1, u, logits;
  detail::hidden_forward(m, x.data(), z1, u);
  detail::output_forward(m, u, logits);
  return logits;
}

inline int predict(const Mlp& m, const Vec& x) {
  const Vec logits = forward(m, x);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

// Mean loss over the batch; gradients of the mean loss if out != nullptr.
inline double loss_and_grad(const Mlp& m, const Batch& batch, LossKind kind, Grads* out) {
  require(batch.size() >= 1, "loss_and_grad: empty batch");
  require(batch.x.cols == m.w1.rows, "loss_and_grad: input width mismatch");
  require(batch.y.size() == batch.size(), "loss_and_grad: x/y size mismatch");
  const std::size_t d = m.w1.rows, h = m.w1.cols, c = m.w2.cols;
  for (int label : batch.y) {
    require(label >= 0 && label < static_cast<int>(c), "loss_and_grad: label out of range");
  }
  if (out) {
    out->w1 = Mat(d, h);
    out->b1.assign(h, 0.0);
    out->w2 = Mat(h, c);
    out->b2.assign(c, 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  Vec z1, u, logits, dz, dz1;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const double* x = batch.x.row(s);
    detail::hidden_forward(m, x, z1, u);
    detail::output_forward(m, u, logits);
    total += detail::loss_grad_logits(kind, logits, batch.y[s], dz);
    if (!out) continue;
    for (double& v : dz) v *= inv_n;
    // output layer
    for (std::size_t j = 0; j < h; ++j) {
      if (u[j] == 0.0) continue;
      double* gw2j = out->w2.row(j);
      for (std::size_t k = 0; k < c; ++k) gw2j[k] += u[j] * dz[k];
    }
    for (std::size_t k = 0; k < c; ++k) out->b2[k] += dz[k];
    // hidden layer
    dz1.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const double ag = activate_grad(m.act, z1[j]);
      if (ag == 0.0) continue;
      dz1[j] = ag * dot_n(m.w2.row(j), dz.data(), c);
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] == 0.0) continue;
      double* gw1i = out->w1.row(i);
      for (std::size_t j = 0; j < h; ++j) gw1i[j] += x[i] * dz1[j];
    }
    for (std::size_t j = 0; j < h; ++j) out->b1[j] += dz1[j];
  }
  const double mean = total * inv_n;
  if (!std::isfinite(mean)) throw NumericError("loss_and_grad: non-finite loss");
  return mean;
}

inline double mean_loss(const Mlp& m, const Batch& batch, LossKind kind) {
  return loss_and_grad(m, batch, kind, nullptr);
}

inline double accuracy(const Mlp& m, const Batch& batch) {
  require(batch.size() >= 1, "accuracy: empty batch");
  std::size_t hits = 0;
  Vec z1, u, logits;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    detail::hidden_forward(m, batch.x.row(s), z1, u);
    detail::output_forward(m, u, logits);
    const auto arg =
        static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (arg == batch.y[s]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.size());
}

// The correction operates on the top layer only: (w2, b2) flattened, w2
// row-major first, then b2.
inline std::size_t tracked_size(const Mlp& m) { return m.w2.data.size() + m.b2.size(); }

inline Vec tracked_weights(const Mlp& m) {
  Vec t;
  t.reserve(tracked_size(m));
  t.insert(t.end(), m.w2.data.begin(), m.w2.data.end());
  t.insert(t.end(), m.b2.begin(), m.b2.end());
  return t;
}

inline Vec tracked_gradient(const Grads& g) {
  Vec t;
  t.reserve(g.w2.data.size() + g.b2.size());
  t.insert(t.end(), g.w2.data.begin(), g.w2.data.end());
  t.insert(t.end(), g.b2.begin(), g.b2.end());
  return t;
}

// Gradient of the mean batch loss w.r.t. the tracked layer only. Skips the
// hidden-layer backward pass; this is the hot path for memory constraints.
inline Vec tracked_loss_grad(const Mlp& m, const Batch& batch, LossKind kind) {
  require(batch.size() >= 1, "tracked_loss_grad: empty batch");
  require(batch.x.cols == m.w1.rows, "tracked_loss_grad: input width mismatch");
  const std::size_t h = m.w2.rows, c = m.w2.cols;
  Mat gw2(h, c);
  Vec gb2(c, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Vec z1, u, logits, dz;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    detail::hidden_forward(m, batch.x.row(s), z1, u);
    detail::output_forward(m, u, logits);
    detail::loss_grad_logits(kind, logits, batch.y[s], dz);
    for (double& v : dz) v *= inv_n;
    for (std::size_t j = 0; j < h; ++j) {
      if (u[j] == 0.0) continue;
      double* gw2j = gw2.row(j);
      for (std::size_t k = 0; k < c; ++k) gw2j[k] += u[j] * dz[k];
    }
    for (std::size_t k = 0; k < c; ++k) gb2[k] += dz[k];
  }
  Vec t;
  t.reserve(gw2.data.size() + gb2.size());
  t.insert(t.end(), gw2.data.begin(), gw2.data.end());
  t.insert(t.end(), gb2.begin(), gb2.end());
  return t;
}

struct MlpOptState {
  OptimizerState w1, b1, w2, b2;
};

// One optimizer step. The hidden layer consumes the raw gradients; the
// tracked layer consumes `tracked`, which is the (possibly corrected)
// flattened (w2, b2) gradient.
inline void apply_update(Mlp& m, const Grads& raw, const Vec& tracked, MlpOptState& st,
                         const OptimizerConfig& cfg) {
  require(tracked.size() == tracked_size(m), "apply_update: tracked length mismatch");
  require(raw.w1.rows == m.w1.rows && raw.w1.cols == m.w1.cols, "apply_update: grads shape");
  optimizer_step(m.w1.data, raw.w1.data, st.w1, cfg);
  optimizer_step(m.b1, raw.b1, st.b1, cfg);
  const std::size_t nw2 = m.w2.data.size();
  Vec gw2(tracked.begin(), tracked.begin() + static_cast<std::ptrdiff_t>(nw2));
  Vec gb2(tracked.begin() + static_cast<std::ptrdiff_t>(nw2), tracked.end());
  optimizer_step(m.w2.data, gw2, st.w2, cfg);
  optimizer_step(m.b2, gb2, st.b2, cfg);
}

// --- checkpoints -----------------------------------------------------------
//
// Versioned text format:
//   line 1: "dclmlp 1 <d> <h> <c> <relu|tanh>"
//   lines 2-5: w1 (row-major), b1, w2 (row-major), b2, space-separated,
//   17 significant digits (round-trips doubles exactly).

inline void save_mlp(const Mlp& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out << "dclmlp 1 " << m.d() << ' ' << m.h() << ' ' << m.c() << ' '
      << (m.act == Activation::relu ? "relu" : "tanh") << '\n';
  auto write_block = [&out](const Vec& v) {
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  };
  write_block(m.w1.data);
  write_block(m.b1);
  write_block(m.w2.data);
  write_block(m.b2);
  if (!out) throw std::runtime_error("save_mlp: write failed for " + path);
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_mlp: empty file", 1);
  std::istringstream head(line);
  std::string magic, act;
  int version = 0, d = 0, h = 0, c = 0;
  if (!(head >> magic >> version >> d >> h >> c >> act) || magic != "dclmlp") {
    throw ParseError("load_mlp: bad header", 1);
  }
  if (version != 1) throw ParseError("load_mlp: unsupported version", 1);
  if (d < 1 || h < 1 || c < 2 || (act != "relu" && act != "tanh")) {
    throw ParseError("load_mlp: bad header fields", 1);
  }
  Mlp m;
  m.act = act == "relu" ? Activation::relu : Activation::tanh;
  m.w1 = Mat(static_cast<std::size_t>(d), static_cast<std::size_t>(h));
  m.b1.assign(static_cast<std::size_t>(h), 0.0);
  m.w2 = Mat(static_cast<std::size_t>(h), static_cast<std::size_t>(c));
  m.b2.assign(static_cast<std::size_t>(c), 0.0);
  Vec* blocks[4] = {&m.w1.data, &m.b1, &m.w2.data, &m.b2};
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t line_no = b + 2;
    if (!std::getline(in, line)) throw ParseError("load_mlp: missing parameter block", line_no);
    std::istringstream is(line);
    for (auto& x : *blocks[b]) {
      if (!(is >> x)) throw ParseError("load_mlp: short parameter block", line_no);
    }
    double extra;
    if (is >> extra) throw ParseError("load_mlp: trailing values", line_no);
  }
  return m;
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "ce") return LossKind::softmax_ce;
  if (s == "mse") return LossKind::mse_onehot;
  throw std::invalid_argument("unknown loss: " + s);
}

}  // namespace dcl
