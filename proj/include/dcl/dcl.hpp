#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "dcl/linalg.hpp"
#include "dcl/mlp.hpp"
#include "dcl/nnqp.hpp"

namespace dcl {

// Window length meaning "initialize references once, never refresh them".
inline constexpr long kInfiniteWindow = std::numeric_limits<long>::max();

struct DclConfig {
  int n_ref = 1;                  // reference points; 0 disables displacement rows
  long beta_w = kInfiniteWindow;  // refresh window length (>= 1)
  long beta_o = 0;                // refresh offset within the window
  bool use_memory = false;        // append memory-gradient rows
};

inline void validate(const DclConfig& c) {
  require(c.n_ref >= 0, "dcl: n_ref must be >= 0");
  require(c.beta_w >= 1, "dcl: beta_w must be >= 1");
  if (c.beta_w != kInfiniteWindow) {
    require(c.beta_o >= 0 && c.beta_o < c.beta_w, "dcl: beta_o must lie in [0, beta_w)");
  } else {
    require(c.beta_o == 0, "dcl: beta_o must be 0 with an infinite window");
  }
}

// True when step t lands on the refresh trigger. An infinite window never
// retriggers; the initial reference fill is handled by DclState instead.
inline bool should_reset(long t, const DclConfig& c) {
  validate(c);
  require(t >= 0, "should_reset: negative step");
  if (c.beta_w == kInfiniteWindow) return false;
  return t % c.beta_w == c.beta_o;
}

// Mutable per-run correction state. A fresh state starts inside a refresh
// phase (resets_pending == n_ref) so that references get filled at the start
// of a run even when the window never triggers again.
struct DclState {
  long step = 0;
  std::vector<Vec> refs;
  int refs_set = 0;        // leading entries of refs that hold snapshots
  int next_ref = 0;        // slot written by the next refresh step
  int resets_pending = 0;  // > 0 while inside a refresh phase
  bool corrected_last = false;
  bool last_converged = true;
  Vec last_v;

  static DclState init(const DclConfig& c) {
    validate(c);
    DclState s;
    s.refs.resize(static_cast<std::size_t>(c.n_ref));
    s.resets_pending = c.n_ref;
    return s;
  }
};

// One constraint row per filled reference (w - r_i), then one per memory
// gradient (-g_s). Rows with near-zero norm carry no direction and are
// dropped.
inline Mat build_constraint_rows(const Vec& w, const DclState& st,
                                 const std::vector<Vec>& memory_grads = {}) {
  std::vector<const Vec*> mem;
  mem.reserve(memory_grads.size());
  for (const Vec& g : memory_grads) {
    require(g.size() == w.size(), "build_constraint_rows: memory row width mismatch");
    mem.push_back(&g);
  }
  Mat a(0, w.size());
  a.data.reserve((static_cast<std::size_t>(st.refs_set) + mem.size()) * w.size());
  auto push_row = [&a](const Vec& row) {
    if (norm2(row) < kEpsZero) return;
    a.data.insert(a.data.end(), row.begin(), row.end());
    ++a.rows;
  };
  for (int i = 0; i < st.refs_set; ++i) push_row(vsub(w, st.refs[static_cast<std::size_t>(i)]));
  Vec neg;
  for (const Vec* g : mem) {
    neg = vscale(*g, -1.0);
    push_row(neg);
  }
  return a;
}

// One correction step. Returns the gradient to feed the optimizer and
// advances the state machine:
//   - on a refresh trigger, arm n_ref pending reference snapshots;
//   - while snapshots are pending, record w into the next slot and pass g
//     through untouched (references are not yet consistent);
//   - otherwise project g against the assembled constraint rows.
inline Vec dcl_apply(const Vec& g, const Vec& w, DclState& st, const DclConfig& cfg,
                     const std::vector<Vec>& memory_grads = {}) {
  validate(cfg);
  require(w.size() == g.size(), "dcl_apply: w/g length mismatch");
  if (cfg.n_ref > 0 && should_reset(st.step, cfg)) {
    st.resets_pending = cfg.n_ref;
    st.next_ref = 0;
  }
  if (st.resets_pending > 0) {
    st.refs[static_cast<std::size_t>(st.next_ref)] = w;
    st.refs_set = std::max(st.refs_set, st.next_ref + 1);
    ++st.next_ref;
    --st.resets_pending;
    st.corrected_last = false;
    st.last_converged = true;
    st.last_v.clear();
    ++st.step;
    return g;
  }
  const Mat a = build_constraint_rows(w, st, cfg.use_memory ? memory_grads : std::vector<Vec>{});
  Correction c = correct_gradient(g, a);
  st.last_v = std::move(c.v);
  st.last_converged = c.solver_converged;
  st.corrected_last = a.rows > 0 && c.solver_converged;
  ++st.step;
  return std::move(c.g_tilde);
}

// --- sample memory ----------------------------------------------------------

struct Sample {
  Vec x;
  int y = 0;
};

// Keeps the first `capacity` samples offered and ignores the rest.
struct MemoryBank {
  std::size_t capacity = 0;
  std::vector<Sample> samples;

  explicit MemoryBank(std::size_t cap = 0) : capacity(cap) {}

  bool add(Sample s) {
    if (samples.size() >= capacity) return false;
    samples.push_back(std::move(s));
    return true;
  }

  void clear() { samples.clear(); }
  bool empty() const { return samples.empty(); }
};

inline Batch to_batch(const std::vector<Sample>& samples) {
  require(!samples.empty(), "to_batch: no samples");
  Batch b;
  b.x = Mat(samples.size(), samples[0].x.size());
  b.y.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].x.size() == b.x.cols, "to_batch: ragged samples");
    std::copy(samples[i].x.begin(), samples[i].x.end(), b.x.row(i));
    b.y[i] = samples[i].y;
  }
  return b;
}

// Tracked-layer gradient of each stored sample at the current weights.
inline std::vector<Vec> memory_gradients(const MemoryBank& bank, const Mlp& m, LossKind loss) {
  std::vector<Vec> rows;
  rows.reserve(bank.samples.size());
  for (const Sample& s : bank.samples) {
    Batch b;
    b.x = Mat(1, s.x.size());
    std::copy(s.x.begin(), s.x.end(), b.x.row(0));
    b.y = {s.y};
    rows.push_back(tracked_loss_grad(m, b, loss));
  }
  return rows;
}

}  // namespace dcl
