#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dcl/analysis.hpp"
#include "dcl/dcl.hpp"
#include "dcl/errors.hpp"
#include "dcl/linalg.hpp"
#include "dcl/mlp.hpp"
#include "dcl/optim.hpp"
#include "dcl/rng.hpp"

namespace dcl {

inline constexpr double kDivergenceRadius = 1e6;

// --- 2-D benchmark -----------------------------------------------------------

struct Bench2dProblem {
  std::string name;
  std::function<double(double, double)> f;
  std::function<std::array<double, 2>(double, double)> grad;
  std::array<double, 2> start{0.0, 0.0};
  std::vector<std::array<double, 2>> minima;  // located numerically, ordered by x
  double lipschitz = 0.0;                     // > 0 when known analytically
};

// Local minima of f inside [xlo,xhi] x [ylo,yhi]: coarse grid scan for cells
// below all eight neighbours, then gradient descent with backtracking from
// each candidate, deduplicated.
inline std::vector<std::array<double, 2>> locate_minima_2d(
    const std::function<double(double, double)>& f,
    const std::function<std::array<double, 2>(double, double)>& grad, double xlo, double xhi,
    double ylo, double yhi, int grid_n = 241) {
  require(grid_n >= 3, "locate_minima_2d: grid too small");
  const double hx = (xhi - xlo) / (grid_n - 1);
  const double hy = (yhi - ylo) / (grid_n - 1);
  std::vector<double> vals(static_cast<std::size_t>(grid_n) * grid_n);
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      vals[static_cast<std::size_t>(i) * grid_n + j] = f(xlo + i * hx, ylo + j * hy);
    }
  }
  auto refine = [&](double x, double y) {
    for (int it = 0; it < 20000; ++it) {
      const auto g = grad(x, y);
      const double gn2 = g[0] * g[0] + g[1] * g[1];
      if (std::sqrt(gn2) < 1e-11) break;
      const double fx = f(x, y);
      double step = 1.0;
      while (step > 1e-18 && f(x - step * g[0], y - step * g[1]) > fx - 1e-4 * step * gn2) {
        step *= 0.5;
      }
      x -= step * g[0];
      y -= step * g[1];
    }
    return std::array<double, 2>{x, y};
  };
  std::vector<std::array<double, 2>> found;
  for (int i = 1; i + 1 < grid_n; ++i) {
    for (int j = 1; j + 1 < grid_n; ++j) {
      const double v = vals[static_cast<std::size_t>(i) * grid_n + j];
      bool lowest = true;
      for (int di = -1; di <= 1 && lowest; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (vals[static_cast<std::size_t>(i + di) * grid_n + (j + dj)] < v) {
            lowest = false;
            break;
          }
        }
      }
      if (!lowest) continue;
      const auto m = refine(xlo + i * hx, ylo + j * hy);
      bool dup = false;
      for (const auto& e : found) {
        if (std::hypot(e[0] - m[0], e[1] - m[1]) < 1e-4) {
          dup = true;
          break;
        }
      }
      if (!dup) found.push_back(m);
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

// Curved valley with a double well along its floor. The floor follows the
// cubic y = x/2 + x^3/2, so a descent path from the off-axis start has to
// keep turning while it crawls toward the deeper well near (1, 1); the tilt
// c makes the well near (-1, -1) shallower.
inline const Bench2dProblem& default_bench2d() {
  static const Bench2dProblem p = [] {
    constexpr double kv = 1.5, bw = 0.5, c = -0.2;
    Bench2dProblem b;
    b.name = "twomin";
    b.f = [](double x, double y) {
      const double e = y - (0.5 * x + 0.5 * x * x * x);
      const double q = x * x - 1.0;
      return kv * e * e + bw * q * q + c * x;
    };
    b.grad = [](double x, double y) {
      const double e = y - (0.5 * x + 0.5 * x * x * x);
      return std::array<double, 2>{-2.0 * kv * e * (0.5 + 1.5 * x * x) +
                                       4.0 * bw * x * (x * x - 1.0) + c,
                                   2.0 * kv * e};
    };
    b.start = {0.3, -1.8};
    b.minima = locate_minima_2d(b.f, b.grad, -3.0, 3.0, -3.0, 3.0);
    return b;
  }();
  return p;
}

// Convex sanity case: one minimum, known curvature.
inline const Bench2dProblem& quadratic_bench2d() {
  static const Bench2dProblem p = [] {
    Bench2dProblem b;
    b.name = "quadratic";
    b.f = [](double x, double y) { return 0.5 * (x * x + 4.0 * y * y); };
    b.grad = [](double x, double y) { return std::array<double, 2>{x, 4.0 * y}; };
    b.start = {2.0, 1.0};
    b.minima = {{0.0, 0.0}};
    b.lipschitz = 4.0;
    return b;
  }();
  return p;
}

struct Bench2dRunConfig {
  OptimizerConfig opt;
  LrPolicy lr_policy;
  int iters = 200;
  int iters_per_epoch = 0;  // 0: the whole run is epoch 1
  int record_every = 1;
  bool use_dcl = false;
  DclConfig dcl;
};

struct Bench2dResult {
  TrainTrace trace;
  Vec w_final;        // iterate after the last applied update
  long iters_run = 0; // updates actually applied (< iters when diverged)
};

// Fixed-step descent on a 2-D problem, with the correction applied to the
// full parameter vector. Stops early and flags divergence when the iterate
// leaves a ball of radius kDivergenceRadius.
inline Bench2dResult run_bench2d(const Bench2dProblem& p, const Bench2dRunConfig& rc) {
  require(rc.iters >= 1, "run_bench2d: iters must be >= 1");
  require(rc.record_every >= 1, "run_bench2d: record_every must be >= 1");
  TrainTrace trace;
  trace.records.reserve(static_cast<std::size_t>(rc.iters / rc.record_every) + 1);
  Vec w = {p.start[0], p.start[1]};
  DclState st = DclState::init(rc.dcl);
  OptimizerState ost;
  OptimizerConfig oc = rc.opt;
  long done = 0;
  for (int t = 0; t < rc.iters; ++t) {
    const int epoch = rc.iters_per_epoch > 0 ? 1 + t / rc.iters_per_epoch : 1;
    oc.lr = schedule_lr(epoch, rc.lr_policy, rc.opt.lr);
    const double z = p.f(w[0], w[1]);
    const auto ga = p.grad(w[0], w[1]);
    Vec g = {ga[0], ga[1]};
    if (!std::isfinite(z) || !all_finite(g)) {
      throw NumericError("run_bench2d: non-finite objective or gradient at step " +
                         std::to_string(t));
    }
    Vec geff = rc.use_dcl ? dcl_apply(g, w, st, rc.dcl) : g;
    if (t % rc.record_every == 0) {
      TraceRecord rec;
      rec.t = t;
      rec.epoch = epoch;
      rec.w = w;
      rec.g = g;
      rec.g_tilde = geff;
      rec.loss = z;
      rec.lr = oc.lr;
      rec.corrected = rc.use_dcl && st.corrected_last;
      trace.records.push_back(std::move(rec));
    }
    optimizer_step(w, geff, ost, oc);
    done = t + 1;
    if (norm2(w) > kDivergenceRadius) {
      trace.diverged = true;
      break;
    }
  }
  return {std::move(trace), std::move(w), done};
}

// --- synthetic classification data -------------------------------------------

struct BlobsDataset {
  int d = 0, c = 0, n_per_class = 0;
  Mat x;               // (c * n_per_class) x d, grouped by class
  std::vector<int> y;
  Mat means;           // c x d generating means

  std::size_t size() const { return x.rows; }
};

namespace detail {

inline BlobsDataset sample_from_means(const Mat& means, int n_per_class, Rng& rng) {
  BlobsDataset ds;
  ds.c = static_cast<int>(means.rows);
  ds.d = static_cast<int>(means.cols);
  ds.n_per_class = n_per_class;
  ds.means = means;
  ds.x = Mat(static_cast<std::size_t>(ds.c) * n_per_class, means.cols);
  ds.y.resize(ds.x.rows);
  std::size_t row = 0;
  for (int k = 0; k < ds.c; ++k) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      double* xr = ds.x.row(row);
      const double* mk = means.row(static_cast<std::size_t>(k));
      for (std::size_t j = 0; j < means.cols; ++j) xr[j] = mk[j] + rng.gaussian();
      ds.y[row] = k;
    }
  }
  return ds;
}

}  // namespace detail

// Gaussian clusters with unit covariance around seeded random means scaled
// by `separation`. Samples are grouped by class; shuffling is the trainer's
// job.
inline BlobsDataset gen_blobs(int classes, int n_per_class, int dim, double separation,
                              std::uint64_t seed) {
  require(classes >= 2, "gen_blobs: need at least 2 classes");
  require(n_per_class >= 1, "gen_blobs: need at least 1 sample per class");
  require(dim >= 1, "gen_blobs: dim must be >= 1");
  Rng rng(seed);
  Mat means(static_cast<std::size_t>(classes), static_cast<std::size_t>(dim));
  for (auto& m : means.data) m = separation * rng.gaussian();
  return detail::sample_from_means(means, n_per_class, rng);
}

// Train and held-out test split drawn around the same means.
inline std::pair<BlobsDataset, BlobsDataset> gen_blobs_split(int classes, int n_train_per_class,
                                                             int n_test_per_class, int dim,
                                                             double separation,
                                                             std::uint64_t seed) {
  require(classes >= 2, "gen_blobs_split: need at least 2 classes");
  require(n_train_per_class >= 1 && n_test_per_class >= 1,
          "gen_blobs_split: need at least 1 sample per class");
  require(dim >= 1, "gen_blobs_split: dim must be >= 1");
  Rng rng(seed);
  Mat means(static_cast<std::size_t>(classes), static_cast<std::size_t>(dim));
  for (auto& m : means.data) m = separation * rng.gaussian();
  BlobsDataset train = detail::sample_from_means(means, n_train_per_class, rng);
  BlobsDataset test = detail::sample_from_means(means, n_test_per_class, rng);
  return {std::move(train), std::move(test)};
}

inline Batch to_batch(const BlobsDataset& ds) {
  Batch b;
  b.x = ds.x;
  b.y = ds.y;
  return b;
}

// --- continual task streams ---------------------------------------------------

enum class StreamKind { permute, rotate };

// Label-preserving input bijection. Exactly one of perm/rot is populated for
// a non-identity transform.
struct TaskTransform {
  std::vector<int> perm;  // x'[j] = x[perm[j]]
  Mat rot;                // x' = R x, R orthogonal
  bool identity = true;
};

inline Vec apply_transform(const TaskTransform& tf, const Vec& x) {
  if (tf.identity) return x;
  if (!tf.perm.empty()) {
    require(tf.perm.size() == x.size(), "apply_transform: width mismatch");
    Vec r(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) r[j] = x[static_cast<std::size_t>(tf.perm[j])];
    return r;
  }
  return matvec(tf.rot, x);
}

inline Vec invert_transform(const TaskTransform& tf, const Vec& x) {
  if (tf.identity) return x;
  if (!tf.perm.empty()) {
    require(tf.perm.size() == x.size(), "invert_transform: width mismatch");
    Vec r(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) r[static_cast<std::size_t>(tf.perm[j])] = x[j];
    return r;
  }
  // R is orthogonal, so the inverse is the transpose.
  Vec r(x.size(), 0.0);
  for (std::size_t i = 0; i < tf.rot.rows; ++i) {
    const double* ri = tf.rot.row(i);
    for (std::size_t j = 0; j < tf.rot.cols; ++j) r[j] += ri[j] * x[i];
  }
  return r;
}

struct Task {
  BlobsDataset train, test;
  TaskTransform transform;
};

struct TaskStream {
  StreamKind kind = StreamKind::permute;
  int d = 0, c = 0;
  std::vector<Task> tasks;
};

namespace detail {

inline TaskTransform sample_transform(StreamKind kind, int dim, Rng& rng) {
  TaskTransform tf;
  tf.identity = false;
  if (kind == StreamKind::permute) {
    tf.perm.resize(static_cast<std::size_t>(dim));
    std::iota(tf.perm.begin(), tf.perm.end(), 0);
    rng.shuffle(tf.perm);
    return tf;
  }
  // Rotation: one plane for dim 2, otherwise a composition of `dim` random
  // planar rotations. Angles stay away from 0 and pi so every task moves.
  tf.rot = Mat(static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) tf.rot(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
  const int planes = dim == 2 ? 1 : dim;
  constexpr double kPi = 3.14159265358979323846;
  for (int r = 0; r < planes; ++r) {
    std::size_t i = 0, j = 1;
    if (dim > 2) {
      i = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(dim)));
      j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(dim - 1)));
      if (j >= i) ++j;
    }
    const double theta = rng.uniform(kPi / 6.0, 5.0 * kPi / 6.0);
    const double ct = std::cos(theta), st = std::sin(theta);
    // rows i and j of R <- G(i, j, theta) * R
    for (std::size_t col = 0; col < tf.rot.cols; ++col) {
      const double a = tf.rot(i, col);
      const double b = tf.rot(j, col);
      tf.rot(i, col) = ct * a - st * b;
      tf.rot(j, col) = st * a + ct * b;
    }
  }
  return tf;
}

inline void transform_inputs(BlobsDataset& ds, const TaskTransform& tf) {
  if (tf.identity) return;
  Vec x(ds.x.cols);
  for (std::size_t r = 0; r < ds.x.rows; ++r) {
    std::copy(ds.x.row(r), ds.x.row(r) + ds.x.cols, x.begin());
    const Vec t = apply_transform(tf, x);
    std::copy(t.begin(), t.end(), ds.x.row(r));
  }
}

}  // namespace detail

// Task 1 is the base dataset itself (with a freshly drawn test split); each
// later task redraws train/test from the base means and pushes both through
// a fresh random transform.
inline TaskStream gen_stream(StreamKind kind, int t_count, const BlobsDataset& base,
                             std::uint64_t seed) {
  require(t_count >= 1, "gen_stream: need at least one task");
  require(base.size() > 0, "gen_stream: empty base dataset");
  TaskStream s;
  s.kind = kind;
  s.d = base.d;
  s.c = base.c;
  s.tasks.reserve(static_cast<std::size_t>(t_count));
  Rng rng(seed);
  for (int k = 0; k < t_count; ++k) {
    Task task;
    if (k == 0) {
      task.train = base;
      task.test = detail::sample_from_means(base.means, base.n_per_class, rng);
    } else {
      task.transform = detail::sample_transform(kind, base.d, rng);
      task.train = detail::sample_from_means(base.means, base.n_per_class, rng);
      task.test = detail::sample_from_means(base.means, base.n_per_class, rng);
      detail::transform_inputs(task.train, task.transform);
      detail::transform_inputs(task.test, task.transform);
    }
    s.tasks.push_back(std::move(task));
  }
  return s;
}

// --- training loops -----------------------------------------------------------

namespace detail {

inline Batch gather_batch(const BlobsDataset& ds, const std::vector<std::size_t>& order,
                          std::size_t begin, std::size_t end) {
  Batch b;
  b.x = Mat(end - begin, ds.x.cols);
  b.y.resize(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t src = order[i];
    std::copy(ds.x.row(src), ds.x.row(src) + ds.x.cols, b.x.row(i - begin));
    b.y[i - begin] = ds.y[src];
  }
  return b;
}

}  // namespace detail

struct ClassifyRunConfig {
  MlpConfig model;
  LossKind loss = LossKind::softmax_ce;
  OptimizerConfig opt;
  LrPolicy lr_policy;
  int epochs = 30;
  int batch = 16;
  int record_every = 1;
  bool use_dcl = false;  // displacement constraint rows
  DclConfig dcl;
  bool gem = false;      // one-sample memory row, cleared every epoch
  std::uint64_t seed = 1;
};

struct ClassifyResult {
  TrainTrace trace;
  std::vector<double> train_loss;  // mean mini-batch loss per epoch
  std::vector<double> test_error;  // 1 - accuracy per epoch
  Mlp model;
};

// Mini-batch training on one dataset. The correction sees the tracked layer
// (w2, b2) only; the hidden layer always takes the raw gradient.
inline ClassifyResult run_classification(const BlobsDataset& train, const BlobsDataset& test,
                                         const ClassifyRunConfig& rc,
                                         const Mlp* initial = nullptr) {
  require(train.size() > 0 && test.size() > 0, "run_classification: empty dataset");
  require(rc.epochs >= 1, "run_classification: epochs must be >= 1");
  require(rc.batch >= 1, "run_classification: batch must be >= 1");
  require(rc.record_every >= 1, "run_classification: record_every must be >= 1");
  require(rc.model.d == train.d && rc.model.c >= train.c,
          "run_classification: model does not fit dataset");

  Rng rng(rc.seed);
  ClassifyResult res;
  res.model = initial ? *initial : init_mlp(rc.model, rng);
  require(res.model.d() == train.d, "run_classification: loaded model width mismatch");

  DclConfig cfg = rc.dcl;
  cfg.use_memory = rc.gem;
  if (!rc.use_dcl) cfg.n_ref = 0;
  const bool correcting = rc.use_dcl || rc.gem;
  DclState st = DclState::init(cfg);
  MemoryBank mem(rc.gem ? 1 : 0);

  OptimizerConfig oc = rc.opt;
  MlpOptState ost;
  const Batch test_batch = to_batch(test);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  long t = 0;
  for (int epoch = 1; epoch <= rc.epochs; ++epoch) {
    oc.lr = schedule_lr(epoch, rc.lr_policy, rc.opt.lr);
    rng.shuffle(order);
    if (rc.gem) mem.clear();
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += rc.batch) {
      const std::size_t end = std::min(order.size(), begin + rc.batch);
      const Batch batch = detail::gather_batch(train, order, begin, end);
      Grads grads;
      const double loss = loss_and_grad(res.model, batch, rc.loss, &grads);
      const Vec tracked = tracked_gradient(grads);
      const Vec w_tracked = tracked_weights(res.model);
      Vec geff;
      bool corrected = false;
      if (correcting) {
        const std::vector<Vec> rows = memory_gradients(mem, res.model, rc.loss);
        geff = dcl_apply(tracked, w_tracked, st, cfg, rows);
        corrected = st.corrected_last;
      } else {
        geff = tracked;
      }
      if (t % rc.record_every == 0) {
        TraceRecord rec;
        rec.t = t;
        rec.epoch = epoch;
        rec.w = w_tracked;
        rec.g = tracked;
        rec.g_tilde = geff;
        rec.loss = loss;
        rec.lr = oc.lr;
        rec.corrected = corrected;
        res.trace.records.push_back(std::move(rec));
      }
      apply_update(res.model, grads, geff, ost, oc);
      if (rc.gem && mem.empty()) {
        const std::size_t first = order[0];
        Sample s;
        s.x.assign(train.x.row(first), train.x.row(first) + train.x.cols);
        s.y = train.y[first];
        mem.add(std::move(s));
      }
      loss_sum += loss;
      ++batches;
      ++t;
    }
    res.train_loss.push_back(loss_sum / static_cast<double>(batches));
    res.test_error.push_back(1.0 - accuracy(res.model, test_batch));
  }
  return res;
}

struct ContinualRunConfig {
  MlpConfig model;
  LossKind loss = LossKind::softmax_ce;
  OptimizerConfig opt;
  int epochs_per_task = 1;
  int batch = 10;
  int mem_per_task = 32;  // stored samples per finished task
  int record_every = 1;
  bool use_dcl = false;   // displacement constraint rows
  DclConfig dcl;          // dcl.use_memory: one mean-gradient row per past task
  std::uint64_t seed = 1;
};

struct ContinualResult {
  Mat r;         // r(i, j): accuracy on task j's test set after training task i
  Vec baseline;  // accuracy per task at random initialization
  TrainTrace trace;
  Mlp model;
};

// Sequential training over a task stream. References restart at every task
// boundary so displacement rows never span episodes; memory rows are the
// mean tracked gradient of each finished task's stored samples, recomputed
// at the current weights each step.
inline ContinualResult run_continual(const TaskStream& stream, const ContinualRunConfig& rc) {
  const int t_count = static_cast<int>(stream.tasks.size());
  require(t_count >= 1, "run_continual: empty stream");
  require(rc.epochs_per_task >= 1, "run_continual: epochs_per_task must be >= 1");
  require(rc.batch >= 1, "run_continual: batch must be >= 1");
  require(rc.mem_per_task >= 0, "run_continual: mem_per_task must be >= 0");
  require(rc.record_every >= 1, "run_continual: record_every must be >= 1");
  require(rc.model.d == stream.d && rc.model.c >= stream.c,
          "run_continual: model does not fit stream");

  Rng rng(rc.seed);
  ContinualResult res;
  res.model = init_mlp(rc.model, rng);
  res.r = Mat(static_cast<std::size_t>(t_count), static_cast<std::size_t>(t_count));
  res.baseline.resize(static_cast<std::size_t>(t_count));

  std::vector<Batch> test_batches;
  test_batches.reserve(static_cast<std::size_t>(t_count));
  for (const Task& task : stream.tasks) test_batches.push_back(to_batch(task.test));
  for (int j = 0; j < t_count; ++j) {
    res.baseline[static_cast<std::size_t>(j)] =
        accuracy(res.model, test_batches[static_cast<std::size_t>(j)]);
  }

  DclConfig cfg = rc.dcl;
  if (!rc.use_dcl) cfg.n_ref = 0;
  const bool correcting = rc.use_dcl || cfg.use_memory;

  OptimizerConfig oc = rc.opt;
  MlpOptState ost;
  std::vector<Batch> mem_batches;  // one per finished task
  long t = 0;
  for (int i = 0; i < t_count; ++i) {
    const BlobsDataset& train = stream.tasks[static_cast<std::size_t>(i)].train;
    DclState st = DclState::init(cfg);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= rc.epochs_per_task; ++epoch) {
      rng.shuffle(order);
      for (std::size_t begin = 0; begin < order.size(); begin += rc.batch) {
        const std::size_t end = std::min(order.size(), begin + rc.batch);
        const Batch batch = detail::gather_batch(train, order, begin, end);
        Grads grads;
        const double loss = loss_and_grad(res.model, batch, rc.loss, &grads);
        const Vec tracked = tracked_gradient(grads);
        const Vec w_tracked = tracked_weights(res.model);
        Vec geff;
        bool corrected = false;
        if (correcting) {
          std::vector<Vec> rows;
          if (cfg.use_memory) {
            rows.reserve(mem_batches.size());
            for (const Batch& mb : mem_batches) {
              rows.push_back(tracked_loss_grad(res.model, mb, rc.loss));
            }
          }
          geff = dcl_apply(tracked, w_tracked, st, cfg, rows);
          corrected = st.corrected_last;
        } else {
          geff = tracked;
        }
        if (t % rc.record_every == 0) {
          TraceRecord rec;
          rec.t = t;
          rec.epoch = i + 1;  // epoch column carries the 1-based task index
          rec.w = w_tracked;
          rec.g = tracked;
          rec.g_tilde = geff;
          rec.loss = loss;
          rec.lr = oc.lr;
          rec.corrected = corrected;
          res.trace.records.push_back(std::move(rec));
        }
        apply_update(res.model, grads, geff, ost, oc);
        ++t;
      }
    }
    if (rc.mem_per_task > 0) {
      // Keep the first stored samples of the finished task, original order.
      const std::size_t keep = std::min<std::size_t>(train.size(),
                                                     static_cast<std::size_t>(rc.mem_per_task));
      Batch mb;
      mb.x = Mat(keep, train.x.cols);
      mb.y.assign(train.y.begin(), train.y.begin() + static_cast<std::ptrdiff_t>(keep));
      for (std::size_t s = 0; s < keep; ++s) {
        std::copy(train.x.row(s), train.x.row(s) + train.x.cols, mb.x.row(s));
      }
      mem_batches.push_back(std::move(mb));
    }
    for (int j = 0; j < t_count; ++j) {
      res.r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          accuracy(res.model, test_batches[static_cast<std::size_t>(j)]);
    }
  }
  return res;
}

struct ContinualMetrics {
  double acc = 0.0;
  std::optional<double> bwt, fwt;
};

// Standard transfer metrics over the accuracy matrix: final mean accuracy,
// backward transfer (how much finished tasks degraded), forward transfer
// (pre-training benefit over the random-init baseline b).
inline ContinualMetrics continual_metrics(const Mat& r, const Vec& baseline) {
  require(r.rows == r.cols && r.rows >= 1, "continual_metrics: square matrix required");
  require(baseline.size() == r.rows, "continual_metrics: baseline length mismatch");
  const std::size_t t_count = r.rows;
  ContinualMetrics m;
  double acc = 0.0;
  for (std::size_t j = 0; j < t_count; ++j) acc += r(t_count - 1, j);
  m.acc = acc / static_cast<double>(t_count);
  if (t_count >= 2) {
    double bwt = 0.0, fwt = 0.0;
    for (std::size_t i = 0; i + 1 < t_count; ++i) bwt += r(t_count - 1, i) - r(i, i);
    for (std::size_t i = 1; i < t_count; ++i) fwt += r(i - 1, i) - baseline[i];
    m.bwt = bwt / static_cast<double>(t_count - 1);
    m.fwt = fwt / static_cast<double>(t_count - 1);
  }
  return m;
}

}  // namespace dcl
