#include "dcl/analysis.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "dcl/rng.hpp"

using namespace dcl;

namespace {

TraceRecord rec(long t, int epoch, Vec w, Vec g, Vec g_tilde, bool corrected) {
  TraceRecord r;
  r.t = t;
  r.epoch = epoch;
  r.w = std::move(w);
  r.g = std::move(g);
  r.g_tilde = std::move(g_tilde);
  r.corrected = corrected;
  return r;
}

TraceRecord raw(long t, int epoch, Vec w, Vec g) {
  Vec gt = g;
  return rec(t, epoch, std::move(w), std::move(g), std::move(gt), false);
}

// Fixed-step gradient descent history on f(x) = 1/2 x'Qx.
BoundInput quadratic_descent(const Mat& q, Vec x0, double eta, int steps) {
  BoundInput b;
  b.lipschitz = largest_eigenvalue(q);
  b.eta = eta;
  Vec x = std::move(x0);
  for (int k = 0; k < steps; ++k) {
    const Vec g = matvec(q, x);
    b.grads.push_back(g);
    axpy(-eta, g, x);
  }
  return b;
}

}  // namespace

TEST(EffectiveGrad, PicksCorrectedColumnOnlyWhenFlagged) {
  const TraceRecord a = rec(0, 1, {0, 0}, {1, 2}, {3, 4}, false);
  const TraceRecord b = rec(1, 1, {0, 0}, {1, 2}, {3, 4}, true);
  EXPECT_EQ(effective_grad(a), (Vec{1, 2}));
  EXPECT_EQ(effective_grad(b), (Vec{3, 4}));
}

TEST(CongruencyAt, HandValues) {
  TrainTrace tr;
  tr.records.push_back(raw(0, 1, {0, 0}, {1, 0}));
  tr.records.push_back(raw(1, 1, {0, 0}, {0, 1}));
  tr.records.push_back(raw(2, 1, {0, 0}, {1, 1}));
  EXPECT_NEAR(*congruency_at(tr, 1, 0), 0.0, 1e-15);
  EXPECT_NEAR(*congruency_at(tr, 2, 0), 1.0, 1e-15);
  EXPECT_NEAR(*congruency_at(tr, 2, 1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CongruencyAt, UsesEffectiveGradients) {
  TrainTrace tr;
  tr.records.push_back(rec(0, 1, {0, 0}, {1, 0}, {0, 1}, true));  // effective (0,1)
  tr.records.push_back(raw(1, 1, {0, 0}, {0, 1}));
  EXPECT_NEAR(*congruency_at(tr, 1, 0), 1.0, 1e-15);
}

TEST(CongruencyAt, MissingWhenEitherVectorVanishes) {
  TrainTrace tr;
  tr.records.push_back(raw(0, 1, {0, 0}, {1, 0}));
  tr.records.push_back(raw(1, 1, {0, 0}, {-1, 0}));
  tr.records.push_back(raw(2, 1, {0, 0}, {1, 1}));
  tr.records.push_back(raw(3, 1, {0, 0}, {0, 0}));
  EXPECT_FALSE(congruency_at(tr, 2, 0).has_value());  // accumulated sum is zero
  EXPECT_TRUE(congruency_at(tr, 2, 1).has_value());
  EXPECT_FALSE(congruency_at(tr, 3, 2).has_value());  // step gradient is zero
}

TEST(CongruencyAt, IndexChecks) {
  TrainTrace tr;
  tr.records.push_back(raw(0, 1, {0}, {1}));
  tr.records.push_back(raw(1, 1, {0}, {1}));
  EXPECT_THROW(congruency_at(tr, 2, 0), std::out_of_range);
  EXPECT_THROW(congruency_at(tr, 1, 1), std::out_of_range);
}

TEST(EpochCongruency, MatchesDirectPerStepMean) {
  Rng rng(77);
  TrainTrace tr;
  for (int t = 0; t < 24; ++t) {
    const int epoch = 1 + t / 8;
    tr.records.push_back(raw(t, epoch, rng.gaussian_vec(3), rng.gaussian_vec(3)));
  }
  for (int epoch = 1; epoch <= 3; ++epoch) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 1; k < tr.records.size(); ++k) {
      if (tr.records[k].epoch != epoch) continue;
      if (auto c = congruency_at(tr, k, 0)) {
        sum += *c;
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(*epoch_congruency(tr, epoch), sum / n, 1e-12) << "epoch " << epoch;
  }
  EXPECT_FALSE(epoch_congruency(tr, 9).has_value());
}

TEST(EpochCongruency, AnchorShiftsTheAccumulationStart) {
  Rng rng(78);
  TrainTrace tr;
  for (int t = 0; t < 12; ++t) {
    tr.records.push_back(raw(t, 1, rng.gaussian_vec(2), rng.gaussian_vec(2)));
  }
  const std::size_t m = 5;
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = m + 1; k < tr.records.size(); ++k) {
    if (auto c = congruency_at(tr, k, m)) {
      sum += *c;
      ++n;
    }
  }
  EXPECT_NEAR(*epoch_congruency(tr, 1, m), sum / n, 1e-12);
}

TEST(PathCongruency, WholeRunMean) {
  Rng rng(79);
  TrainTrace tr;
  for (int t = 0; t < 15; ++t) {
    tr.records.push_back(raw(t, 1 + t / 5, rng.gaussian_vec(2), rng.gaussian_vec(2)));
  }
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    if (auto c = congruency_at(tr, k, 0)) {
      sum += *c;
      ++n;
    }
  }
  EXPECT_NEAR(*path_congruency(tr), sum / n, 1e-12);
  TrainTrace tiny;
  tiny.records.push_back(raw(0, 1, {0}, {1}));
  EXPECT_FALSE(path_congruency(tiny).has_value());
}

TEST(SgdIdentity, CongruencyEqualsCosineWithDisplacement) {
  // Under plain SGD the accumulated effective gradient since m is
  // (w_m - w_k) / eta, so the congruency equals cos(g_k, w_m - w_k).
  Rng rng(80);
  const double eta = 0.05;
  TrainTrace tr;
  Vec w = {0.4, -0.8, 0.1};
  for (int t = 0; t < 20; ++t) {
    const Vec g = rng.gaussian_vec(3);
    tr.records.push_back(raw(t, 1, w, g));
    axpy(-eta, g, w);
  }
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    for (std::size_t m : {std::size_t{0}, k - 1}) {
      const Vec disp = vsub(tr.records[m].w, tr.records[k].w);
      const auto nu = congruency_at(tr, k, m);
      ASSERT_TRUE(nu.has_value());
      EXPECT_NEAR(*nu, cosine_sim(tr.records[k].g, disp), 1e-9);
    }
  }
}

TEST(Magnitude, HandValues) {
  TrainTrace tr;
  tr.records.push_back(raw(0, 1, {0, 0}, {1, 1}));
  tr.records.push_back(raw(1, 1, {1, 0}, {1, 1}));
  tr.records.push_back(raw(2, 1, {1, 1}, {1, 1}));
  EXPECT_DOUBLE_EQ(*magnitude(tr, 1, MagnitudeMode::absolute), 0.8047378541243649);
  EXPECT_DOUBLE_EQ(*magnitude(tr, 1, MagnitudeMode::relative), 1.0);
  EXPECT_FALSE(magnitude(tr, 2, MagnitudeMode::absolute).has_value());
}

TEST(Magnitude, EpochFilterAndFirstRecordSkip) {
  TrainTrace tr;
  tr.records.push_back(raw(0, 1, {0, 0}, {1, 1}));
  tr.records.push_back(raw(1, 1, {3, 4}, {1, 1}));
  tr.records.push_back(raw(2, 2, {3, 0}, {1, 1}));
  // Epoch 2, absolute: ||(3,0) - (0,0)|| = 3. Relative: ||(3,0)-(3,4)|| = 4.
  EXPECT_DOUBLE_EQ(*magnitude(tr, 2, MagnitudeMode::absolute), 3.0);
  EXPECT_DOUBLE_EQ(*magnitude(tr, 2, MagnitudeMode::relative), 4.0);
  // Epoch 1 relative skips the very first record: only ||(3,4)|| = 5 counts.
  EXPECT_DOUBLE_EQ(*magnitude(tr, 1, MagnitudeMode::relative), 5.0);
  EXPECT_FALSE(magnitude(TrainTrace{}, 1, MagnitudeMode::absolute).has_value());
}

TEST(Bound, KEqualsOneCollapsesToClosedForm) {
  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    BoundInput b;
    b.lipschitz = rng.uniform(0.5, 4.0);
    b.eta = rng.uniform(0.01, 1.0 / b.lipschitz);
    b.grads.push_back(rng.gaussian_vec(3));
    Vec g1 = rng.gaussian_vec(3);
    b.grads.push_back(g1);
    const double expect =
        (1.0 - b.lipschitz * b.eta) * norm2(b.grads[0]) / norm2(b.grads[1]);
    const auto got = congruency_lower_bound(b, 1);
    ASSERT_TRUE(got.has_value());
    EXPECT_NEAR(*got, std::max(expect, -1.0), 1e-12);
  }
}

TEST(Bound, ExactOnOneDimensionalQuadratic) {
  Mat q(1, 1);
  q.data = {2.0};
  const auto b = quadratic_descent(q, {3.0}, 0.2, 6);
  for (std::size_t k = 1; k < b.grads.size(); ++k) {
    const auto measured = measured_congruency(b, k);
    const auto bound = congruency_lower_bound(b, k);
    ASSERT_TRUE(measured.has_value());
    ASSERT_TRUE(bound.has_value());
    EXPECT_NEAR(*measured, 1.0, 1e-12);
    EXPECT_LE(*bound, *measured + 1e-12);
  }
  // k=1 is tight in one dimension with all-positive gradients.
  EXPECT_NEAR(*congruency_lower_bound(b, 1), 1.0, 1e-12);
}

TEST(Bound, HoldsOnRandomQuadraticDescents) {
  Rng rng(82);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 2 + rng.below(3);
    Mat m(d, d);
    for (auto& x : m.data) x = rng.uniform(-1.0, 1.0);
    Mat q = gram(m);  // SPD a.s.
    const double l = largest_eigenvalue(q);
    ASSERT_GT(l, 0.0);
    const double eta = rng.uniform(0.05, 1.0) / l;
    const auto b = quadratic_descent(q, rng.gaussian_vec(d), eta, 12);
    BoundInput bi = b;
    bi.lipschitz = l;
    for (std::size_t k = 1; k < bi.grads.size(); ++k) {
      const auto measured = measured_congruency(bi, k);
      const auto bound = congruency_lower_bound(bi, k);
      if (!measured || !bound) continue;  // gradients can underflow to ~0
      EXPECT_LE(*bound, *measured + 1e-9) << "trial " << trial << " k " << k;
      EXPECT_GE(*bound, -1.0);
    }
  }
}

TEST(Bound, ClampsAtMinusOne) {
  BoundInput b;
  b.lipschitz = 5.0;
  b.eta = 1.0;  // deliberately past 1/L: the raw expression dives below -1
  b.grads = {{1.0, 0.0}, {0.1, 0.0}};
  EXPECT_DOUBLE_EQ(*congruency_lower_bound(b, 1), -1.0);
}

TEST(Bound, InputValidation) {
  BoundInput b;
  b.grads = {{1.0}, {1.0}};
  b.eta = 0.1;
  b.lipschitz = 0.0;
  EXPECT_THROW(congruency_lower_bound(b, 1), std::invalid_argument);
  b.lipschitz = 1.0;
  b.eta = 0.0;
  EXPECT_THROW(congruency_lower_bound(b, 1), std::invalid_argument);
  b.eta = 0.1;
  EXPECT_THROW(congruency_lower_bound(b, 0), std::invalid_argument);
  EXPECT_THROW(congruency_lower_bound(b, 2), std::invalid_argument);
  EXPECT_THROW(measured_congruency(b, 0), std::invalid_argument);
}

TEST(LargestEigenvalue, KnownSpectra) {
  Mat q(2, 2);
  q.data = {2.0, 1.0, 1.0, 3.0};
  EXPECT_NEAR(largest_eigenvalue(q), (5.0 + std::sqrt(5.0)) / 2.0, 1e-9);
  Mat d(3, 3);
  d.data = {0.5, 0, 0, 0, 7.25, 0, 0, 0, 1.0};
  EXPECT_NEAR(largest_eigenvalue(d), 7.25, 1e-9);
  Mat one(1, 1);
  one.data = {4.0};
  EXPECT_NEAR(largest_eigenvalue(one), 4.0, 1e-12);
  Mat bad(2, 3);
  EXPECT_THROW(largest_eigenvalue(bad), std::invalid_argument);
}

TEST(PairwiseSampleCongruency, IdenticalBatchesGiveOne) {
  Rng rng(83);
  MlpConfig mc;
  mc.d = 2;
  mc.h = 3;
  mc.c = 2;
  const Mlp m = init_mlp(mc, rng);
  Batch b;
  b.x = Mat(1, 2);
  b.x.data = {0.3, -0.9};
  b.y = {1};
  const auto c = pairwise_sample_congruency(m, LossKind::softmax_ce, b, b);
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(*c, 1.0, 1e-12);
}
