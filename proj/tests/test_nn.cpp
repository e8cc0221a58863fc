#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "dafd/error.hpp"
#include "dafd/nn/adam.hpp"
#include "dafd/nn/checkpoint.hpp"
#include "dafd/nn/gradcheck.hpp"
#include "dafd/nn/layers.hpp"
#include "dafd/nn/model.hpp"

using namespace dafd;
using namespace dafd::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values) v = u(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central difference of f with respect to every entry of x.
Tensor numeric_grad(Tensor& x, const std::function<double()>& f, double eps = 1e-6) {
  Tensor g(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f();
    x[i] = keep - eps;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

void expect_close(const Tensor& analytic, const Tensor& numeric, double tol) {
  ASSERT_EQ(analytic.shape, numeric.shape);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
    EXPECT_LE(std::abs(analytic[i] - numeric[i]) / scale, tol) << "index " << i;
  }
}

Tensor unit_batch(std::size_t b, std::uint64_t seed) {
  return random_tensor({b, kInputChannels, kInputLength}, seed, 0.0, 1.0);
}

}  // namespace

// ---- layers ----

TEST(Conv, ShapeAndZeroKernel) {
  const Tensor x = random_tensor({2, 3, 66}, 1);
  const Tensor y = conv1d_full(x, Tensor({4, 3, 3}), Tensor({4}, 1.0));
  EXPECT_EQ(y.shape, (std::vector<std::size_t>{2, 4, 68}));
  for (double v : y.values) EXPECT_EQ(v, 1.0);
}

TEST(Conv, IdentityKernelPadsByOne) {
  const Tensor x = random_tensor({1, 1, 5}, 2);
  Tensor w({1, 1, 3});
  w[1] = 1.0;
  const Tensor y = conv1d_full(x, w, Tensor({1}));
  ASSERT_EQ(y.dim(2), 7u);
  EXPECT_EQ(y[0], 0.0);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(y[t + 1], x[t]);
  EXPECT_EQ(y[6], 0.0);
}

TEST(Conv, BackwardMatchesFiniteDifferences) {
  Tensor x = random_tensor({2, 3, 7}, 3);
  Tensor w = random_tensor({4, 3, 3}, 4);
  Tensor b = random_tensor({4}, 5);
  const Tensor c = random_tensor({2, 4, 9}, 6);
  const auto f = [&] { return dot(conv1d_full(x, w, b), c); };
  const ConvGrads g = conv1d_full_backward(x, w, c);
  expect_close(g.dx, numeric_grad(x, f), 1e-6);
  expect_close(g.dw, numeric_grad(w, f), 1e-6);
  expect_close(g.db, numeric_grad(b, f), 1e-6);
  EXPECT_THROW(conv1d_full(x, Tensor({4, 2, 3}), b), NumericError);
}

TEST(BatchNorm, TrainModeStandardizes) {
  const Tensor x = random_tensor({4, 4, 20}, 7, -3.0, 5.0);
  BatchNormCache cache;
  const Tensor y = batchnorm1d(x, Tensor({4}, 1.0), Tensor({4}), Tensor({4}), Tensor({4}, 1.0), Mode::kTrain, &cache);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t t = 0; t < 20; ++t) mean += y.at(b, c, t) / 80.0;
    }
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t t = 0; t < 20; ++t) sq += (y.at(b, c, t) - mean) * (y.at(b, c, t) - mean) / 80.0;
    }
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(sq, 1.0, 1e-4);  // epsilon shrinks the variance slightly
  }
}

TEST(BatchNorm, ConstantChannelGivesBeta) {
  const Tensor x({2, 4, 6}, 3.0);
  const Tensor y =
      batchnorm1d(x, Tensor({4}, 1.0), Tensor({4}, 0.5), Tensor({4}), Tensor({4}, 1.0), Mode::kTrain, nullptr);
  for (double v : y.values) EXPECT_LT(std::abs(v - 0.5), 1e-2);
}

TEST(BatchNorm, RunningStatisticsMomentum) {
  const Tensor x = random_tensor({3, 4, 10}, 8);
  BatchNormCache cache;
  batchnorm1d(x, Tensor({4}, 1.0), Tensor({4}), Tensor({4}), Tensor({4}, 1.0), Mode::kTrain, &cache);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t t = 0; t < 10; ++t) mean += x.at(b, c, t) / 30.0;
    }
    double var = 0.0;
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t t = 0; t < 10; ++t) var += (x.at(b, c, t) - mean) * (x.at(b, c, t) - mean) / 29.0;
    }
    EXPECT_NEAR(cache.next_running_mean[c], 0.1 * mean, 1e-14);
    EXPECT_NEAR(cache.next_running_var[c], 0.9 + 0.1 * var, 1e-14);
  }
}

TEST(BatchNorm, EvalIsBatchIndependent) {
  const Tensor rm = random_tensor({4}, 9), rv = random_tensor({4}, 10, 0.5, 2.0);
  const Tensor g = random_tensor({4}, 11), be = random_tensor({4}, 12);
  Tensor pair = random_tensor({2, 4, 5}, 13);
  for (std::size_t i = 0; i < 20; ++i) pair[20 + i] = pair[i];
  const Tensor y = batchnorm1d(pair, g, be, rm, rv, Mode::kEval, nullptr);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(y[i], y[20 + i]);
  Tensor single({1, 4, 5});
  for (std::size_t i = 0; i < 20; ++i) single[i] = pair[i];
  const Tensor ys = batchnorm1d(single, g, be, rm, rv, Mode::kEval, nullptr);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(ys[i], y[i]);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  Tensor x = random_tensor({3, 4, 6}, 14);
  Tensor gamma = random_tensor({4}, 15, 0.5, 1.5);
  Tensor beta = random_tensor({4}, 16);
  const Tensor c = random_tensor({3, 4, 6}, 17);
  const auto f = [&] {
    return dot(batchnorm1d(x, gamma, beta, Tensor({4}), Tensor({4}, 1.0), Mode::kTrain, nullptr), c);
  };
  BatchNormCache cache;
  batchnorm1d(x, gamma, beta, Tensor({4}), Tensor({4}, 1.0), Mode::kTrain, &cache);
  const BatchNormGrads g = batchnorm1d_backward(cache, gamma, c);
  expect_close(g.dx, numeric_grad(x, f), 1e-6);
  expect_close(g.dgamma, numeric_grad(gamma, f), 1e-6);
  expect_close(g.dbeta, numeric_grad(beta, f), 1e-6);
}

TEST(Relu, ForwardAndSubgradient) {
  Tensor x({3});
  x.values = {-1.0, 0.0, 2.0};
  EXPECT_EQ(relu(x).values, (std::vector<double>{0.0, 0.0, 2.0}));
  const Tensor dy({3}, 1.0);
  EXPECT_EQ(relu_backward(x, dy).values, (std::vector<double>{0.0, 0.0, 1.0}));
  Tensor pos = random_tensor({10}, 18, 0.1, 1.0);
  EXPECT_EQ(relu(pos), pos);
  Tensor neg({1}, -3.0);
  EXPECT_EQ(relu_backward(neg, Tensor({1}, 5.0))[0], 0.0);
}

TEST(MaxPool, PairsAndTies) {
  Tensor x({1, 1, 4});
  x.values = {1, 3, 2, 5};
  EXPECT_EQ(maxpool2(x).y.values, (std::vector<double>{3, 5}));
  Tensor tie({1, 1, 2}, 2.0);
  const PoolResult p = maxpool2(tie);
  const Tensor dx = maxpool2_backward(tie.shape, p.argmax, Tensor({1, 1, 1}, 1.0));
  EXPECT_EQ(dx.values, (std::vector<double>{1.0, 0.0}));
  for (std::size_t len : {68u, 36u, 20u}) {
    EXPECT_EQ(maxpool2(Tensor({1, 4, len})).y.dim(2), len / 2);
  }
  Tensor odd({1, 1, 5});
  odd.values = {0, 1, 2, 3, 9};
  EXPECT_EQ(maxpool2(odd).y.values, (std::vector<double>{1, 3}));
  EXPECT_THROW(maxpool2(Tensor({1, 1, 1})), NumericError);
}

TEST(Linear, ZeroAndIdentity) {
  const Tensor x = random_tensor({3, 4}, 19);
  const Tensor b = random_tensor({4}, 20);
  const Tensor y0 = linear(x, Tensor({4, 4}), b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y0.at(i, j), b[j]);
  }
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(linear(x, eye, Tensor({4})), x);
  EXPECT_THROW(linear(x, Tensor({5, 4}), b), NumericError);
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
  Tensor x = random_tensor({3, 5}, 21);
  Tensor w = random_tensor({5, 2}, 22);
  Tensor b = random_tensor({2}, 23);
  const Tensor c = random_tensor({3, 2}, 24);
  const auto f = [&] { return dot(linear(x, w, b), c); };
  const LinearGrads g = linear_backward(x, w, c);
  expect_close(g.dx, numeric_grad(x, f), 1e-6);
  expect_close(g.dw, numeric_grad(w, f), 1e-6);
  expect_close(g.db, numeric_grad(b, f), 1e-6);
}

TEST(Dropout, IdentityCases) {
  const Tensor x = random_tensor({50}, 25);
  std::mt19937_64 rng(1);
  EXPECT_EQ(dropout(x, 0.0, rng, Mode::kTrain, nullptr), x);
  EXPECT_EQ(dropout(x, 0.0, rng, Mode::kEval, nullptr), x);
  EXPECT_EQ(dropout(x, 0.5, rng, Mode::kEval, nullptr), x);
  EXPECT_THROW(dropout(x, 1.0, rng, Mode::kTrain, nullptr), ConfigError);
}

TEST(Dropout, PreservesExpectation) {
  const Tensor x({100000}, 1.0);
  std::mt19937_64 rng(2);
  Tensor mask;
  const Tensor y = dropout(x, 0.5, rng, Mode::kTrain, &mask);
  double mean = 0.0;
  for (double v : y.values) mean += v / 1e5;
  EXPECT_NEAR(mean, 1.0, 0.02);
  for (double m : mask.values) EXPECT_TRUE(m == 0.0 || m == 2.0);
}

TEST(Grl, ForwardIdentityBackwardScaling) {
  const Tensor x = random_tensor({4, 40}, 26, -1e3, 1e3);
  EXPECT_EQ(grl(x), x);
  Tensor g({2});
  g.values = {0.2, -0.3};
  EXPECT_EQ(grl_backward(g, 1.0).values, (std::vector<double>{-0.2, 0.3}));
  for (double lambda : {0.0, 0.31, 1.0, 1.3}) {
    const Tensor dy = random_tensor({4, 40}, 27);
    const Tensor dx = grl_backward(dy, lambda);
    for (std::size_t i = 0; i < dy.size(); ++i) EXPECT_EQ(dx[i], -lambda * dy[i]);
  }
  for (double v : grl_backward(random_tensor({10}, 28), 0.0).values) EXPECT_EQ(v, 0.0);
}

TEST(SoftmaxCE, Examples) {
  Tensor z({1, 2});
  EXPECT_NEAR(softmax_ce(z, {0}).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(softmax_ce(z, {1}).loss, std::log(2.0), 1e-15);
  z.values = {100.0, 0.0};
  EXPECT_LT(softmax_ce(z, {0}).loss, 1e-10);
}

TEST(SoftmaxCE, GradientAndProbabilities) {
  Tensor z = random_tensor({5, 2}, 29, -4.0, 4.0);
  const std::vector<int> targets{0, 1, 1, 0, 1};
  const SoftmaxCE r = softmax_ce(z, targets);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.probs.at(i, 0) + r.probs.at(i, 1), 1.0, 1e-12);
  const Tensor n = numeric_grad(z, [&] { return softmax_ce(z, targets).loss; }, 1e-5);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_LE(std::abs(r.grad[i] - n[i]) / std::max(std::abs(n[i]), 1e-12), 1e-6);
  }
}

// ---- model ----

TEST(Model, ShapeChain) {
  const ModelParams p = ModelParams::init(1);
  std::mt19937_64 rng(0);
  const ForwardResult r = forward_pass(p, unit_batch(8, 1), 1.0, Mode::kTrain, 0.2, rng);
  const std::size_t conv_len[] = {68, 36, 20};
  const std::size_t pooled_len[] = {34, 18, 10};
  for (std::size_t i = 0; i < kBlocks; ++i) {
    EXPECT_EQ(r.cache.blocks[i].conv.shape, (std::vector<std::size_t>{8, 4, conv_len[i]}));
    if (i + 1 < kBlocks) EXPECT_EQ(r.cache.blocks[i + 1].input.dim(2), pooled_len[i]);
  }
  EXPECT_EQ(r.features.shape, (std::vector<std::size_t>{8, 40}));
  EXPECT_EQ(r.fall_logits.shape, (std::vector<std::size_t>{8, 2}));
  EXPECT_EQ(r.domain_logits.shape, (std::vector<std::size_t>{8, 2}));
  EXPECT_EQ(p.fall_head.w1.shape, (std::vector<std::size_t>{40, 50}));
  EXPECT_EQ(p.fall_head.w2.shape, (std::vector<std::size_t>{50, 2}));
  EXPECT_THROW(forward_pass(p, Tensor({2, 3, 65}), 1.0, Mode::kEval, 0.0, rng), NumericError);
}

TEST(Model, EvalDeterministicAndLambdaFreeForward) {
  const ModelParams p = ModelParams::init(2);
  const Tensor x = unit_batch(6, 2);
  std::mt19937_64 r1(5), r2(5);
  const ForwardResult a = forward_pass(p, x, 1.0, Mode::kEval, 0.5, r1);
  const ForwardResult b = forward_pass(p, x, 1.0, Mode::kEval, 0.5, r2);
  EXPECT_EQ(a.fall_logits, b.fall_logits);
  EXPECT_EQ(a.domain_logits, b.domain_logits);
  std::mt19937_64 r3(9), r4(9);
  const ForwardResult c = forward_pass(p, x, 0.0, Mode::kTrain, 0.5, r3);
  const ForwardResult d = forward_pass(p, x, 1.0, Mode::kTrain, 0.5, r4);
  EXPECT_EQ(c.features, d.features);
  EXPECT_EQ(c.fall_logits, d.fall_logits);
  EXPECT_EQ(c.domain_logits, d.domain_logits);
  EXPECT_EQ(extract_features(p, x), a.features);
}

TEST(Model, InitRanges) {
  const ModelParams p = ModelParams::init(3);
  for (double v : p.extractor[0].weight.values) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 9.0));
  for (double v : p.extractor[1].weight.values) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 12.0));
  for (double v : p.fall_head.w1.values) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 40.0));
  for (double v : p.domain_head.w2.values) EXPECT_LE(std::abs(v), std::sqrt(1.0 / 50.0));
  for (double v : p.fall_head.b1.values) EXPECT_EQ(v, 0.0);
  for (double v : p.extractor[2].gamma.values) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(ModelParams::init(3), p);
  EXPECT_NE(ModelParams::init(4), p);
}

TEST(Model, BackwardShapesAndReproducibility) {
  const ModelParams p = ModelParams::init(4);
  std::mt19937_64 r1(1), r2(1);
  const ForwardResult f1 = forward_pass(p, unit_batch(4, 3), 1.0, Mode::kTrain, 0.2, r1);
  const ForwardResult f2 = forward_pass(p, unit_batch(4, 3), 1.0, Mode::kTrain, 0.2, r2);
  const BackwardResult b1 = backward_pass(p, f1.cache, default_check_targets(4));
  const BackwardResult b2 = backward_pass(p, f2.cache, default_check_targets(4));
  EXPECT_EQ(b1.grads, b2.grads);
  const auto params = learnable(p);
  const auto grads = learnable(b1.grads);
  ASSERT_EQ(params.size(), grads.size());
  for (std::size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i].tensor->shape, grads[i].tensor->shape);
}

// Domain loss only, so every extractor gradient comes through the reversal layer.
TEST(Model, ReversalVersusIdentityPath) {
  const ModelParams p = ModelParams::init(5);
  LossTargets targets{{-1, -1, -1, -1}, {0, 0, 1, 1}};
  for (double lambda : {0.0, 0.31, 1.0, 1.3}) {
    std::mt19937_64 rng(0);
    const ForwardResult f = forward_pass(p, unit_batch(4, 4), lambda, Mode::kTrain, 0.0, rng);
    const BackwardResult rev = backward_pass(p, f.cache, targets, DomainPath::kReversed);
    const BackwardResult id = backward_pass(p, f.cache, targets, DomainPath::kIdentity);
    EXPECT_EQ(rev.grads.domain_head, id.grads.domain_head);
    EXPECT_EQ(rev.loss_domain, id.loss_domain);
    const auto a = learnable(rev.grads);
    const auto b = learnable(id.grads);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].group != ParamGroup::kExtractor) continue;
      for (std::size_t k = 0; k < a[i].tensor->size(); ++k) {
        const double want = -lambda * (*b[i].tensor)[k];
        if (lambda == 0.0 || lambda == 1.0) {
          EXPECT_EQ((*a[i].tensor)[k], want) << a[i].name;
        } else {
          EXPECT_NEAR((*a[i].tensor)[k], want, 1e-12 * std::max(1.0, std::abs(want))) << a[i].name;
        }
      }
    }
  }
}

TEST(Model, LambdaZeroBlocksDomainGradient) {
  const ModelParams p = ModelParams::init(6);
  std::mt19937_64 rng(0);
  const ForwardResult f = forward_pass(p, unit_batch(4, 5), 0.0, Mode::kTrain, 0.0, rng);
  const BackwardResult only_domain = backward_pass(p, f.cache, {{-1, -1, -1, -1}, {0, 0, 1, 1}});
  for (const auto& ref : learnable(only_domain.grads)) {
    if (ref.group != ParamGroup::kExtractor) continue;
    for (double v : ref.tensor->values) EXPECT_EQ(v, 0.0) << ref.name;
  }
  const BackwardResult both = backward_pass(p, f.cache, {{0, 1, 0, 1}, {0, 0, 1, 1}});
  const BackwardResult fall = backward_pass(p, f.cache, {{0, 1, 0, 1}, {}});
  for (std::size_t i = 0; i < kBlocks; ++i) EXPECT_EQ(both.grads.extractor[i].weight, fall.grads.extractor[i].weight);
}

TEST(Model, MaskedFallTargets) {
  const ModelParams p = ModelParams::init(7);
  std::mt19937_64 rng(0);
  const ForwardResult f = forward_pass(p, unit_batch(4, 6), 1.0, Mode::kEval, 0.0, rng);
  const auto [fall, domain] = compute_losses(f.cache, {{1, -1, 0, -1}, {}});
  Tensor two({2, 2});
  for (std::size_t j = 0; j < 2; ++j) {
    two.at(0, j) = f.fall_logits.at(0, j);
    two.at(1, j) = f.fall_logits.at(2, j);
  }
  EXPECT_DOUBLE_EQ(fall, softmax_ce(two, {1, 0}).loss);
  EXPECT_EQ(domain, 0.0);
}

// ---- gradient check ----

TEST(GradCheck, FreshModelsPass) {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    for (double lambda : {0.31, 1.0, 1.3}) {
      const GradCheckResult r =
          grad_check(ModelParams::init(seed), unit_batch(4, 100 + seed), default_check_targets(4), lambda);
      EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " lambda " << lambda << " " << r.worst_param;
      EXPECT_GT(r.checked, 4000u);
    }
  }
}

TEST(GradCheck, MutationIsDetected) {
  GradCheckOptions opt;
  opt.mutate = [](ModelGrads& g) { g.extractor[0].weight[5] += 0.1; };
  const GradCheckResult r = grad_check(ModelParams::init(1), unit_batch(4, 7), default_check_targets(4), 1.0, opt);
  EXPECT_GT(r.max_rel_error, 1e-2);
  EXPECT_EQ(r.worst_param, "extractor.0.weight");
  EXPECT_EQ(r.worst_index, 5u);
}

// ---- optimizer ----

TEST(Adam, ZeroGradientNoDecayLeavesParameters) {
  ModelParams p = ModelParams::init(8);
  const ModelParams before = p;
  AdamState s = AdamState::zeros();
  for (ParamGroup g : {ParamGroup::kExtractor, ParamGroup::kFallHead, ParamGroup::kDomainHead}) {
    adam_step(p, zero_grads(), s, g, 1e-3, 0.0);
  }
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, (std::array<std::int64_t, 3>{1, 1, 1}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ModelParams p = ModelParams::init(9);
  const ModelParams before = p;
  ModelGrads g = zero_grads();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(0.01, 2.0);
  for (auto& ref : learnable(g)) {
    for (double& v : ref.tensor->values) v = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
  }
  AdamState s = AdamState::zeros();
  const double lr = 5e-4;
  adam_step(p, g, s, ParamGroup::kFallHead, lr, 0.0);
  const auto after = learnable(std::as_const(p));
  const auto prior = learnable(before);
  const auto grads = learnable(std::as_const(g));
  for (std::size_t i = 0; i < after.size(); ++i) {
    for (std::size_t k = 0; k < after[i].tensor->size(); ++k) {
      const double delta = (*after[i].tensor)[k] - (*prior[i].tensor)[k];
      if (after[i].group == ParamGroup::kFallHead) {
        const double want = -lr * ((*grads[i].tensor)[k] > 0 ? 1.0 : -1.0);
        EXPECT_NEAR(delta, want, 1e-6);
      } else {
        EXPECT_EQ(delta, 0.0);
      }
    }
  }
}

// Adam moves each scalar by at most about lr per step, so only weights that
// cannot reach zero within the run are expected to shrink at every step.
TEST(Adam, DecayOnlyShrinksMonotonically) {
  const double lr = 1e-4;
  ModelParams p = ModelParams::init(10);
  AdamState s = AdamState::zeros();
  ModelParams prev = p;
  std::size_t tracked = 0;
  for (int step = 0; step < 100; ++step) {
    for (ParamGroup g : {ParamGroup::kExtractor, ParamGroup::kFallHead, ParamGroup::kDomainHead}) {
      adam_step(p, zero_grads(), s, g, lr, 0.01);
    }
    const auto now = learnable(std::as_const(p));
    const auto then = learnable(std::as_const(prev));
    for (std::size_t i = 0; i < now.size(); ++i) {
      double norm_now = 0.0, norm_then = 0.0;
      for (std::size_t k = 0; k < now[i].tensor->size(); ++k) {
        const double a = std::abs((*now[i].tensor)[k]);
        const double b = std::abs((*then[i].tensor)[k]);
        norm_now += a * a;
        norm_then += b * b;
        if (b < 200.0 * lr) continue;
        ++tracked;
        ASSERT_LT(a, b) << now[i].name << " step " << step;
      }
      if (norm_then > 0.0) EXPECT_LT(norm_now, norm_then) << now[i].name << " step " << step;
    }
    prev = p;
  }
  EXPECT_GT(tracked, 100000u);
}

TEST(Adam, NonFiniteGradientAbortsUntouched) {
  ModelParams p = ModelParams::init(11);
  const ModelParams before = p;
  AdamState s = AdamState::zeros();
  ModelGrads g = zero_grads();
  g.extractor[1].bias[2] = std::nan("");
  EXPECT_THROW(adam_step(p, g, s, ParamGroup::kExtractor, 1e-3, 0.01), NumericError);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s, AdamState::zeros());
}

// ---- checkpoint ----

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint c{ModelParams::init(12), AdamState::zeros(), Hyperparams{0.5, 0.0005, 0.31}};
  std::mt19937_64 rng(0);
  for (int i = 0; i < 3; ++i) {
    const ForwardResult f = forward_pass(c.params, unit_batch(4, 20 + i), 0.31, Mode::kTrain, 0.5, rng);
    const BackwardResult b = backward_pass(c.params, f.cache, default_check_targets(4));
    commit_running_stats(c.params, f.cache);
    adam_step(c.params, b.grads, c.adam, ParamGroup::kExtractor, 1e-3, 0.01);
    adam_step(c.params, b.grads, c.adam, ParamGroup::kFallHead, 1e-3, 0.01);
  }
  const std::string text = checkpoint_to_text(c);
  const Checkpoint back = checkpoint_from_text(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(checkpoint_to_text(back), text);

  const auto path = (std::filesystem::temp_directory_path() / "dafd_test_ckpt.txt").string();
  save_checkpoint(c, path);
  EXPECT_EQ(load_checkpoint(path), c);
}

TEST(Checkpoint, RejectsDamagedFiles) {
  const std::string text = checkpoint_to_text({ModelParams::init(13), AdamState::zeros(), Hyperparams{}});
  EXPECT_THROW(checkpoint_from_text("not a checkpoint\n"), DataError);
  const auto cut = text.find("tensor param.fall_head.w1");
  ASSERT_NE(cut, std::string::npos);
  const auto end = text.find('\n', cut);
  EXPECT_THROW(checkpoint_from_text(text.substr(0, cut) + text.substr(end + 1)), DataError);
  EXPECT_THROW(checkpoint_from_text(text + text.substr(cut, end - cut + 1)), DataError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.txt"), DataError);
}
