#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "compgrid/board.hpp"
#include "compgrid/error.hpp"
#include "compgrid/nn.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace compgrid;
using namespace compgrid::nn;
using compgrid::testing::check_vector;
using compgrid::testing::random_vector;
using compgrid::testing::TempDir;

namespace {

constexpr double kTolerance = 1e-6;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 0.5) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

}  // namespace

class DenseGrad : public ::testing::TestWithParam<Activation> {};

TEST_P(DenseGrad, MatchesFiniteDifferences) {
  Rng rng(1);
  Tensor w = random_tensor({5, 7}, rng);
  Tensor b = random_tensor({5}, rng);
  std::vector<double> x = random_vector(7, rng);
  const std::vector<double> c = random_vector(5, rng);
  const Activation act = GetParam();
  auto loss = [&] { return dot(dense_forward(w, b, x, act), c); };

  DenseCache cache;
  dense_forward(w, b, x, act, &cache);
  Tensor gw({5, 7});
  Tensor gb({5});
  const std::vector<double> gx = dense_backward(w, cache, act, c, gw, gb);

  EXPECT_LT(check_vector(w.values(), gw.values(), loss, "w").max_error, kTolerance);
  EXPECT_LT(check_vector(b.values(), gb.values(), loss, "b").max_error, kTolerance);
  EXPECT_LT(check_vector(x, gx, loss, "x").max_error, kTolerance);
}

INSTANTIATE_TEST_SUITE_P(Activations, DenseGrad,
                         ::testing::Values(Activation::Identity, Activation::Relu, Activation::Sigmoid,
                                           Activation::Tanh));

TEST(Dense, KnownValues) {
  Tensor w({2, 3});
  const double wv[] = {1, 2, 3, -1, 0, 1};
  std::copy(std::begin(wv), std::end(wv), w.data());
  Tensor b({2});
  b[0] = 0.5;
  b[1] = -10;
  const std::vector<double> x{1, 1, 1};
  const auto y = dense_forward(w, b, x, Activation::Relu);
  EXPECT_DOUBLE_EQ(y[0], 6.5);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_THROW(dense_forward(w, b, std::vector<double>{1, 2}, Activation::Relu), ShapeError);
}

TEST(Conv, CentreKernelIsIdentity) {
  Rng rng(2);
  Tensor w({1, 1, 3, 3});
  w[4] = 1.0;
  Tensor b({1});
  const std::vector<double> x = random_vector(kTileCount, rng);
  const auto y = conv_forward(w, b, x, Activation::Identity);
  for (int i = 0; i < kTileCount; ++i) EXPECT_DOUBLE_EQ(y[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]);
}

TEST(Conv, ShiftKernelUsesZeroPadding) {
  Tensor w({1, 1, 3, 3});
  w[5] = 1.0;  // row 1, column 2: reads the east neighbour
  Tensor b({1});
  std::vector<double> x(kTileCount);
  std::iota(x.begin(), x.end(), 1.0);
  const auto y = conv_forward(w, b, x, Activation::Identity);
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const double expected = c + 1 < kGridSize ? x[static_cast<std::size_t>(r * kGridSize + c + 1)] : 0.0;
      EXPECT_DOUBLE_EQ(y[static_cast<std::size_t>(r * kGridSize + c)], expected);
    }
  }
}

TEST(Conv, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  std::vector<double> x = random_vector(2 * kTileCount, rng);
  const std::vector<double> c = random_vector(3 * kTileCount, rng);
  for (Activation act : {Activation::Identity, Activation::Tanh, Activation::Relu}) {
    auto loss = [&] { return dot(conv_forward(w, b, x, act), c); };
    ConvCache cache;
    conv_forward(w, b, x, act, &cache);
    Tensor gw(w.shape());
    Tensor gb(b.shape());
    const auto gx = conv_backward(w, cache, act, c, gw, gb);
    EXPECT_LT(check_vector(w.values(), gw.values(), loss, "w").max_error, kTolerance);
    EXPECT_LT(check_vector(b.values(), gb.values(), loss, "b").max_error, kTolerance);
    EXPECT_LT(check_vector(x, gx, loss, "x").max_error, kTolerance);
  }
}

TEST(Lstm, ThreeStepGradientMatchesFiniteDifferences) {
  Rng rng(4);
  const std::size_t in = 4, hidden = 3, steps = 3;
  Tensor wi = random_tensor({4 * hidden, in}, rng);
  Tensor wh = random_tensor({4 * hidden, hidden}, rng);
  Tensor bias = random_tensor({4 * hidden}, rng);
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> cs;
  for (std::size_t t = 0; t < steps; ++t) {
    xs.push_back(random_vector(in, rng));
    cs.push_back(random_vector(hidden, rng));
  }
  const std::vector<double> cell_weight = random_vector(hidden, rng);

  // Loss: sum_t c_t . h_t + d . c_T.
  auto loss = [&] {
    LstmState s = LstmState::zeros(hidden);
    double total = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      s = lstm_step(wi, wh, bias, xs[t], s);
      total += dot(s.hidden, cs[t]);
    }
    return total + dot(s.cell, cell_weight);
  };

  std::vector<LstmCache> caches(steps);
  LstmState s = LstmState::zeros(hidden);
  for (std::size_t t = 0; t < steps; ++t) s = lstm_step(wi, wh, bias, xs[t], s, &caches[t]);
  Tensor gwi(wi.shape());
  Tensor gwh(wh.shape());
  Tensor gb(bias.shape());
  std::vector<std::vector<double>> gxs(steps);
  std::vector<double> gh(hidden, 0.0);
  std::vector<double> gc = cell_weight;
  for (std::size_t t = steps; t-- > 0;) {
    std::vector<double> dh = cs[t];
    for (std::size_t k = 0; k < hidden; ++k) dh[k] += gh[k];
    const LstmGrads g = lstm_backward(wi, wh, caches[t], dh, gc, gwi, gwh, gb);
    gxs[t] = g.input;
    gh = g.hidden_prev;
    gc = g.cell_prev;
  }

  EXPECT_LT(check_vector(wi.values(), gwi.values(), loss, "w_input").max_error, kTolerance);
  EXPECT_LT(check_vector(wh.values(), gwh.values(), loss, "w_hidden").max_error, kTolerance);
  EXPECT_LT(check_vector(bias.values(), gb.values(), loss, "bias").max_error, kTolerance);
  for (std::size_t t = 0; t < steps; ++t) {
    EXPECT_LT(check_vector(xs[t], gxs[t], loss, "x" + std::to_string(t)).max_error, kTolerance);
  }
}

TEST(Lstm, ZeroWeightsGiveHalfGatedCell) {
  const std::size_t hidden = 2;
  Tensor wi({4 * hidden, 1});
  Tensor wh({4 * hidden, hidden});
  Tensor bias({4 * hidden});
  const LstmState s = lstm_step(wi, wh, bias, std::vector<double>{1.0}, LstmState::zeros(hidden));
  for (double h : s.hidden) EXPECT_DOUBLE_EQ(h, 0.0);  // candidate tanh(0) = 0
  for (double c : s.cell) EXPECT_DOUBLE_EQ(c, 0.0);
}

TEST(Losses, BceMatchesDefinitionAndGradient) {
  EXPECT_NEAR(bce_loss(0.5, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(0.9, 0.0), -std::log(0.1), 1e-12);
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1.0)));
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 0.0)));
  for (double p : {0.1, 0.37, 0.8}) {
    for (double y : {0.0, 1.0}) {
      const double h = 1e-6;
      const double numeric = (bce_loss(p + h, y) - bce_loss(p - h, y)) / (2 * h);
      EXPECT_LT(compgrid::testing::relative_error(bce_grad(p, y), numeric), 1e-6);
    }
  }
  for (double z : {-30.0, -2.0, 0.0, 1.5, 30.0}) {
    for (double y : {0.0, 1.0}) {
      if (std::abs(z) < 20) EXPECT_NEAR(bce_with_logit(z, y), bce_loss(sigmoid(z), y), 1e-9);
      const double h = 1e-5;
      const double numeric = (bce_with_logit(z + h, y) - bce_with_logit(z - h, y)) / (2 * h);
      EXPECT_NEAR(numeric, sigmoid(z) - y, 1e-6);
    }
  }
}

TEST(Losses, SoftmaxProperties) {
  const std::vector<double> z{1.0, 2.0, 3.0};
  const auto p = softmax(z);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_GT(p[2], p[1]);
  const std::vector<double> shifted{1001.0, 1002.0, 1003.0};
  const auto q = softmax(shifted);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  const auto lp = log_softmax(shifted);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(std::exp(lp[i]), p[i], 1e-12);
  const std::vector<double> uniform(49, 0.0);
  EXPECT_NEAR(entropy(softmax(uniform)), std::log(49.0), 1e-12);
  EXPECT_DOUBLE_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
}

TEST(Losses, LogSoftmaxGradient) {
  Rng rng(5);
  std::vector<double> z = random_vector(6, rng, -2, 2);
  const std::vector<double> c = random_vector(6, rng);
  auto loss = [&] { return dot(log_softmax(z), c); };
  // d/dz_j sum_i c_i log p_i = c_j - p_j * sum_i c_i
  const auto p = softmax(z);
  const double csum = std::accumulate(c.begin(), c.end(), 0.0);
  std::vector<double> analytic(6);
  for (std::size_t j = 0; j < 6; ++j) analytic[j] = c[j] - p[j] * csum;
  EXPECT_LT(check_vector(z, analytic, loss).max_error, kTolerance);
}

TEST(Optim, AdamMinimisesQuadratic) {
  ParamSet params;
  Tensor& x = params.add("x", {3});
  x[0] = -2;
  x[1] = 0;
  x[2] = 5;
  Adam opt(params, {.learning_rate = 0.05});
  for (int i = 0; i < 3000; ++i) {
    ParamSet g = params.zeros_like();
    for (std::size_t k = 0; k < 3; ++k) g.at("x")[k] = 2 * (params.at("x")[k] - 3.0);
    opt.step(params, g);
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(params.at("x")[k], 3.0, 1e-3);
  EXPECT_EQ(opt.steps(), 3000);
}

TEST(Optim, AdamFirstStepIsLearningRateSized) {
  ParamSet params;
  params.add("x", {2});
  Adam opt(params, {.learning_rate = 0.01});
  ParamSet g = params.zeros_like();
  g.at("x")[0] = 123.0;
  g.at("x")[1] = -0.001;
  opt.step(params, g);
  EXPECT_NEAR(params.at("x")[0], -0.01, 1e-6);
  EXPECT_NEAR(params.at("x")[1], 0.01, 1e-4);
}

TEST(Optim, NonFiniteGradientsRejected) {
  ParamSet params;
  params.add("x", {2}).fill(1.0);
  const ParamSet before = params;
  ParamSet g = params.zeros_like();
  g.at("x")[1] = std::numeric_limits<double>::quiet_NaN();
  Adam opt(params, {});
  EXPECT_THROW(opt.step(params, g), DivergenceError);
  EXPECT_EQ(params, before);
  EXPECT_THROW(sgd_step(params, g, 0.1), DivergenceError);
  EXPECT_EQ(params, before);
}

TEST(Optim, RmsPropDescends) {
  ParamSet params;
  params.add("x", {1})[0] = 4.0;
  RmsProp opt(params, {});
  for (int i = 0; i < 2000; ++i) {
    ParamSet g = params.zeros_like();
    g.at("x")[0] = 2 * params.at("x")[0];
    opt.step(params, g, 0.01);
  }
  EXPECT_NEAR(params.at("x")[0], 0.0, 0.05);
}

TEST(Optim, ScheduleAndClipping) {
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 0, 10), 1.0);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 5, 10), 0.5);
  EXPECT_DOUBLE_EQ(linear_schedule(1.0, 20, 10), 0.0);

  ParamSet g;
  g.add("a", {1})[0] = 3.0;
  g.add("b", {1})[0] = 4.0;
  EXPECT_DOUBLE_EQ(global_norm(g), 5.0);
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.at("a")[0], 0.6, 1e-12);
  EXPECT_NEAR(g.at("b")[0], 0.8, 1e-12);
  EXPECT_NEAR(clip_global_norm(g, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(g.at("a")[0], 0.6, 1e-12);  // under the limit: unchanged
}

TEST(ParamSetTest, CompatibilityChecks) {
  ParamSet a;
  a.add("w", {2, 3});
  ParamSet b;
  b.add("w", {3, 2});
  EXPECT_THROW(a.check_compatible(b), ShapeError);
  EXPECT_NO_THROW(a.check_compatible(a.zeros_like()));
  EXPECT_EQ(a.scalar_count(), 6u);
  EXPECT_THROW(a.at("missing"), Error);
}

TEST(Checkpoint, RoundTripsExactly) {
  TempDir dir;
  Rng rng(6);
  NetParams p;
  p.seed = 77;
  p.info["accuracy"] = 0.123456789012345678;
  p.tensors.add("w", {3, 4});
  p.tensors.add("b", {4});
  for (std::size_t t = 0; t < p.tensors.count(); ++t) {
    for (double& v : p.tensors.tensor(t).values()) v = rng.normal() * 1e-3 + 1.0 / 3.0;
  }
  const auto path = dir / "nested/model.ckpt";
  save_checkpoint(path, p, "test-kind", R"({"header":{"command":"x"}})");
  const NetParams loaded = load_checkpoint(path, "test-kind");
  EXPECT_EQ(loaded, p);
  EXPECT_THROW(load_checkpoint(path, "other-kind"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt", "test-kind"), Error);
}
