#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "echeat/numerics.hpp"
#include "support/finite_diff.hpp"

using namespace echeat;
using echeat::testing::dot;
using echeat::testing::numeric_gradient;
using echeat::testing::relative_error;
using echeat::testing::to_vec;

namespace {

Tensor random_tensor(Shape shape, Prng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform_real(-scale, scale);
  return t;
}

}  // namespace

// ---------------------------------------------------------------- tensor

TEST(Tensor, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(Tensor({2}, {1.0, NAN}), ValidationError);
  EXPECT_THROW(Tensor({2}, {1.0, INFINITY}), ValidationError);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(Tensor(Shape{0, 3}), DimensionError);
}

// ---------------------------------------------------------------- linalg

TEST(Linalg, MatmulIdentity) {
  const Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor v = Tensor::matrix({{3}, {7}});
  EXPECT_EQ(matmul(eye, v), v);
}

TEST(Linalg, MatmulHandArithmetic) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{1}, {1}});
  EXPECT_EQ(matmul(a, b), Tensor::matrix({{3}, {7}}));
}

TEST(Linalg, MismatchNamesBothShapes) {
  const Tensor a = Tensor::matrix({{1, 2, 3}});
  const Tensor b = Tensor::matrix({{1, 2}});
  try {
    matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[1x3]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[1x2]"), std::string::npos);
  }
  EXPECT_THROW(add(a, b), DimensionError);
}

TEST(Linalg, ReluClamps) { EXPECT_EQ(relu(Tensor::vector({-1, 0, 2})), Tensor::vector({0, 0, 2})); }

TEST(Linalg, AddAndScale) {
  EXPECT_EQ(add(Tensor::vector({1, 2}), Tensor::vector({3, 4})), Tensor::vector({4, 6}));
  EXPECT_EQ(scale(Tensor::vector({1, -2}), 0.5), Tensor::vector({0.5, -1}));
}

TEST(Linalg, ConcatChannelsAddsCountsAndSlicesBack) {
  Prng rng(3);
  const Tensor a = random_tensor({64, 6}, rng);
  const Tensor b = random_tensor({64, 6}, rng);
  const Tensor c = concat_channels(std::vector<Tensor>{a, b});
  EXPECT_EQ(c.shape(), (Shape{128, 6}));
  EXPECT_EQ(slice_channels(c, 0, 64), a);
  EXPECT_EQ(slice_channels(c, 64, 64), b);
}

TEST(Linalg, ConcatChannelsBatchedProperty) {
  Prng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t batch = 1 + rng.uniform(4), len = 1 + rng.uniform(9);
    std::vector<Tensor> parts;
    std::size_t total = 0;
    for (std::size_t p = 0, n = 1 + rng.uniform(4); p < n; ++p) {
      const std::size_t ch = 1 + rng.uniform(5);
      total += ch;
      parts.push_back(random_tensor({batch, ch, len}, rng));
    }
    const Tensor c = concat_channels(parts);
    ASSERT_EQ(c.dim(1), total);
    std::size_t begin = 0;
    for (const Tensor& p : parts) {
      EXPECT_EQ(slice_channels(c, begin, p.dim(1)), p);
      begin += p.dim(1);
    }
  }
  EXPECT_THROW(concat_channels(std::vector<Tensor>{Tensor({2, 3}), Tensor({2, 4})}), DimensionError);
}

// ---------------------------------------------------------------- conv / pool

TEST(Conv1d, StemLengthTrace) {
  const Tensor x({1, 23});
  const Tensor w({64, 1, 3});
  EXPECT_EQ(conv1d(x, w, 2).shape(), (Shape{64, 12}));
}

TEST(Conv1d, ZeroInputGivesZeroOutput) {
  Prng rng(5);
  const Tensor w = random_tensor({4, 3, 3}, rng);
  const Tensor y = conv1d(Tensor({3, 10}), w, 2);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1d, ConstantInputUnitKernel) {
  const Tensor y = conv1d(Tensor::filled({1, 7}, 1.0), Tensor::filled({1, 1, 1}, 1.0), 1);
  EXPECT_EQ(y, Tensor::filled({1, 7}, 1.0));
}

TEST(Conv1d, OutputLengthFormulaHolds) {
  for (std::size_t len = 1; len <= 64; ++len)
    for (std::size_t stride = 1; stride <= 3; ++stride)
      for (std::size_t k = 1; k <= 3; ++k) {
        EXPECT_EQ(conv1d(Tensor({2, len}), Tensor({1, 2, k}), stride).dim(1), (len + stride - 1) / stride);
        EXPECT_EQ(avgpool1d(Tensor({2, len}), stride).dim(1), (len + stride - 1) / stride);
      }
}

TEST(Conv1d, BackwardMatchesFiniteDifferences) {
  Prng rng(17);
  for (std::size_t stride : {1u, 2u, 3u}) {
    for (std::size_t k : {1u, 2u, 3u}) {
      Tensor x = random_tensor({2, 3, 7}, rng);
      Tensor w = random_tensor({4, 3, k}, rng);
      const Tensor probe = random_tensor(conv1d(x, w, stride).shape(), rng);
      const auto grads = conv1d_backward(x, w, stride, probe);
      auto f = [&] { return dot(conv1d(x, w, stride), probe); };
      EXPECT_LT(relative_error(to_vec(grads.grad_x), numeric_gradient(f, x)), 1e-8);
      EXPECT_LT(relative_error(to_vec(grads.grad_w), numeric_gradient(f, w)), 1e-8);
    }
  }
}

TEST(Conv1d, BiasGradientIsUpstreamSum) {
  Prng rng(23);
  const Tensor x = random_tensor({2, 3, 5}, rng);
  const Tensor w = random_tensor({2, 3, 2}, rng);
  Tensor b = random_tensor({2}, rng);
  const Tensor probe = random_tensor({2, 2, 5}, rng);
  const auto grads = conv1d_backward(x, w, 1, probe);
  auto f = [&] { return dot(conv1d(x, w, &b, 1), probe); };
  EXPECT_LT(relative_error(to_vec(grads.grad_b), numeric_gradient(f, b)), 1e-8);
}

TEST(AvgPool, HalvesLengthAndAverages) {
  EXPECT_EQ(avgpool1d(Tensor({3, 12}), 2).shape(), (Shape{3, 6}));
  EXPECT_EQ(avgpool1d(Tensor::filled({2, 5}, 4.5), 2), Tensor::filled({2, 3}, 4.5));
  EXPECT_EQ(avgpool1d(Tensor::matrix({{1, 3}}), 2), Tensor::matrix({{2}}));
  // trailing partial window
  EXPECT_EQ(avgpool1d(Tensor::matrix({{1, 3, 7}}), 2), Tensor::matrix({{2, 7}}));
}

TEST(AvgPool, BackwardMatchesFiniteDifferences) {
  Prng rng(29);
  Tensor x = random_tensor({2, 3, 7}, rng);
  const Tensor probe = random_tensor({2, 3, 4}, rng);
  const Tensor g = avgpool1d_backward(x.shape(), 2, probe);
  auto f = [&] { return dot(avgpool1d(x, 2), probe); };
  EXPECT_LT(relative_error(to_vec(g), numeric_gradient(f, x)), 1e-9);
}

// ---------------------------------------------------------------- lstm

TEST(Lstm, ZeroWeightsGiveZeroState) {
  const Tensor wx({4, 3}), wh({4, 1}), b({4});
  const auto out = lstm_cell(Tensor::matrix({{1, 2, 3}}), Tensor({1, 1}), Tensor({1, 1}), {wx, wh, b});
  EXPECT_EQ(out.h[0], 0.0);
  EXPECT_EQ(out.c[0], 0.0);
}

TEST(Lstm, HandComputedStep) {
  // scalar weights 1, x = 1, zero state: every gate pre-activation is 1.
  const Tensor wx = Tensor::filled({4, 1}, 1.0), wh = Tensor::filled({4, 1}, 1.0), b({4});
  const auto out = lstm_cell(Tensor::matrix({{1}}), Tensor({1, 1}), Tensor({1, 1}), {wx, wh, b});
  EXPECT_NEAR(out.c[0], 0.5567699411459397, 1e-15);
  EXPECT_NEAR(out.h[0], 0.36960635293570576, 1e-15);
}

TEST(Lstm, HiddenSizeMismatchIsDimensionError) {
  const Tensor wx({8, 3}), wh({8, 2}), b({8});
  EXPECT_THROW(lstm_cell(Tensor({1, 3}), Tensor({1, 3}), Tensor({1, 3}), {wx, wh, b}), DimensionError);
  EXPECT_THROW(lstm_cell(Tensor({1, 4}), Tensor({1, 2}), Tensor({1, 2}), {wx, wh, b}), DimensionError);
}

TEST(Lstm, CellBackwardMatchesFiniteDifferences) {
  Prng rng(31);
  Tensor x = random_tensor({2, 3}, rng), h = random_tensor({2, 4}, rng), c = random_tensor({2, 4}, rng);
  Tensor wx = random_tensor({16, 3}, rng), wh = random_tensor({16, 4}, rng), b = random_tensor({16}, rng);
  const Tensor ph = random_tensor({2, 4}, rng), pc = random_tensor({2, 4}, rng);
  auto f = [&] {
    const auto o = lstm_cell(x, h, c, {wx, wh, b});
    return dot(o.h, ph) + dot(o.c, pc);
  };
  const auto fwd = lstm_cell(x, h, c, {wx, wh, b});
  const auto g = lstm_cell_backward(fwd, {wx, wh, b}, ph, pc);
  EXPECT_LT(relative_error(to_vec(g.grad_x), numeric_gradient(f, x)), 1e-4);
  EXPECT_LT(relative_error(to_vec(g.grad_h_prev), numeric_gradient(f, h)), 1e-4);
  EXPECT_LT(relative_error(to_vec(g.grad_c_prev), numeric_gradient(f, c)), 1e-4);
  EXPECT_LT(relative_error(to_vec(g.grad_w_x), numeric_gradient(f, wx)), 1e-4);
  EXPECT_LT(relative_error(to_vec(g.grad_w_h), numeric_gradient(f, wh)), 1e-4);
  EXPECT_LT(relative_error(to_vec(g.grad_bias), numeric_gradient(f, b)), 1e-4);
}

TEST(Lstm, SequenceBackwardMatchesFiniteDifferencesOverSeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Prng rng(seed);
    const std::size_t batch = 1 + rng.uniform(3), in = 1 + rng.uniform(4), hidden = 1 + rng.uniform(4),
                      len = 1 + rng.uniform(6);
    Tensor x = random_tensor({batch, in, len}, rng);
    Tensor wx = random_tensor({4 * hidden, in}, rng), wh = random_tensor({4 * hidden, hidden}, rng),
           b = random_tensor({4 * hidden}, rng);
    const Tensor probe = random_tensor({batch, hidden, len}, rng);
    auto f = [&] { return dot(lstm_sequence_forward(x, {wx, wh, b}, nullptr), probe); };
    LstmSequenceCache cache;
    lstm_sequence_forward(x, {wx, wh, b}, &cache);
    const auto g = lstm_sequence_backward(cache, {wx, wh, b}, probe);
    EXPECT_LT(relative_error(to_vec(g.grad_x), numeric_gradient(f, x)), 1e-4) << "seed " << seed;
    EXPECT_LT(relative_error(to_vec(g.grad_w_x), numeric_gradient(f, wx)), 1e-4) << "seed " << seed;
    EXPECT_LT(relative_error(to_vec(g.grad_w_h), numeric_gradient(f, wh)), 1e-4) << "seed " << seed;
    EXPECT_LT(relative_error(to_vec(g.grad_bias), numeric_gradient(f, b)), 1e-4) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- softmax / loss

TEST(Softmax, EqualLogits) {
  const Tensor p = softmax(Tensor::matrix({{0.3, 0.3}}));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Softmax, LnThree) {
  const Tensor p = softmax(Tensor::matrix({{0.0, std::log(3.0)}}));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  // Dyadic logits stay exact under the shift, so the result is bit-identical.
  const Tensor a = Tensor::matrix({{0.25, -1.5, 3.0}});
  const Tensor b = Tensor::matrix({{100.25, 98.5, 103.0}});
  EXPECT_EQ(softmax(a), softmax(b));
  const Tensor c = softmax(Tensor::matrix({{0.0, std::log(3.0)}}));
  const Tensor d = softmax(Tensor::matrix({{100.0, 100.0 + std::log(3.0)}}));
  EXPECT_NEAR(c[1], d[1], 1e-12);
}

TEST(Softmax, RowsSumToOne) {
  Prng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor y = random_tensor({3, 1 + rng.uniform(6)}, rng, 50.0);
    const Tensor p = softmax(y);
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < p.dim(1); ++j) {
        EXPECT_GE(p.at(r, j), 0.0);
        s += p.at(r, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(CrossEntropy, ConfidentCorrectIsZero) {
  const auto ce = cross_entropy(Tensor::matrix({{0.0, 800.0}}), Tensor::matrix({{0, 1}}));
  EXPECT_EQ(ce.loss, 0.0);
}

TEST(CrossEntropy, UniformTwoClass) {
  const auto ce = cross_entropy(Tensor::matrix({{1.0, 1.0}}), Tensor::matrix({{1, 0}}));
  EXPECT_NEAR(ce.loss, std::log(2.0), 1e-15);
}

TEST(CrossEntropy, SumsOverRows) {
  const Tensor y1 = Tensor::matrix({{0.2, -0.7}});
  const Tensor y2 = Tensor::matrix({{0.2, -0.7}, {0.2, -0.7}});
  const double single = cross_entropy(y1, Tensor::matrix({{0, 1}})).loss;
  EXPECT_EQ(cross_entropy(y2, Tensor::matrix({{0, 1}, {0, 1}})).loss, 2.0 * single);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusTargets) {
  Prng rng(43);
  Tensor y = random_tensor({3, 4}, rng, 3.0);
  const Tensor l = Tensor::matrix({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}});
  const auto ce = cross_entropy(y, l);
  auto f = [&] { return cross_entropy(y, l).loss; };
  EXPECT_LT(relative_error(to_vec(ce.grad), numeric_gradient(f, y)), 1e-8);
  EXPECT_THROW(cross_entropy(y, Tensor::matrix({{0, 1, 1, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}})), ValidationError);
}

// ---------------------------------------------------------------- adam

TEST(Adam, ZeroGradientNoDecayLeavesParams) {
  Parameter p("w", Tensor::vector({1.0, -2.0}));
  Parameter* ps[] = {&p};
  adam_step(ps, 1, {.lr = 1e-3, .weight_decay = 0.0});
  EXPECT_EQ(p.value, Tensor::vector({1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("w", Tensor::vector({0.5}));
  p.grad[0] = 1.0;
  Parameter* ps[] = {&p};
  const AdamConfig cfg{.lr = 1e-5, .weight_decay = 0.0};
  adam_step(ps, 1, cfg);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.value[0] - 0.5, -1e-5, 1e-12);
}

TEST(Adam, DecoupledDecayOnly) {
  Parameter p("w", Tensor::vector({1.0}));
  Parameter* ps[] = {&p};
  adam_step(ps, 1, AdamConfig{});
  EXPECT_DOUBLE_EQ(p.value[0], 1.0 - 1e-5 * 1e-4);
  EXPECT_EQ(p.m[0], 0.0);
  EXPECT_EQ(p.v[0], 0.0);
}

TEST(Adam, Deterministic) {
  Parameter a("w", Tensor::vector({0.1, 0.2, 0.3})), b = a;
  a.grad = b.grad = Tensor::vector({0.5, -0.25, 2.0});
  Parameter* pa[] = {&a};
  Parameter* pb[] = {&b};
  for (std::uint64_t t = 1; t <= 5; ++t) {
    adam_step(pa, t, {});
    adam_step(pb, t, {});
  }
  EXPECT_EQ(a.value, b.value);
}

// ---------------------------------------------------------------- dropout

TEST(Dropout, RateZeroAndInferenceAreIdentity) {
  Prng rng(1);
  const Tensor x = Tensor::vector({1, 2, 3});
  EXPECT_EQ(dropout(x, 0.0, true, rng), x);
  EXPECT_EQ(dropout(x, 0.5, false, rng), x);
  EXPECT_THROW(dropout(x, 1.0, true, rng), ValidationError);
}

TEST(Dropout, ZeroedFractionWithinBinomialInterval) {
  Prng rng(2024);
  const Tensor x = Tensor::filled({10000}, 1.0);
  const Tensor y = dropout(x, 0.2, true, rng);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      EXPECT_DOUBLE_EQ(v, 1.25);
    }
  }
  const double frac = static_cast<double>(zeros) / 10000.0;
  EXPECT_GE(frac, 0.18);
  EXPECT_LE(frac, 0.22);
}

// ---------------------------------------------------------------- grad_check

TEST(GradCheck, Square) {
  Parameter x("x", Tensor::vector({3.0}));
  x.grad[0] = 6.0;
  Parameter* ps[] = {&x};
  const auto rep = grad_check([&] { return x.value[0] * x.value[0]; }, ps);
  EXPECT_LT(rep.params[0].relative_error, 1e-8);
  EXPECT_TRUE(rep.passed);
}

TEST(GradCheck, LinearIsExact) {
  Parameter x("x", Tensor::vector({0.5}));
  x.grad[0] = 5.0;
  Parameter* ps[] = {&x};
  const auto rep = grad_check([&] { return 5.0 * x.value[0]; }, ps);
  EXPECT_LT(rep.params[0].relative_error, 1e-10);
}

TEST(GradCheck, DetectsWrongGradient) {
  Parameter x("x", Tensor::vector({3.0}));
  x.grad[0] = 5.0;
  Parameter* ps[] = {&x};
  EXPECT_FALSE(grad_check([&] { return x.value[0] * x.value[0]; }, ps).passed);
}

// ---------------------------------------------------------------- pca

TEST(Pca, CollinearPoints) {
  const Tensor x = Tensor::matrix({{0, 0}, {1, 2}, {2, 4}, {3, 6}, {-1, -2}});
  const auto m = pca_fit(x, 2);
  const double total = m.explained_variance[0] + m.explained_variance[1];
  EXPECT_GE(m.explained_variance[0] / total, 0.9999);
}

TEST(Pca, IsotropicCovariance) {
  const Tensor x = Tensor::matrix({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  const auto m = pca_fit(x, 2);
  EXPECT_NEAR(m.explained_variance[0], m.explained_variance[1], 1e-8);
}

TEST(Pca, AxisAlignedCovarianceMatchesHandEigen) {
  // var_x = 2 a^2 / 3 = 2, var_y = 2 b^2 / 3 = 1.
  const double a = std::sqrt(3.0), b = std::sqrt(1.5);
  const Tensor x = Tensor::matrix({{a, 0}, {-a, 0}, {0, b}, {0, -b}});
  const auto m = pca_fit(x, 2);
  EXPECT_NEAR(m.explained_variance[0], 2.0, 1e-12);
  EXPECT_NEAR(m.explained_variance[1], 1.0, 1e-12);
  EXPECT_NEAR(std::abs(m.components.at(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(m.components.at(1, 1)), 1.0, 1e-12);
}

TEST(Pca, OrthonormalAndLosslessOnRandomData) {
  Prng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.uniform(7);
    const Tensor x = random_tensor({d + 5, d}, rng, 10.0);
    const auto m = pca_fit(x, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += m.components.at(i, c) * m.components.at(j, c);
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-8);
      }
      if (i > 0) {
        EXPECT_LE(m.explained_variance[i], m.explained_variance[i - 1]);
      }
    }
    const Tensor back = pca_reconstruct(m, pca_project(m, x));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-8);
  }
}

TEST(Pca, RejectsBadArguments) {
  EXPECT_THROW(pca_fit(Tensor::matrix({{1, 2}}), 1), ValidationError);
  EXPECT_THROW(pca_fit(Tensor::matrix({{1, 2}, {3, 4}}), 3), ValidationError);
}

// ---------------------------------------------------------------- prng

TEST(Prng, SplitMixReferenceValue) {
  Prng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
}

TEST(Prng, DistinctSeedsDiffer) { EXPECT_NE(Prng(1).next_u64(), Prng(2).next_u64()); }

TEST(Prng, ShufflePreservesMultiset) {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 1);
  Prng rng(99);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i + 1);
}

TEST(Prng, UniformStaysInRange) {
  Prng rng(5);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.uniform(7), 7u);
  EXPECT_THROW(rng.uniform(0), std::invalid_argument);
}
