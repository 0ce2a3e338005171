#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bitwave/checkpoint.hpp"
#include "bitwave/error.hpp"
#include "bitwave/gradcheck.hpp"
#include "bitwave/linalg.hpp"
#include "bitwave/nn.hpp"

using namespace bitwave;
using namespace bitwave::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor t(std::move(s));
  for (double& v : t.values()) v = g(rng);
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(ShapeLaw, RandomGridMatchesFormula) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t k = 1 + rng() % 40, s = 1 + rng() % 20, in = k + rng() % 5000;
    std::size_t expected = 0;
    for (std::size_t start = 0; start + k <= in; start += s) ++expected;  // count window positions
    ASSERT_EQ(conv_output_extent(in, k, s), expected);
  }
  EXPECT_THROW(conv_output_extent(5, 6, 1), Error);
}

TEST(ShapeLaw, DefaultLstmComposition) {
  std::size_t l = 16000;
  std::vector<std::size_t> seen;
  for (int i = 0; i < 3; ++i) seen.push_back(l = conv_output_extent(l, 30, 10));
  EXPECT_EQ(seen, (std::vector<std::size_t>{1598, 157, 13}));
}

TEST(Linalg, GemmVariantsMatchNaive) {
  const std::size_t m = 7, n = 5, k = 9;
  const Tensor a = random_tensor({m, k}, 1), b = random_tensor({k, n}, 2);
  const Tensor at = random_tensor({k, m}, 3), bt = random_tensor({n, k}, 4);
  std::vector<double> c(m * n, 1.0);
  linalg::gemm_nn(m, n, k, a.data(), b.data(), c.data(), true);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 1.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], s, 1e-12);
    }
  linalg::gemm_nt(m, n, k, a.data(), bt.data(), c.data(), false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * bt[j * k + p];
      EXPECT_NEAR(c[i * n + j], s, 1e-12);
    }
  linalg::gemm_tn(m, n, k, at.data(), b.data(), c.data(), false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += at[p * m + i] * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], s, 1e-12);
    }
}

TEST(Linalg, NanPropagatesThroughZeros) {
  std::vector<double> a{0.0}, b{std::nan("")}, c{0.0};
  linalg::gemm_nn(1, 1, 1, a.data(), b.data(), c.data(), false);
  EXPECT_TRUE(std::isnan(c[0]));
}

TEST(Conv, OneDimensionalMatchesDirectCorrelation) {
  Rng rng(1);
  Conv conv(LayerKind::conv1d, 3, 4, {1, 5}, {1, 2}, rng);
  const Tensor x = random_tensor({3, 23}, 9);
  const Tensor y = conv.forward(x, Mode::eval);
  ASSERT_EQ(y.shape(), (Shape{4, 10}));
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t t = 0; t < 10; ++t) {
      double s = conv.bias().value[o];
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t j = 0; j < 5; ++j) s += conv.weight().value[o * 15 + c * 5 + j] * x.at(c, t * 2 + j);
      EXPECT_NEAR(y.at(o, t), s, 1e-12);
    }
}

TEST(Conv, TwoDimensionalMatchesDirectCorrelation) {
  Rng rng(2);
  Conv conv(LayerKind::conv2d, 2, 3, {4, 3}, {3, 1}, rng);
  const Tensor x = random_tensor({2, 13, 6}, 10);
  const Tensor y = conv.forward(x, Mode::eval);
  ASSERT_EQ(y.shape(), (Shape{3, 4, 4}));
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        double s = conv.bias().value[o];
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t q = 0; q < 3; ++q)
              s += conv.weight().value[o * 24 + c * 12 + p * 3 + q] * x[(c * 13 + i * 3 + p) * 6 + j + q];
        EXPECT_NEAR(y[(o * 4 + i) * 4 + j], s, 1e-12);
      }
}

TEST(Conv, HeUniformInitBounds) {
  Rng rng(3);
  Conv conv(LayerKind::conv1d, 16, 32, {1, 30}, {1, 10}, rng);
  const double bound = std::sqrt(6.0 / (16 * 30));
  for (double w : conv.weight().value.values()) EXPECT_LE(std::abs(w), bound);
  for (double b : conv.bias().value.values()) EXPECT_EQ(b, 0.0);
}

TEST(Lstm, MatchesScalarReference) {
  Rng rng(4);
  const std::size_t I = 3, H = 2, T = 5;
  Lstm lstm(I, H, rng);
  for (std::size_t j = 0; j < H; ++j) EXPECT_EQ(lstm.bias().value[H + j], 1.0);
  const Tensor x = random_tensor({T, I}, 11);
  const Tensor y = lstm.forward(x, Mode::eval);
  std::vector<double> h(H, 0.0), c(H, 0.0);
  const auto& wi = lstm.w_ih().value;
  const auto& wh = lstm.w_hh().value;
  const auto& b = lstm.bias().value;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> pre(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      pre[r] = b[r];
      for (std::size_t k = 0; k < I; ++k) pre[r] += wi[r * I + k] * x.at(t, k);
      for (std::size_t k = 0; k < H; ++k) pre[r] += wh[r * H + k] * h[k];
    }
    std::vector<double> nh(H);
    for (std::size_t j = 0; j < H; ++j) {
      c[j] = sig(pre[H + j]) * c[j] + sig(pre[j]) * std::tanh(pre[2 * H + j]);
      nh[j] = sig(pre[3 * H + j]) * std::tanh(c[j]);
    }
    h = nh;
    for (std::size_t j = 0; j < H; ++j) EXPECT_NEAR(y.at(t, j), h[j], 1e-14);
  }
  LstmState s{std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)};
  for (std::size_t t = 0; t < T; ++t) s = lstm.step(std::span<const double>(x.data() + t * I, I), s);
  for (std::size_t j = 0; j < H; ++j) EXPECT_NEAR(s.h[j], h[j], 1e-14);
}

TEST(Gru, MatchesScalarReferenceBothDirections) {
  const std::size_t I = 3, H = 2, T = 5;
  const Tensor x = random_tensor({T, I}, 12);
  for (bool reverse : {false, true}) {
    Rng rng(5);
    Gru gru(I, H, reverse, rng);
    const Tensor y = gru.forward(x, Mode::eval);
    const auto& wi = gru.w_ih().value;
    const auto& wh = gru.w_hh().value;
    const auto& b = gru.bias().value;
    std::vector<double> h(H, 0.0);
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      std::vector<double> z(H), r(H), n(H);
      for (std::size_t j = 0; j < H; ++j) {
        double az = b[j], ar = b[H + j];
        for (std::size_t k = 0; k < I; ++k) {
          az += wi[j * I + k] * x.at(t, k);
          ar += wi[(H + j) * I + k] * x.at(t, k);
        }
        for (std::size_t k = 0; k < H; ++k) {
          az += wh[j * H + k] * h[k];
          ar += wh[(H + j) * H + k] * h[k];
        }
        z[j] = sig(az);
        r[j] = sig(ar);
      }
      for (std::size_t j = 0; j < H; ++j) {
        double an = b[2 * H + j];
        for (std::size_t k = 0; k < I; ++k) an += wi[(2 * H + j) * I + k] * x.at(t, k);
        for (std::size_t k = 0; k < H; ++k) an += wh[(2 * H + j) * H + k] * r[k] * h[k];
        n[j] = std::tanh(an);
      }
      for (std::size_t j = 0; j < H; ++j) h[j] = (1.0 - z[j]) * h[j] + z[j] * n[j];
      for (std::size_t j = 0; j < H; ++j) EXPECT_NEAR(y.at(t, j), h[j], 1e-14);
    }
  }
}

TEST(BiGru, ConcatenatesDirectionsAndReadsFinalStates) {
  Rng rng(6);
  BiGru bi(3, 2, rng);
  const Tensor x = random_tensor({4, 3}, 13);
  const Tensor y = bi.forward(x, Mode::eval);
  ASSERT_EQ(y.shape(), (Shape{4, 4}));
  const Tensor f = bi.forward_gru().forward(x, Mode::eval);
  const Tensor b = bi.backward_gru().forward(x, Mode::eval);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(y.at(t, j), f.at(t, j));
      EXPECT_EQ(y.at(t, 2 + j), b.at(t, j));
    }
  BidirectionalFinal fin;
  const Tensor r = fin.forward(y, Mode::eval);
  EXPECT_EQ(r[0], y.at(3, 0));
  EXPECT_EQ(r[1], y.at(3, 1));
  EXPECT_EQ(r[2], y.at(0, 2));
  EXPECT_EQ(r[3], y.at(0, 3));
}

TEST(ToSequence, Layouts) {
  ToSequence seq;
  const Tensor a = random_tensor({3, 4}, 1);
  const Tensor sa = seq.forward(a, Mode::eval);
  EXPECT_EQ(sa.shape(), (Shape{4, 3}));
  EXPECT_EQ(sa.at(2, 1), a.at(1, 2));
  const Tensor b = random_tensor({2, 5, 3}, 2);
  const Tensor sb = seq.forward(b, Mode::eval);
  EXPECT_EQ(sb.shape(), (Shape{5, 6}));
  EXPECT_EQ(sb.at(4, 1 * 3 + 2), b[(1 * 5 + 4) * 3 + 2]);
}

TEST(Dropout, EvalIdentityTrainScaling) {
  Dropout d(0.25, 7);
  const Tensor x(Shape{10000}, 1.0);
  EXPECT_EQ(d.forward(x, Mode::eval), x);
  const Tensor y = d.forward(x, Mode::train);
  std::size_t kept = 0;
  for (double v : y.values()) {
    ASSERT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15);
    kept += v != 0.0;
  }
  EXPECT_NEAR(kept / 10000.0, 0.75, 0.02);
  const Tensor g = d.backward(Tensor(Shape{10000}, 1.0));
  for (std::size_t i = 0; i < 10000; ++i) EXPECT_EQ(g[i], y[i]);
}

TEST(Loss, SoftmaxCrossEntropyValues) {
  const std::vector<double> logits{1.0, 2.0, 3.0};
  const auto r = softmax_xent(logits, 2);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(r.loss, std::log(z) - 3.0, 1e-14);
  EXPECT_NEAR(r.grad[0], std::exp(1.0) / z, 1e-14);
  EXPECT_NEAR(r.grad[2], std::exp(3.0) / z - 1.0, 1e-14);
  const std::vector<double> huge{1000.0, 0.0};
  EXPECT_NEAR(softmax_xent(huge, 0).loss, 0.0, 1e-12);
  EXPECT_NEAR(softmax_xent(huge, 1).loss, 1000.0, 1e-9);
  EXPECT_THROW(softmax_xent(logits, 3), Error);
}

TEST(Optim, MomentumSgdTwoSteps) {
  Param p("w", {2});
  p.value[0] = 1.0;
  p.value[1] = -2.0;
  std::vector<Param*> ps{&p};
  MomentumSgd opt(0.9);
  p.grad[0] = 0.5;
  p.grad[1] = -1.0;
  opt.step(ps, 0.1);
  EXPECT_NEAR(p.value[0], 1.0 - 0.05, 1e-15);
  EXPECT_NEAR(p.value[1], -2.0 + 0.1, 1e-15);
  opt.step(ps, 0.1);
  EXPECT_NEAR(p.value[0], 0.95 + (0.9 * -0.05 - 0.05), 1e-15);
  EXPECT_NEAR(p.value[1], -1.9 + (0.9 * 0.1 + 0.1), 1e-15);
}

TEST(Optim, LearningRateSchedules) {
  EXPECT_EQ(lr_schedule(0, 0.01, LrPolicy::halve_every_30), 0.01);
  EXPECT_EQ(lr_schedule(29, 0.01, LrPolicy::halve_every_30), 0.01);
  EXPECT_EQ(lr_schedule(30, 0.01, LrPolicy::halve_every_30), 0.005);
  EXPECT_EQ(lr_schedule(60, 0.01, LrPolicy::halve_every_30), 0.0025);
  EXPECT_EQ(lr_schedule(499, 0.002, LrPolicy::constant), 0.002);
  EXPECT_EQ(parse_lr_policy("halve_every_30"), LrPolicy::halve_every_30);
  EXPECT_THROW(parse_lr_policy("cosine"), Error);
}

TEST(GradCheck, BatteryPasses) {
  const auto reports = run_gradient_battery(1);
  ASSERT_GE(reports.size(), 10u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.passed) << r.name << " " << r.max_rel_error;
    EXPECT_LE(r.max_rel_error, r.tolerance) << r.name;
  }
}

TEST(GradCheck, CorruptedLayerIsCaught) {
  for (const char* name : {"conv1d", "lstm", "bigru"}) {
    const auto reports = run_gradient_battery(1, name);
    for (const auto& r : reports) EXPECT_EQ(r.passed, r.name != name) << r.name;
  }
}

TEST(Sequential, ReportsFirstNonFiniteLayer) {
  Rng rng(1);
  Sequential g;
  g.emplace<Dense>(3, 3, rng);
  g.emplace<Relu>();
  auto& d = g.emplace<Dense>(3, 2, rng);
  d.weight().value[0] = std::nan("");
  g.set_finite_checks(true);
  g.forward(Tensor(Shape{3}, 1.0), Mode::eval);
  EXPECT_EQ(g.first_non_finite_layer(), 2);
}

TEST(Checkpoint, RoundTripAndRestore) {
  Rng rng(1);
  Sequential g;
  g.emplace<Dense>(4, 3, rng);
  g.emplace<Relu>();
  g.emplace<Dense>(3, 2, rng);
  MomentumSgd opt;
  for (Param* p : g.params()) p->grad.fill(0.1);
  opt.step(g.params(), 0.01);
  const Checkpoint c = snapshot(g, "meta text", &opt);
  const Checkpoint back = decode_checkpoint(encode(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(encode(back), encode(c));

  Rng other(99);
  Sequential h;
  h.emplace<Dense>(4, 3, other);
  h.emplace<Relu>();
  h.emplace<Dense>(3, 2, other);
  restore(back, h);
  const Tensor x = random_tensor({4}, 5);
  EXPECT_EQ(h.forward(x, Mode::eval), g.forward(x, Mode::eval));

  Sequential wrong;
  wrong.emplace<Dense>(4, 2, other);
  EXPECT_THROW(restore(back, wrong), Error);
  auto bytes = encode(c);
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_checkpoint(bytes), Error);
}
