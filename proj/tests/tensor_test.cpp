#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stda/ops.hpp"
#include "support.hpp"

namespace stda {
namespace {

using test::check_gradients;
using test::probe;
using test::random_tensor;

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor<double>::from_data({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor<double>::zeros({2, 0}), ShapeError);
  auto t = Tensor<double>::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.dim(-1), 3);
  EXPECT_DOUBLE_EQ(t.at({1, 2}), 6);
}

TEST(Tensor, NonFiniteResultIsAnError) {
  auto big = Tensor<double>::from_data({2}, {1e200, 1.0});
  EXPECT_THROW(mul(big, big), NumericError);
  auto bad = Tensor<double>::from_data({1}, {std::nan("")});
  EXPECT_THROW(add(bad, Tensor<double>::zeros({1})), NumericError);
}

TEST(Autodiff, LinearMapGradient) {
  auto x = Tensor<double>::from_data({3}, {1, -2, 5}, true);
  sum(scale(x, 2.0)).backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{2, 2, 2}));
}

TEST(Autodiff, BackwardAccumulates) {
  auto x = Tensor<double>::from_data({3}, {1, -2, 5}, true);
  auto loss = sum(scale(x, 2.0));
  loss.backward();
  loss.backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{4, 4, 4}));
  x.zero_grad();
  EXPECT_EQ(x.grad(), (std::vector<double>{0, 0, 0}));
}

TEST(Autodiff, DisconnectedLeafHasZeroGrad) {
  auto x = Tensor<double>::from_data({2}, {1, 2}, true);
  auto y = Tensor<double>::from_data({2}, {3, 4}, true);
  sum(x).backward();
  EXPECT_EQ(y.grad(), (std::vector<double>{0, 0}));
}

TEST(Autodiff, NonScalarLossThrows) {
  auto x = Tensor<double>::from_data({2}, {1, 2}, true);
  EXPECT_THROW(scale(x, 2.0).backward(), ShapeError);
}

TEST(Autodiff, DiamondGraphSumsBothPaths) {
  auto x = Tensor<double>::from_data({1}, {3}, true);
  auto y = mul(x, x);
  sum(add(y, y)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Autodiff, NoGradGuardSkipsRecording) {
  auto x = Tensor<double>::from_data({1}, {3}, true);
  Tensor<double> y;
  {
    NoGradGuard g;
    y = scale(x, 2.0);
  }
  EXPECT_FALSE(y.requires_grad());
}

TEST(Conv2d, ScaledIdentityKernel) {
  auto x = Tensor<double>::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto w = Tensor<double>::from_data({1, 1, 1, 1}, {2});
  auto b = Tensor<double>::from_data({1}, {0});
  auto y = conv2d(x, w, b, 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{2, 4, 6, 8}));
}

TEST(Conv2d, OnesKernelMatchesDirectSum) {
  auto x = Tensor<double>::full({1, 1, 3, 3}, 1.0);
  auto w = Tensor<double>::full({1, 1, 3, 3}, 1.0);
  auto b = Tensor<double>::zeros({1});
  auto y = conv2d(x, w, b, 1, 1);
  // Count of in-bounds neighbours of each output pixel.
  for (int64_t r = 0; r < 3; ++r) {
    for (int64_t c = 0; c < 3; ++c) {
      const double rows = 3 - (r == 0) - (r == 2), cols = 3 - (c == 0) - (c == 2);
      EXPECT_DOUBLE_EQ(y.at({0, 0, r, c}), rows * cols);
    }
  }
  EXPECT_DOUBLE_EQ(y.at({0, 0, 1, 1}), 9);
  EXPECT_DOUBLE_EQ(y.at({0, 0, 0, 1}), 6);
  EXPECT_DOUBLE_EQ(y.at({0, 0, 0, 0}), 4);
}

TEST(Conv2d, StrideTwoShape) {
  std::mt19937_64 rng(1);
  auto y = conv2d(random_tensor({1, 8, 8, 8}, rng), random_tensor({8, 8, 3, 3}, rng), random_tensor({8}, rng), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 8, 4, 4}));
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(2);
  auto x = random_tensor({2, 3, 5, 6}, rng), w = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
  const int s = 2, p = 1;
  auto y = conv2d(x, w, b, s, p);
  ASSERT_EQ(y.shape(), (Shape{2, 4, 3, 3}));
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t o = 0; o < 4; ++o) {
      for (int64_t r = 0; r < 3; ++r) {
        for (int64_t c = 0; c < 3; ++c) {
          double acc = b.at({o});
          for (int64_t i = 0; i < 3; ++i) {
            for (int64_t ky = 0; ky < 3; ++ky) {
              for (int64_t kx = 0; kx < 3; ++kx) {
                const int64_t yy = r * s - p + ky, xx = c * s - p + kx;
                if (yy < 0 || yy >= 5 || xx < 0 || xx >= 6) continue;
                acc += w.at({o, i, ky, kx}) * x.at({n, i, yy, xx});
              }
            }
          }
          EXPECT_NEAR(y.at({n, o, r, c}), acc, 1e-12);
        }
      }
    }
  }
}

TEST(Conv2d, ShapeErrors) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(conv2d(random_tensor({1, 2, 4, 4}, rng), random_tensor({1, 3, 3, 3}, rng), random_tensor({1}, rng), 1, 1),
               ShapeError);
  EXPECT_THROW(conv2d(random_tensor({1, 1, 2, 2}, rng), random_tensor({1, 1, 5, 5}, rng), random_tensor({1}, rng), 1, 0),
               ShapeError);
}

TEST(TransposedConv2d, UnitKernelScatter) {
  auto x = Tensor<double>::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto w = Tensor<double>::from_data({1, 1, 1, 1}, {1});
  auto y = transposed_conv2d(x, w, Tensor<double>::zeros({1}), 2, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  const std::vector<double> expect{1, 0, 2, 0, 0, 0, 3, 0, 4};
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), expect);
}

TEST(TransposedConv2d, Kernel4Stride2Shape) {
  std::mt19937_64 rng(4);
  auto y = transposed_conv2d(random_tensor({1, 2, 4, 4}, rng), random_tensor({2, 3, 4, 4}, rng),
                             random_tensor({3}, rng), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 3, 8, 8}));
}

TEST(TransposedConv2d, IsAdjointOfConv) {
  std::mt19937_64 rng(5);
  for (auto [k, s, p] : {std::tuple{3, 1, 1}, {1, 1, 0}, {4, 2, 1}, {2, 2, 0}}) {
    auto x = random_tensor({1, 3, 8, 8}, rng, -1, 1, false);
    auto w = random_tensor({4, 3, k, k}, rng, -1, 1, false);
    auto cx = conv2d(x, w, Tensor<double>::zeros({4}), s, p);
    auto y = random_tensor(cx.shape(), rng, -1, 1, false);
    auto ty = transposed_conv2d(y, w,
                                Tensor<double>::zeros({3}), s, p);
    ASSERT_EQ(ty.shape(), x.shape()) << "k=" << k << " s=" << s;
    const double lhs = sum(mul(cx, y)).item(), rhs = sum(mul(x, ty)).item();
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(LeakyRelu, ValuesAndSlopes) {
  auto x = Tensor<double>::from_data({4}, {2.0, -2.0, -1.0, 1.0}, true);
  auto y = leaky_relu(x, 0.1);
  EXPECT_DOUBLE_EQ(y.at({0}), 2.0);
  EXPECT_DOUBLE_EQ(y.at({1}), -0.2);
  sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()[2], 0.1);
  EXPECT_DOUBLE_EQ(x.grad()[3], 1.0);
}

TEST(Softmax, UniformAndClosedForm) {
  auto u = softmax(Tensor<double>::zeros({1, 2, 3}), 2);
  for (double v : u.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 6.0);
  auto c = softmax(Tensor<double>::from_data({1, 2}, {std::log(1.0), std::log(3.0)}), 1);
  EXPECT_NEAR(c.at({0, 0}), 0.25, 1e-15);
  EXPECT_NEAR(c.at({0, 1}), 0.75, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndNormalization) {
  std::mt19937_64 rng(6);
  auto x = random_tensor({5, 4, 3, 2}, rng, -30, 30, false);
  std::vector<double> shifted(x.data().begin(), x.data().end());
  for (auto& v : shifted) v += 17.5;
  auto a = softmax(x, 2);
  auto b = softmax(Tensor<double>::from_data(x.shape(), shifted), 2);
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
  for (int64_t g = 0; g < 20; ++g) {
    double s = 0;
    for (int64_t j = 0; j < 6; ++j) s += a.data()[g * 6 + j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Softmax, FloatGroupsSumToOne) {
  std::mt19937_64 rng(7);
  auto x = random_tensor({64, 4, 3, 12}, rng, -8, 8, false).cast<float>();
  auto a = softmax(x, 2);
  auto d = a.data();
  for (int64_t g = 0; g < 256; ++g) {
    double s = 0;
    for (int64_t j = 0; j < 36; ++j) s += d[g * 36 + j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

// Finite-difference checks of every primitive at 64-bit.

TEST(GradCheck, Conv2d) {
  std::mt19937_64 rng(10);
  for (auto [s, p] : {std::pair{1, 1}, {2, 1}, {1, 0}}) {
    auto x = random_tensor({2, 2, 4, 4}, rng), w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    auto r = check_gradients([&] { return probe(conv2d(x, w, b, s, p)); }, {x, w, b});
    EXPECT_LE(r.max_error, 1e-4) << r.worst;
  }
}

TEST(GradCheck, TransposedConv2d) {
  std::mt19937_64 rng(11);
  auto x = random_tensor({1, 2, 3, 3}, rng), w = random_tensor({2, 3, 4, 4}, rng), b = random_tensor({3}, rng);
  auto r = check_gradients([&] { return probe(transposed_conv2d(x, w, b, 2, 1)); }, {x, w, b});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

TEST(GradCheck, LeakyRelu) {
  std::mt19937_64 rng(12);
  auto x = random_tensor({4, 4}, rng);
  auto r = check_gradients([&] { return probe(leaky_relu(x, 0.1)); }, {x});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

TEST(GradCheck, Softmax) {
  std::mt19937_64 rng(13);
  auto x = random_tensor({3, 2, 3, 2}, rng, -2, 2);
  auto r = check_gradients([&] { return probe(softmax(x, 2)); }, {x});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

TEST(GradCheck, LinearAndElementwise) {
  std::mt19937_64 rng(14);
  auto x = random_tensor({3, 4}, rng), w = random_tensor({5, 4}, rng), b = random_tensor({5}, rng);
  auto y = random_tensor({3, 5}, rng);
  auto r = check_gradients([&] { return mean(mul(sub(linear(x, w, b), y), add(y, scale(y, 0.5)))); }, {x, w, b, y});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

TEST(GradCheck, ShapeOps) {
  std::mt19937_64 rng(15);
  auto a = random_tensor({2, 3, 4}, rng), b = random_tensor({1, 3, 4}, rng);
  auto r = check_gradients(
      [&] {
        auto c = concat<double>({a, b});
        auto t = transpose_last2(reshape(slice(c, 1, 3), {2, 12, 1}));
        return add(probe(stack<double>({select(c, 0), select(c, 2)})), probe(t, 7));
      },
      {a, b});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace stda
