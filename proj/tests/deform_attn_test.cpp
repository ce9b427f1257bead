#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "stda/deform_attn.hpp"
#include "stda/ops.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace stda {
namespace {

using test::check_gradients;
using test::probe;
using test::random_tensor;
using test::Instance;
using test::oracle;
using test::oracle_sample;
using test::random_instance;

Tensor<double> identity(int64_t c) {
  std::vector<double> d(static_cast<size_t>(c * c), 0.0);
  for (int64_t i = 0; i < c; ++i) d[i * c + i] = 1.0;
  return Tensor<double>::from_data({c, c}, std::move(d));
}

TEST(DeformableAttention, SinglePointIdentity) {
  std::mt19937_64 rng(1);
  auto values = random_tensor({1, 3, 3, 4}, rng, -1, 1, false);
  auto out = deformable_attention(Tensor<double>::full({9, 1, 1, 1}, 1.0), Tensor<double>::zeros({9, 1, 1, 1, 2}),
                                  values, identity(4), Tensor<double>::zeros({4}));
  ASSERT_EQ(out.shape(), (Shape{9, 4}));
  for (int64_t i = 0; i < 36; ++i) EXPECT_DOUBLE_EQ(out.data()[i], values.data()[i]);
}

TEST(DeformableAttention, UniformWeightsAverageFrames) {
  std::mt19937_64 rng(2);
  const int64_t k = 2;
  auto values = random_tensor({3, 2, 3, 4}, rng, -1, 1, false);
  auto out = deformable_attention(Tensor<double>::full({6, 2, 3, k}, 1.0 / (3 * k)),
                                  Tensor<double>::zeros({6, 2, 3, k, 2}), values, identity(4),
                                  Tensor<double>::zeros({4}));
  for (int64_t p = 0; p < 6; ++p) {
    for (int64_t c = 0; c < 4; ++c) {
      const double mean = (values.data()[p * 4 + c] + values.data()[24 + p * 4 + c] + values.data()[48 + p * 4 + c]) / 3;
      EXPECT_NEAR(out.at({p, c}), mean, 1e-12);
    }
  }
}

TEST(DeformableAttention, MatchesNestedLoopOracleExample) {
  std::mt19937_64 rng(3);
  const Instance in = random_instance(rng, 3, 3, 4, 2, 2, 3);
  const auto got = deformable_attention(in.weights, in.offsets, in.values, in.proj_w, in.proj_b);
  const auto want = oracle(in, true);
  for (size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.data()[i], want[i], 1e-6);
}

TEST(DeformableAttention, MatchesNestedLoopOracleRandom) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int64_t> dim(1, 4), heads(1, 2), points(1, 3), blocks(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t m = heads(rng);
    const int64_t c = m * std::uniform_int_distribution<int64_t>(1, 8 / m)(rng);
    const Instance in = random_instance(rng, dim(rng), dim(rng), c, m, points(rng), blocks(rng) ? 3 : 1);
    const auto got = deformable_attention(in.weights, in.offsets, in.values, in.proj_w, in.proj_b);
    const auto want = oracle(in, true);
    ASSERT_EQ(static_cast<size_t>(got.numel()), want.size());
    for (size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got.data()[i] - want[i]));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(DeformableAttention, RejectsUnnormalizedWeights) {
  auto w = Tensor<double>::full({4, 1, 3, 1}, 0.5);
  EXPECT_THROW(deformable_sample(w, Tensor<double>::zeros({4, 1, 3, 1, 2}), Tensor<double>::zeros({3, 2, 2, 2})),
               NumericError);
  auto neg = Tensor<double>::from_data({1, 1, 3, 1}, {1.5, -0.5, 0.0});
  EXPECT_THROW(deformable_sample(neg, Tensor<double>::zeros({1, 1, 3, 1, 2}), Tensor<double>::zeros({3, 1, 1, 2})),
               NumericError);
}

TEST(DeformableAttention, ShapeErrors) {
  auto w = Tensor<double>::full({4, 3, 3, 1}, 1.0 / 3);
  EXPECT_THROW(deformable_sample(w, Tensor<double>::zeros({4, 3, 3, 1, 2}), Tensor<double>::zeros({3, 2, 2, 4})),
               ShapeError);  // C not divisible by M
  EXPECT_THROW(deformable_sample(w, Tensor<double>::zeros({4, 3, 3, 2, 2}), Tensor<double>::zeros({3, 2, 2, 3})),
               ShapeError);
}

TEST(DeformableAttention, PointPermutationEquivariance) {
  std::mt19937_64 rng(5);
  const Instance in = random_instance(rng, 3, 4, 4, 2, 3, 1);
  const std::array<int64_t, 3> perm{2, 0, 1};
  std::vector<double> pw(in.weights.numel()), po(in.offsets.numel());
  const int64_t groups = in.weights.numel() / 3;
  for (int64_t g = 0; g < groups; ++g) {
    for (int64_t k = 0; k < 3; ++k) {
      pw[g * 3 + k] = in.weights.data()[g * 3 + perm[k]];
      for (int d = 0; d < 2; ++d) po[(g * 3 + k) * 2 + d] = in.offsets.data()[(g * 3 + perm[k]) * 2 + d];
    }
  }
  auto a = deformable_sample(in.weights, in.offsets, in.values);
  auto b = deformable_sample(Tensor<double>::from_data(in.weights.shape(), pw),
                             Tensor<double>::from_data(in.offsets.shape(), po), in.values);
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(DeformableAttention, SinglePointDegeneratesToTemporalAttention) {
  // With K = 1 each (head, frame) reads one location: the output is a
  // weighted sum of exactly T sampled values per channel.
  std::mt19937_64 rng(6);
  Instance in = random_instance(rng, 4, 4, 4, 2, 1, 1);
  const auto got = deformable_sample(in.weights, in.offsets, in.values);
  for (int64_t q = 0; q < 16; ++q) {
    const double qx = q % 4, qy = q / 4;
    for (int64_t c = 0; c < 4; ++c) {
      const int64_t m = c / 2;
      double s = 0;
      for (int64_t t = 0; t < 3; ++t) {
        s += in.weights.at({q, m, t, 0}) * oracle_sample(in.values, t, c, qx + in.offsets.at({q, m, t, 0, 0}),
                                                         qy + in.offsets.at({q, m, t, 0, 1}));
      }
      EXPECT_NEAR(got.at({q, c}), s, 1e-12);
    }
  }
}

TEST(DeformableAttention, ScalesWithValues) {
  std::mt19937_64 rng(7);
  const Instance in = random_instance(rng, 3, 3, 4, 2, 2, 1);
  auto a = deformable_sample(in.weights, in.offsets, in.values);
  auto b = deformable_sample(in.weights, in.offsets, scale(in.values, 2.5));
  for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(b.data()[i], 2.5 * a.data()[i], 1e-12);
}

TEST(Phi, ZeroBaseAndDiagonal) {
  std::mt19937_64 rng(8);
  auto off = random_tensor({3 * 4, 2, 3, 2, 2}, rng, -1, 1, false);
  BaseOffsetMap<double> zero(3, 2, 2);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a != b) zero.set(a, b, Tensor<double>::zeros({2, 2, 2}));
    }
  }
  const std::array<int, 3> frames{0, 1, 2};
  auto out = phi(off, zero, std::span<const int>(frames));
  for (int64_t i = 0; i < off.numel(); ++i) EXPECT_EQ(out.data()[i], off.data()[i]);

  BaseOffsetMap<double> random(3, 2, 2);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a != b) random.set(a, b, random_tensor({2, 2, 2}, rng, -3, 3, false));
    }
  }
  auto moved = phi(off, random, std::span<const int>(frames));
  // Slots where the value frame equals the query frame are untouched.
  for (int64_t q = 0; q < 12; ++q) {
    const int64_t t = q / 4;
    for (int64_t m = 0; m < 2; ++m) {
      for (int64_t k = 0; k < 2; ++k) {
        for (int64_t d = 0; d < 2; ++d) EXPECT_EQ(moved.at({q, m, t, k, d}), off.at({q, m, t, k, d}));
      }
    }
  }
  EXPECT_THROW(random.set(1, 1, Tensor<double>::zeros({2, 2, 2})), std::invalid_argument);
}

TEST(Phi, ConstantFlowHitsExactlyItsSlots) {
  std::mt19937_64 rng(9);
  const int64_t h = 2, w = 3;
  auto off = random_tensor({h * w, 2, 3, 2, 2}, rng, -1, 1, false);
  BaseOffsetMap<double> base(3, h, w);
  std::vector<double> f(2 * h * w);
  std::fill(f.begin(), f.begin() + h * w, 2.0);
  std::fill(f.begin() + h * w, f.end(), -1.0);
  base.set(1, 2, Tensor<double>::from_data({2, h, w}, f));
  base.set(1, 0, Tensor<double>::zeros({2, h, w}));
  const std::array<int, 1> mid{1};
  auto out = phi(off, base, std::span<const int>(mid));
  for (int64_t q = 0; q < h * w; ++q) {
    for (int64_t m = 0; m < 2; ++m) {
      for (int64_t t = 0; t < 3; ++t) {
        for (int64_t k = 0; k < 2; ++k) {
          const double dx = t == 2 ? 2.0 : 0.0, dy = t == 2 ? -1.0 : 0.0;
          EXPECT_DOUBLE_EQ(out.at({q, m, t, k, 0}), off.at({q, m, t, k, 0}) + dx);
          EXPECT_DOUBLE_EQ(out.at({q, m, t, k, 1}), off.at({q, m, t, k, 1}) + dy);
        }
      }
    }
  }
}

TEST(Phi, MissingBaseFlowThrows) {
  BaseOffsetMap<double> base(3, 2, 2);
  base.set(1, 0, Tensor<double>::zeros({2, 2, 2}));
  const std::array<int, 1> mid{1};
  EXPECT_THROW(phi(Tensor<double>::zeros({4, 1, 3, 1, 2}), base, std::span<const int>(mid)), std::out_of_range);
}

TEST(GradCheck, DeformableAttention) {
  std::mt19937_64 rng(30);
  Instance in = random_instance(rng, 3, 4, 4, 2, 2, 3, true);
  auto logits = random_tensor({36, 2, 3, 2}, rng, -2, 2);
  auto r = check_gradients(
      [&] { return probe(deformable_attention(softmax(logits, 2), in.offsets, in.values, in.proj_w, in.proj_b)); },
      {logits, in.offsets, in.values, in.proj_w, in.proj_b});
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

TEST(GradCheck, Phi) {
  std::mt19937_64 rng(31);
  auto off = random_tensor({3 * 4, 1, 3, 2, 2}, rng);
  std::vector<Tensor<double>> flows;
  BaseOffsetMap<double> base(3, 2, 2);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      flows.push_back(random_tensor({2, 2, 2}, rng));
      base.set(a, b, flows.back());
    }
  }
  const std::array<int, 3> frames{0, 1, 2};
  std::vector<Tensor<double>> inputs{off};
  inputs.insert(inputs.end(), flows.begin(), flows.end());
  auto r = check_gradients([&] { return probe(phi(off, base, std::span<const int>(frames))); }, inputs);
  EXPECT_LE(r.max_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace stda
