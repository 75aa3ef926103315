#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "codevqa/core/random.hpp"
#include "codevqa/gradcam/gradcam.hpp"

namespace codevqa::gradcam {
namespace {

CrossAttention make(std::vector<std::vector<double>> c, std::vector<std::vector<double>> g) {
  CrossAttention ca;
  ca.attention = Matrix(c.size(), c[0].size());
  ca.gradient = Matrix(g.size(), g[0].size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      ca.attention.at(i, j) = c[i][j];
      ca.gradient.at(i, j) = g[i][j];
    }
  }
  ca.token_texts.assign(c.size(), "t");
  return ca;
}

TEST(TokenGradcam, NegativeGradientRowIsZero) {
  const auto ca = make({{1, 2}, {3, 4}}, {{-1, -5}, {2, 0}});
  EXPECT_EQ(token_gradcam(ca, 0, 1, 2).values, (std::vector<double>{0, 0}));
}

TEST(TokenGradcam, ElementwiseProductWithRelu) {
  const auto ca = make({{1, 2}, {3, 4}}, {{-1, -5}, {2, 0}});
  EXPECT_EQ(token_gradcam(ca, 1, 1, 2).values, (std::vector<double>{6, 0}));
}

TEST(TokenGradcam, UnitGradientCopiesAttention) {
  const auto ca = make({{1, 1, 1}}, {{1, 1, 1}});
  EXPECT_EQ(token_gradcam(ca, 0, 1, 3).values, (std::vector<double>{1, 1, 1}));
}

TEST(TokenGradcam, OutOfRangeThrows) {
  const auto ca = make({{1, 2}}, {{1, 1}});
  EXPECT_THROW(token_gradcam(ca, 1, 1, 2), GradCamError);
}

TEST(AveragedGradcam, MeanOfTwoTokens) {
  const auto ca = make({{1, 2}, {3, 4}}, {{-1, -5}, {2, 0}});
  const std::vector<std::size_t> idx = {0, 1};
  EXPECT_EQ(averaged_gradcam(ca, idx, 1, 2).values, (std::vector<double>{3, 0}));
}

TEST(AveragedGradcam, SingleIndexEqualsToken) {
  const auto ca = make({{1, 2}, {3, 4}}, {{-1, -5}, {2, 0}});
  const std::vector<std::size_t> idx = {1};
  EXPECT_EQ(averaged_gradcam(ca, idx, 1, 2), token_gradcam(ca, 1, 1, 2));
}

TEST(AveragedGradcam, IdenticalRowsGiveThatRow) {
  const auto ca = make({{0.5, 2}, {0.5, 2}, {0.5, 2}}, {{2, 1}, {2, 1}, {2, 1}});
  const std::vector<std::size_t> idx = {0, 1, 2};
  EXPECT_EQ(averaged_gradcam(ca, idx, 1, 2).values, (std::vector<double>{1, 2}));
}

TEST(AveragedGradcam, EmptySetThrows) {
  const auto ca = make({{1}}, {{1}});
  EXPECT_THROW(averaged_gradcam(ca, {}, 1, 1), GradCamError);
}

TEST(ContentTokens, DropsSpecialPositions) {
  auto ca = make({{1}, {1}, {1}}, {{1}, {1}, {1}});
  ca.special_positions = {0};
  EXPECT_EQ(content_tokens(ca), (std::vector<std::size_t>{1, 2}));
  ca.special_positions = {0, 1, 2};
  EXPECT_EQ(content_tokens(ca), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(CrossAttention, ValidateRejectsShapeMismatchAndNegativeAttention) {
  auto ca = make({{1, 2}}, {{1, 2}});
  ca.gradient = Matrix(1, 3);
  EXPECT_THROW(ca.validate(), GradCamError);
  auto neg = make({{-0.1, 2}}, {{1, 2}});
  EXPECT_THROW(neg.validate(), GradCamError);
}

// Independent oracle: straight loops over the definition.
std::vector<double> brute_force_mean(const CrossAttention& ca, const std::vector<std::size_t>& tokens) {
  std::vector<double> out(ca.attention.cols, 0.0);
  for (std::size_t j = 0; j < ca.attention.cols; ++j) {
    double sum = 0.0;
    for (std::size_t t : tokens) {
      const double g = ca.gradient.data[t * ca.gradient.cols + j];
      sum += ca.attention.data[t * ca.attention.cols + j] * (g > 0.0 ? g : 0.0);
    }
    out[j] = sum / static_cast<double>(tokens.size());
  }
  return out;
}

TEST(GradcamProperty, MatchesBruteForceOracle) {
  auto rng = seeded_stream(2024, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = 1 + uniform_index(rng, 8);
    const int gh = 1 + static_cast<int>(uniform_index(rng, 8));
    const int gw = 1 + static_cast<int>(uniform_index(rng, 8));
    const std::size_t p = static_cast<std::size_t>(gh * gw);
    CrossAttention ca;
    ca.attention = Matrix(t, p);
    ca.gradient = Matrix(t, p);
    for (double& v : ca.attention.data) v = unit_draw(rng);
    for (double& v : ca.gradient.data) v = unit_draw(rng) * 4.0 - 2.0;
    ca.token_texts.assign(t, "w");
    for (std::size_t i = 0; i < t; ++i) {
      const auto got = token_gradcam(ca, i, gh, gw);
      const auto want = brute_force_mean(ca, {i});
      for (std::size_t j = 0; j < p; ++j) ASSERT_LE(std::abs(got.values[j] - want[j]), 1e-12);
    }
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < t; ++i) {
      if (uniform_index(rng, 2) == 0 || subset.empty()) subset.push_back(i);
    }
    const auto avg = averaged_gradcam(ca, subset, gh, gw);
    const auto want = brute_force_mean(ca, subset);
    for (std::size_t j = 0; j < p; ++j) {
      ASSERT_LE(std::abs(avg.values[j] - want[j]), 1e-12);
      ASSERT_GE(avg.values[j], 0.0);
    }
  }
}

TEST(GradcamProperty, ScaleEquivariance) {
  auto rng = seeded_stream(77, 0);
  const CoordinateFrame frame;
  for (int trial = 0; trial < 50; ++trial) {
    CrossAttention ca;
    ca.attention = Matrix(3, 576);
    ca.gradient = Matrix(3, 576);
    for (double& v : ca.attention.data) v = unit_draw(rng);
    for (double& v : ca.gradient.data) v = unit_draw(rng) - 0.3;
    ca.token_texts.assign(3, "w");
    CrossAttention scaled = ca;
    const double lambda = 0.25 + unit_draw(rng) * 8.0;
    for (double& v : scaled.gradient.data) v *= lambda;
    const std::vector<std::size_t> idx = {0, 1, 2};
    const auto a = averaged_gradcam(ca, idx, 24, 24);
    const auto b = averaged_gradcam(scaled, idx, 24, 24);
    for (std::size_t j = 0; j < a.values.size(); ++j) ASSERT_NEAR(b.values[j], lambda * a.values[j], 1e-9);
    EXPECT_EQ(argmax_position(a, frame), argmax_position(b, frame));
  }
}

GradCamMap map_of(std::vector<double> values, int gh, int gw) { return {std::move(values), gh, gw}; }

TEST(SamplePatches, PointMass) {
  auto rng = seeded_stream(1, 0);
  EXPECT_EQ(sample_patches(map_of({0, 0, 5, 0}, 2, 2), 3, rng), (std::vector<std::size_t>{2, 2, 2}));
}

TEST(SamplePatches, PointMassAlwaysThatPatch) {
  auto rng = seeded_stream(3, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t at = uniform_index(rng, 576);
    std::vector<double> v(576, 0.0);
    v[at] = 0.001 + unit_draw(rng);
    for (std::size_t got : sample_patches(map_of(v, 24, 24), 20, rng)) ASSERT_EQ(got, at);
  }
}

TEST(SamplePatches, ProportionalFrequencies) {
  auto rng = seeded_stream(12345, 0);
  const auto draws = sample_patches(map_of({1, 1}, 1, 2), 10000, rng);
  const double zero = static_cast<double>(std::count(draws.begin(), draws.end(), 0u)) / 10000.0;
  EXPECT_NEAR(zero, 0.5, 0.02);
  auto rng2 = seeded_stream(54321, 0);
  const auto skew = sample_patches(map_of({3, 1}, 1, 2), 10000, rng2);
  EXPECT_NEAR(static_cast<double>(std::count(skew.begin(), skew.end(), 0u)) / 10000.0, 0.75, 0.02);
}

TEST(SamplePatches, AllZeroIsUniform) {
  auto rng = seeded_stream(8, 0);
  const auto two = sample_patches(map_of({0, 0, 0, 0}, 2, 2), 2, rng);
  EXPECT_EQ(two.size(), 2u);
  for (std::size_t i : two) EXPECT_LT(i, 4u);
  const auto many = sample_patches(map_of({0, 0, 0, 0}, 2, 2), 8000, rng);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(static_cast<double>(std::count(many.begin(), many.end(), k)) / 8000.0, 0.25, 0.02);
  }
}

TEST(SamplePatches, DeterministicGivenSeed) {
  std::vector<double> v(576);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 7);
  auto a = seeded_stream(5, 9);
  auto b = seeded_stream(5, 9);
  EXPECT_EQ(sample_patches(map_of(v, 24, 24), 20, a), sample_patches(map_of(v, 24, 24), 20, b));
}

TEST(ArgmaxPosition, TopLeftPeak) {
  std::vector<double> v(576, 0.0);
  v[0] = 1.0;
  const Position p = argmax_position(map_of(v, 24, 24), CoordinateFrame{});
  EXPECT_DOUBLE_EQ(p.x, 0.5);
  EXPECT_DOUBLE_EQ(p.y, 23.5);
}

TEST(ArgmaxPosition, UniformMapTiesToFirstCell) {
  const Position p = argmax_position(map_of(std::vector<double>(576, 0.3), 24, 24), CoordinateFrame{});
  EXPECT_DOUBLE_EQ(p.x, 0.5);
  EXPECT_DOUBLE_EQ(p.y, 23.5);
}

TEST(ArgmaxPosition, CenterPeak) {
  std::vector<double> v(576, 0.0);
  v[12 * 24 + 12] = 2.0;
  const Position p = argmax_position(map_of(v, 24, 24), CoordinateFrame{});
  EXPECT_DOUBLE_EQ(p.x, 12.5);
  EXPECT_DOUBLE_EQ(p.y, 11.5);
}

TEST(ArgmaxPosition, AlwaysStrictlyInsideFrame) {
  auto rng = seeded_stream(31, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int gh = 1 + static_cast<int>(uniform_index(rng, 30));
    const int gw = 1 + static_cast<int>(uniform_index(rng, 30));
    CoordinateFrame frame;
    frame.left = unit_draw(rng) * 10 - 5;
    frame.bottom = unit_draw(rng) * 10 - 5;
    frame.right = frame.left + 0.5 + unit_draw(rng) * 30;
    frame.top = frame.bottom + 0.5 + unit_draw(rng) * 30;
    frame.grid_w = gw;
    frame.grid_h = gh;
    std::vector<double> v(static_cast<std::size_t>(gh * gw));
    for (double& x : v) x = unit_draw(rng);
    const Position p = argmax_position(map_of(v, gh, gw), frame);
    ASSERT_TRUE(frame.contains_strictly(p.x, p.y)) << p.x << "," << p.y;
  }
}

}  // namespace
}  // namespace codevqa::gradcam
