#include <gtest/gtest.h>

#include <random>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step() { return indicator<1>(Region<1>::interval(0.0, 1.0)); }
Field<2, 1> disk(double r = 0.5) { return indicator<2>(Region<2>::ball({0.0, 0.0}, r)); }

}  // namespace

TEST(Fields, IndicatorValues) {
  const auto f = unit_step();
  EXPECT_EQ(eval_field(f, {0.5})[0], 1.0);
  EXPECT_EQ(eval_field(f, {2.0})[0], 0.0);
  EXPECT_EQ(eval_field(disk(), {0.3, 0.3})[0], 1.0);
  EXPECT_EQ(eval_field(disk(), {0.4, 0.4})[0], 0.0);
}

TEST(Fields, NonFiniteCoordinateRejected) {
  EXPECT_THROW(eval_field(unit_step(), {std::nan("")}), InputError);
  EXPECT_THROW(eval_field(disk(), {0.0, INFINITY}), InputError);
}

TEST(Fields, RegionWhitelist) {
  const auto hs = Region<2>::half_space({1.0, 0.0}, 0.25);
  EXPECT_TRUE(hs.contains({0.3, -5.0}));
  EXPECT_FALSE(hs.contains({0.2, 0.0}));
  const auto u = Region<1>::union_of({Region<1>::interval(0, 1), Region<1>::interval(2, 3)});
  EXPECT_TRUE(u.contains({2.5}));
  EXPECT_FALSE(u.contains({1.5}));
  const auto c = Region<1>::complement_of(Region<1>::interval(0, 1));
  EXPECT_TRUE(c.contains({-0.5}));
  EXPECT_FALSE(c.contains({0.5}));
  EXPECT_THROW(Region<2>::ball({0, 0}, 0.0), InputError);
  EXPECT_THROW(Region<1>::interval(1.0, 0.0), InputError);
}

TEST(Fields, TruncateExamples) {
  const auto f = indicator<1>(Region<1>::interval(0.0, 1.0), 3.0);
  const auto t = truncate(f, 1.0);
  EXPECT_EQ(eval_field(t, {0.5})[0], 1.0);
  EXPECT_EQ(eval_field(t, {1.5})[0], 0.0);
  const auto same = truncate(f, 3.0);
  for (double x : {-0.5, 0.0, 0.25, 0.999, 1.0, 1.5}) EXPECT_EQ(eval_field(same, {x})[0], eval_field(f, {x})[0]);
  const auto neg = truncate(constant<1>(-2.0), 0.0);
  EXPECT_EQ(eval_field(neg, {0.3})[0], 0.0);
  EXPECT_THROW(truncate(f, -1.0), InputError);
}

TEST(Fields, TruncateSmoothFieldClampsGridSamples) {
  const auto g = gaussian_bump<1>({0.0}, 0.3, 2.0);
  const auto t = truncate(g, 1.0);
  for (double x = -1.0; x <= 1.0; x += 0.05) {
    const double v = eval_field(t, {x})[0];
    EXPECT_LE(v, 1.0 + 1e-12);
    EXPECT_GE(v, -1e-12);
  }
}

TEST(Fields, TruncationMonotoneOnProbePairs) {
  const auto f = add(indicator<1>(Region<1>::interval(0.0, 1.0), 3.0),
                     indicator<1>(Region<1>::interval(0.5, 2.0), -1.5));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-0.5, 2.5);
  const std::vector<double> levels{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
  for (int trial = 0; trial < 200; ++trial) {
    const Vec<1> x{U(rng)}, y{U(rng)};
    double prev = -1.0;
    for (double l : levels) {
      const auto t = truncate(f, l);
      const double d = std::abs(eval_field(t, x)[0] - eval_field(t, y)[0]);
      EXPECT_GE(d + 1e-12, prev);
      EXPECT_LE(d, std::abs(eval_field(f, x)[0] - eval_field(f, y)[0]) + 1e-12);
      prev = d;
    }
    EXPECT_EQ(eval_field(truncate(f, 5.0), x)[0], eval_field(f, x)[0]);
  }
}

TEST(Fields, JumpSetOfStep) {
  const auto js = jump_set_of(unit_step());
  ASSERT_EQ(js.patches.size(), 2u);
  std::vector<double> at;
  for (const auto& p : js.patches) {
    EXPECT_EQ(p.kind, PatchKind::Point);
    EXPECT_DOUBLE_EQ(p.measure, 1.0);
    EXPECT_DOUBLE_EQ(p.jump_size(), 1.0);
    at.push_back(p.anchor[0]);
  }
  std::sort(at.begin(), at.end());
  EXPECT_DOUBLE_EQ(at[0], 0.0);
  EXPECT_DOUBLE_EQ(at[1], 1.0);
}

TEST(Fields, JumpSetOfDisk) {
  const double R = 0.7;
  const auto js = jump_set_of(disk(R));
  ASSERT_EQ(js.patches.size(), 1u);
  const auto& p = js.patches[0];
  EXPECT_EQ(p.kind, PatchKind::Sphere);
  EXPECT_NEAR(p.measure, 2 * kPi * R, 1e-9);
  EXPECT_NEAR(js.total_measure(), 2 * kPi * R, 1e-9);
  EXPECT_DOUBLE_EQ(p.jump_size(), 1.0);
}

TEST(Fields, JumpSetOfBoxMeasure) {
  const auto js = jump_set_of(indicator<2>(Region<2>::box({0, 0}, {2, 0.5})));
  EXPECT_NEAR(js.total_measure(), 5.0, 1e-12);
  const auto js3 = jump_set_of(indicator<3>(Region<3>::box({0, 0, 0}, {1, 2, 3})));
  EXPECT_NEAR(js3.total_measure(), 2 * (2 + 3 + 6), 1e-12);
}

TEST(Fields, JumpSetOfConstantIsEmpty) {
  EXPECT_TRUE(jump_set_of(constant<1>(4.0)).patches.empty());
  EXPECT_TRUE(jump_set_of(constant<2>(-1.0)).patches.empty());
}

TEST(Fields, SampleConstantAndIndicator) {
  GridSpec<1> g;
  g.origin = {-1.0};
  g.spacing = {0.25};
  g.extent = {12};
  const auto c = sample(constant<1>(1.0), g);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(eval_field(c, g.center_of({i}))[0], 1.0);
  const auto s = sample(unit_step(), g);
  for (int i = 0; i < 12; ++i) {
    const auto x = g.center_of({i});
    EXPECT_EQ(eval_field(s, x)[0], eval_field(unit_step(), x)[0]);
  }
  EXPECT_EQ(eval_field(s, {10.0})[0], 0.0);
}

TEST(Fields, SampledGaussianExactAtNodes) {
  const auto b = gaussian_bump<2>({0.1, -0.2}, 0.3, 1.5);
  const auto g = GridSpec<2>::covering(Box<2>::make({-1, -1}, {1, 1}), 0.05);
  const auto s = sample(b, g);
  for (const auto& idx : {std::array<int, 2>{3, 5}, std::array<int, 2>{20, 17}, std::array<int, 2>{39, 0}}) {
    const auto x = g.center_of(idx);
    EXPECT_NEAR(eval_field(s, x)[0], eval_field(b, x)[0], 1e-14);
  }
}

TEST(Fields, VectorValuedRotatedStep) {
  const auto f = rotated_step(kPi / 3);
  const auto v = eval_field(f, {0.5});
  EXPECT_NEAR(v[0] * v[0] + v[1] * v[1], 1.0, 1e-12);
  const auto js = jump_set_of(f);
  EXPECT_EQ(js.patches.size(), 2u);
  for (const auto& p : js.patches) EXPECT_NEAR(p.jump_size(), 1.0, 1e-12);
}

TEST(Fields, ScaleAndSubtract) {
  const auto f = scale(unit_step(), -2.0);
  EXPECT_EQ(eval_field(f, {0.5})[0], -2.0);
  const auto z = subtract(unit_step(), unit_step());
  for (double x : {-1.0, 0.2, 0.7, 3.0}) EXPECT_EQ(eval_field(z, {x})[0], 0.0);
}
