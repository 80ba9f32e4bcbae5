#include <gtest/gtest.h>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step(double amp = 1.0) { return indicator<1>(Region<1>::interval(0.0, 1.0), amp); }
Field<2, 1> disk(double r = 0.5, double amp = 1.0) { return indicator<2>(Region<2>::ball({0.0, 0.0}, r), amp); }

}  // namespace

TEST(Jumps, ConstantsTable) {
  const auto t1 = dimensional_constants(1);
  EXPECT_EQ(t1.moment1, 2.0);
  EXPECT_EQ(t1.C_N, 2.0);
  EXPECT_EQ(t1.sphere_measure, 2.0);
  const auto t2 = dimensional_constants(2);
  EXPECT_DOUBLE_EQ(t2.moment1, 4.0);
  EXPECT_DOUBLE_EQ(t2.C_N, 2.0);
  EXPECT_LE(t2.nc_residual, 1e-8);
  const auto t3 = dimensional_constants(3, {0.0, 1.0, 2.0});
  EXPECT_NEAR(t3.moment1, 2 * kPi, 1e-9);
  EXPECT_NEAR(t3.C_N * 3, t3.moment1, 1e-12);
  EXPECT_LE(t3.nc_residual, 1e-6);
  for (const auto& m : t3.moments) {
    EXPECT_GT(m.moment, 0.0);
    if (m.q == 0.0) EXPECT_NEAR(m.hatC, 1.0, 1e-12);
    if (m.q == 1.0) EXPECT_NEAR(m.moment, 2 * kPi, 1e-9);
    if (m.q == 2.0) EXPECT_NEAR(m.moment, 4 * kPi / 3, 1e-9);
  }
  EXPECT_NEAR(dimensional_constants(2, {2.0}).moments[0].moment, kPi, 1e-9);
  EXPECT_THROW(dimensional_constants(4), CapabilityError);
  EXPECT_THROW(dimensional_constants(0), CapabilityError);
}

TEST(Jumps, JumpVariationExamples) {
  EXPECT_DOUBLE_EQ(jump_variation(jump_set_of(unit_step()), 2.0), 2.0);
  EXPECT_NEAR(jump_variation(jump_set_of(disk(0.5)), 2.0), kPi, 1e-12);
  EXPECT_DOUBLE_EQ(jump_variation(jump_set_of(unit_step(3.0)), 2.0), 18.0);
  EXPECT_DOUBLE_EQ(jump_variation(jump_set_of(unit_step(3.0)), 1.0), 6.0);
  const auto only_left = Domain<1>::of(Region<1>::interval(-0.5, 0.5));
  EXPECT_DOUBLE_EQ(jump_variation(jump_set_of(unit_step()), 2.0, only_left), 1.0);
  const auto above = Domain<2>::of(Region<2>::half_space({0.0, 1.0}, 0.6));
  EXPECT_EQ(jump_variation(jump_set_of(disk(0.5)), 2.0, above), 0.0);
  const auto around = Domain<2>::of(Region<2>::ball({0.1, 0.0}, 0.7));
  EXPECT_NEAR(jump_variation(jump_set_of(disk(0.5)), 2.0, around), kPi, 1e-12);
  // a circle cut by a half-space has no closed-form patch here
  const auto upper = Domain<2>::of(Region<2>::half_space({0.0, 1.0}, 0.0));
  EXPECT_THROW(jump_variation(jump_set_of(disk(0.5)), 2.0, upper), CapabilityError);
}

TEST(Jumps, DirectionalExamples) {
  const auto js = jump_set_of(unit_step());
  EXPECT_DOUBLE_EQ(directional_jump_variation(js, 2.0, {1.0}), 2.0);
  EXPECT_DOUBLE_EQ(directional_jump_variation(js, 2.0, {2.0}), 4.0);
  EXPECT_DOUBLE_EQ(directional_jump_variation(js, 2.0, {-0.5}), 1.0);
  const auto jd = jump_set_of(disk(0.5));
  EXPECT_NEAR(directional_jump_variation(jd, 2.0, {1.0, 0.0}), 2.0, 1e-12);
  EXPECT_NEAR(directional_jump_variation(jd, 2.0, {0.0, 1.0}), 2.0, 1e-12);
  EXPECT_NEAR(directional_jump_variation(jd, 2.0, {std::sqrt(0.5), std::sqrt(0.5)}), 2.0, 1e-12);
  const auto jb = jump_set_of(indicator<2>(Region<2>::box({0, 0}, {2, 0.5})));
  EXPECT_NEAR(directional_jump_variation(jb, 2.0, {1.0, 0.0}), 1.0, 1e-12);
  EXPECT_NEAR(directional_jump_variation(jb, 2.0, {0.0, 1.0}), 4.0, 1e-12);
}

TEST(Jumps, CauchySchwarz) {
  const auto js1 = jump_set_of(unit_step(2.0));
  const auto js2 = jump_set_of(indicator<2>(Region<2>::box({0, 0}, {1, 0.3}), 1.5));
  const auto jd = jump_set_of(disk(0.4, -2.0));
  const auto j3 = jump_set_of(indicator<3>(Region<3>::ball({0, 0, 0}, 0.3)));
  for (double q : {1.0, 2.0, 3.0}) {
    for (double n : {-2.0, 0.3, 1.0}) EXPECT_LE(directional_jump_variation(js1, q, {n}), std::abs(n) * jump_variation(js1, q) + 1e-12);
    for (const Vec<2>& n : {Vec<2>{1, 0}, Vec<2>{0.6, 0.8}, Vec<2>{-2, 1}}) {
      EXPECT_LE(directional_jump_variation(js2, q, n), norm(n) * jump_variation(js2, q) + 1e-12);
      EXPECT_LE(directional_jump_variation(jd, q, n), norm(n) * jump_variation(jd, q) + 1e-12);
    }
    EXPECT_LE(directional_jump_variation(j3, q, {0.2, -0.4, 1.0}), norm(Vec<3>{0.2, -0.4, 1.0}) * jump_variation(j3, q) + 1e-12);
  }
}

TEST(Jumps, SphereIntegratedIdentity) {
  const auto js1 = jump_set_of(unit_step(2.0));
  const double v1 = integrate_sphere<1>([&](const Vec<1>& n) { return directional_jump_variation(js1, 2.0, n); },
                                        SphereRule::exact2()).value;
  EXPECT_NEAR(v1, moment1(1) * jump_variation(js1, 2.0), 1e-12);

  const auto jb = jump_set_of(indicator<2>(Region<2>::box({0, 0}, {2, 0.5})));
  const double vb = integrate_sphere<2>([&](const Vec<2>& n) { return directional_jump_variation(jb, 2.0, n); },
                                        SphereRule::trapezoid(1 << 18)).value;
  EXPECT_NEAR(vb, moment1(2) * jump_variation(jb, 2.0), 1e-8);

  const auto jd = jump_set_of(disk(0.5));
  const double vd = integrate_sphere<2>([&](const Vec<2>& n) { return directional_jump_variation(jd, 2.0, n); },
                                        SphereRule::trapezoid(64)).value;
  EXPECT_NEAR(vd, moment1(2) * jump_variation(jd, 2.0), 1e-6);

  const auto j3 = jump_set_of(indicator<3>(Region<3>::ball({0, 0, 0}, 0.3)));
  const double v3 = integrate_sphere<3>([&](const Vec<3>& n) { return directional_jump_variation(j3, 2.0, n); },
                                        SphereRule::lat_long(64)).value;
  EXPECT_NEAR(v3, moment1(3) * jump_variation(j3, 2.0), 1e-6);
}

TEST(Jumps, TruncationMonotonicity) {
  const auto f1 = add(unit_step(3.0), indicator<1>(Region<1>::interval(2.0, 3.0), -2.0));
  const auto f2 = disk(0.5, 3.0);
  for (double q : {1.0, 2.0}) {
    double p1 = -1, p2 = -1;
    for (double l : {0.0, 0.5, 1.0, 2.0, 2.5, 3.0, 4.0, 10.0}) {
      const double a = jump_variation(jump_set_of(truncate(f1, l)), q);
      const double b = jump_variation(jump_set_of(truncate(f2, l)), q);
      EXPECT_GE(a, p1);
      EXPECT_GE(b, p2);
      if (l >= 3.0) {
        EXPECT_NEAR(a, jump_variation(jump_set_of(f1), q), 1e-12);
        EXPECT_NEAR(b, jump_variation(jump_set_of(f2), q), 1e-12);
      }
      p1 = a;
      p2 = b;
    }
  }
}

TEST(Jumps, TotalVariation) {
  EXPECT_DOUBLE_EQ(jump_total_variation(jump_set_of(unit_step(3.0))), 6.0);
  EXPECT_NEAR(jump_total_variation(jump_set_of(disk(0.5))), kPi, 1e-12);
  EXPECT_NEAR(jump_total_variation(jump_set_of(rotated_step(0.7))), 2.0, 1e-12);
}
