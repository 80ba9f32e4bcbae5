#include <gtest/gtest.h>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step(double amp = 1.0) { return indicator<1>(Region<1>::interval(0.0, 1.0), amp); }
Field<2, 1> disk(double r = 0.5) { return indicator<2>(Region<2>::ball({0.0, 0.0}, r)); }

QuadBudget budget(std::uint64_t evals = 20000, double rel = 2e-3, std::uint64_t seed = 5) {
  QuadBudget b;
  b.max_evaluations = evals;
  b.target_rel_error = rel;
  b.rng_seed = seed;
  return b;
}

template <int N>
FunctionalParams<N> params(double r = 0.5, double q = 2.0) {
  FunctionalParams<N> P;
  P.r = r;
  P.q = q;
  return P;
}

}  // namespace

TEST(Seminorms, ParamsValidation) {
  auto P = params<1>(1.5, 2.0);
  try {
    P.validate();
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "params.r");
  }
  EXPECT_THROW(params<1>(0.5, 0.5).validate(), ValidationError);
  auto Pp = params<1>();
  Pp.p = 1.5;
  EXPECT_THROW(Pp.validate(), ValidationError);
  EXPECT_TRUE(params<1>(0.5, 2.0).jump_regime());
  EXPECT_FALSE(params<1>(0.4, 2.0).jump_regime());
}

TEST(Seminorms, ConstantFieldGivesZero) {
  const auto c = constant<1>(2.0);
  const auto P = params<1>();
  EXPECT_EQ(besov_seminorm_q(c, P).value, 0.0);
  EXPECT_EQ(brq_double_integral(c, P, 0.1, budget()).value, 0.0);
  EXPECT_EQ(spherical_variation(c, P, 0.1).value, 0.0);
  EXPECT_EQ(besov_constant_at(c, P, KernelFamily::trivial(1), 0.1, budget()).value, 0.0);
  EXPECT_NEAR(gagliardo_constant_at(c, MollifierSpec<1>::tent(), P, 0.05, budget()).value, 0.0, 1e-12);
  const auto c2 = constant<2>(-1.0);
  EXPECT_EQ(gagliardo_seminorm_q(c2, params<2>(), budget()).value, 0.0);
  EXPECT_EQ(directional_variation(c2, params<2>(), {0.3, 0.4}, 0.1).value, 0.0);
}

TEST(Seminorms, BesovSeminormStepAndHomogeneity) {
  const auto P = params<1>();
  const auto v1 = besov_seminorm_q(unit_step(), P);
  EXPECT_NEAR(v1.value, 2.0, 1e-9);
  const auto v2 = besov_seminorm_q(unit_step(2.0), P);
  EXPECT_NEAR(v2.value, 4.0 * v1.value, 1e-9);
}

TEST(Seminorms, BrqStep) {
  const auto P = params<1>();
  const auto v = brq_double_integral(unit_step(), P, 0.05, budget());
  EXPECT_NEAR(v.value, 4.0, 0.03 * 4.0);
}

TEST(Seminorms, DirectionalVariationStep) {
  const auto P = params<1>();
  EXPECT_EQ(directional_variation(unit_step(), P, {0.0}, 0.01).value, 0.0);
  EXPECT_NEAR(directional_variation(unit_step(), P, {1.0}, 0.01).value, 2.0, 1e-9);
  EXPECT_NEAR(directional_variation(unit_step(), P, {2.0}, 0.01).value, 4.0, 1e-9);
  EXPECT_NEAR(directional_variation(unit_step(), P, {-0.5}, 0.01).value, 1.0, 1e-9);
}

TEST(Seminorms, SphericalVariationStepAndDisk) {
  EXPECT_NEAR(spherical_variation(unit_step(), params<1>(), 0.01).value, 4.0, 1e-9);
  const auto d = spherical_variation(disk(), params<2>(), 1e-3);
  EXPECT_NEAR(d.value, 4.0 * kPi, 0.05 * 4.0 * kPi);
}

TEST(Seminorms, DirectionalVariationDisk) {
  const auto js = jump_set_of(disk());
  for (const Vec<2>& n : {Vec<2>{1.0, 0.0}, Vec<2>{0.0, 1.0}, Vec<2>{std::sqrt(0.5), std::sqrt(0.5)}}) {
    const double v = directional_variation(disk(), params<2>(), n, 1e-3).value;
    EXPECT_NEAR(v, directional_jump_variation(js, 2.0, n), 0.05 * 2.0);
  }
}

TEST(Seminorms, BesovConstantStepKernels) {
  const auto P = params<1>();
  for (double eps : {0.1, 0.01}) {
    EXPECT_NEAR(besov_constant_at(unit_step(), P, KernelFamily::trivial(1), eps, budget()).value, 2.0, 0.01);
    EXPECT_NEAR(besov_constant_at(unit_step(), P, KernelFamily::sigma_approx(1), eps, budget()).value, 2.0, 0.01);
  }
  EXPECT_NEAR(besov_constant_at(unit_step(), P, KernelFamily::logarithmic(1, 0.5), 0.01, budget()).value, 2.0, 0.05 * 2.0);
  EXPECT_THROW(besov_constant_at(unit_step(), P, KernelFamily::trivial(2), 0.1, budget()), InputError);
}

TEST(Seminorms, Homogeneity) {
  const auto u = add(unit_step(), indicator<1>(Region<1>::interval(0.4, 2.0), -0.5));
  const auto P = params<1>();
  for (double lam : {-1.0, 2.0}) {
    const auto v = scale(u, lam);
    const double f = std::pow(std::abs(lam), P.q);
    const auto check = [&](const FunctionalValue& a, const FunctionalValue& b, const char* what) {
      EXPECT_NEAR(b.value, f * a.value, 3.0 * (f * a.error_estimate + b.error_estimate) + 1e-9 * std::abs(b.value))
          << what << " lambda=" << lam;
    };
    check(brq_double_integral(u, P, 0.05, budget()), brq_double_integral(v, P, 0.05, budget()), "brq");
    check(directional_variation(u, P, {0.7}, 0.02), directional_variation(v, P, {0.7}, 0.02), "directional");
    check(spherical_variation(u, P, 0.02), spherical_variation(v, P, 0.02), "spherical");
    check(besov_constant_at(u, P, KernelFamily::trivial(1), 0.05, budget()),
          besov_constant_at(v, P, KernelFamily::trivial(1), 0.05, budget()), "besov_constant");
    check(besov_seminorm_q(u, P), besov_seminorm_q(v, P), "besov_seminorm");
    check(lq_norm_q(u, P.q), lq_norm_q(v, P.q), "lq");
  }
  const auto P2 = params<2>();
  const auto d2 = scale(disk(), 2.0);
  const auto a = brq_double_integral(disk(), P2, 0.05, budget(8000, 5e-3));
  const auto b = brq_double_integral(d2, P2, 0.05, budget(8000, 5e-3));
  EXPECT_NEAR(b.value, 4.0 * a.value, 3.0 * (4.0 * a.error_estimate + b.error_estimate));
}

TEST(Seminorms, TriangleInequality) {
  const auto u = unit_step();
  const auto v = indicator<1>(Region<1>::interval(0.5, 2.0), -1.5);
  const auto P = params<1>();
  for (double eps : {0.2, 0.05}) {
    const auto fu = brq_double_integral(u, P, eps, budget());
    const auto fv = brq_double_integral(v, P, eps, budget());
    const auto fw = brq_double_integral(add(u, v), P, eps, budget());
    const double lhs = std::pow(fw.value, 1.0 / P.q);
    const double rhs = std::pow(fu.value, 1.0 / P.q) + std::pow(fv.value, 1.0 / P.q);
    const double tol = 3.0 * (fw.error_estimate / (2 * lhs) + fu.error_estimate / (2 * std::sqrt(fu.value)) +
                              fv.error_estimate / (2 * std::sqrt(fv.value)));
    EXPECT_LE(lhs, rhs + tol);
  }
}

TEST(Seminorms, BesovConstantBelowBesovSeminorm) {
  const auto P1 = params<1>();
  for (const auto& f : {unit_step(), unit_step(3.0), add(unit_step(), indicator<1>(Region<1>::interval(0.3, 0.6), 2.0))}) {
    const auto bs = besov_seminorm_q(f, P1);
    for (const auto& k : {KernelFamily::trivial(1), KernelFamily::logarithmic(1, 0.5), KernelFamily::sigma_approx(1)})
      for (double eps : {0.3, 0.05, 0.005}) {
        const auto bc = besov_constant_at(f, P1, k, eps, budget());
        EXPECT_LE(bc.value, bs.value + 3.0 * (bc.error_estimate + bs.error_estimate) + 1e-9) << k.name() << " " << eps;
      }
  }
  const auto P2 = params<2>();
  const auto bs2 = besov_seminorm_q(disk(), P2);
  for (const auto& k : {KernelFamily::trivial(2), KernelFamily::sigma_approx(2)}) {
    const auto bc = besov_constant_at(disk(), P2, k, 0.05, budget(8000, 5e-3));
    EXPECT_LE(bc.value, bs2.value + 3.0 * (bc.error_estimate + bs2.error_estimate)) << k.name();
  }
}

TEST(Seminorms, SandwichAtTheLimit) {
  // averaged spherical variation >= Besov constant, equal for the step
  const auto u = add(unit_step(), indicator<1>(Region<1>::interval(0.25, 0.5), 0.5));
  const auto P = params<1>();
  const double eps = 1e-3;
  const double sv = spherical_variation(u, P, eps).value / sphere_measure(1);
  for (const auto& k : {KernelFamily::trivial(1), KernelFamily::logarithmic(1, 0.5), KernelFamily::sigma_approx(1)}) {
    const auto bc = besov_constant_at(u, P, k, eps, budget());
    EXPECT_LE(bc.value, sv * 1.05) << k.name();
  }
  const double sv_step = spherical_variation(unit_step(), P, eps).value / 2.0;
  const auto bc_step = besov_constant_at(unit_step(), P, KernelFamily::trivial(1), eps, budget());
  EXPECT_NEAR(bc_step.value, sv_step, 0.01 * sv_step);
}

TEST(Seminorms, GagliardoConstantWithinUniformBound) {
  const auto P = params<1>();
  const auto m = MollifierSpec<1>::tent();
  const double B = gagliardo_uniform_bound(unit_step(), m, P);
  EXPECT_TRUE(std::isfinite(B));
  for (double le : {-1.5, -3.0, -6.0, -9.0}) {
    const auto g = gagliardo_constant_at(unit_step(), m, P, std::exp(le), budget());
    EXPECT_GT(g.value, 0.0);
    EXPECT_LE(g.value, B + 3.0 * g.error_estimate) << le;
  }
  const auto g0 = gagliardo_constant_at(unit_step(), MollifierSpec<1>::signed_test(), P, std::exp(-6.0), budget());
  EXPECT_LE(g0.value, B);
  EXPECT_THROW(gagliardo_constant_at(unit_step(), m, P, 0.5, budget()), InputError);
}

TEST(Seminorms, SplitBounds) {
  const auto P = params<1>();
  const auto m = MollifierSpec<1>::tent();
  const double eps = 0.05;
  const double beta = std::pow(eps, P.q / (P.q - P.rq())), gamma = 1.0;
  const auto b = gagliardo_split_bounds(unit_step(), m, P, eps, beta, gamma);
  const auto meas = gagliardo_split_measured(unit_step(), m, P, eps, beta, gamma, budget());
  EXPECT_LE(meas.tail.value, b.tail + 3.0 * meas.tail.error_estimate);
  EXPECT_LE(meas.annulus.value, b.annulus + 3.0 * meas.annulus.error_estimate);
  EXPECT_LE(meas.core.value, b.core + 3.0 * meas.core.error_estimate);
  EXPECT_NEAR(b.annulus, 2.0 * 2.0 * (std::log(gamma) - std::log(beta)), 1e-9);
  double prev = kInf;
  for (double g : {1.0, 10.0, 1e3, 1e6, 1e9}) {
    const double t = gagliardo_split_bounds(unit_step(), m, P, eps, beta, g).tail;
    EXPECT_LT(t, prev);
    prev = t;
  }
  EXPECT_LT(prev, 1e-3);
  EXPECT_THROW(gagliardo_split_bounds(unit_step(), m, P, eps, 0.5, 0.5), InputError);
}

TEST(Seminorms, InterpolationCheck) {
  const auto c = interpolation_check(unit_step(), 2.0, 3.0);
  EXPECT_NEAR(c.lhs, 2.0, 1e-9);
  EXPECT_NEAR(c.rhs, 2.0, 1e-9);
  EXPECT_NEAR(c.lhs, c.rhs, 1e-6);
  EXPECT_TRUE(c.pass);
  const auto s = interpolation_check(unit_step(2.0), 2.0, 3.0);
  EXPECT_TRUE(s.pass);
  EXPECT_LE(s.lhs, s.rhs + 1e-9);
  const auto z = interpolation_check(constant<1>(1.0), 2.0, 3.0);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  EXPECT_THROW(interpolation_check(unit_step(), 3.0, 2.0), InputError);
  EXPECT_THROW(interpolation_check(unit_step(), 2.0, 2.0), InputError);
}

TEST(Seminorms, VariationInequality) {
  for (double h : {0.05, 0.5, 1.0, -0.3}) {
    const auto c = variation_inequality_check(unit_step(), {h});
    EXPECT_NEAR(c.lhs, 2.0, 1e-9);
    EXPECT_NEAR(c.rhs, 2.0, 1e-12);
    EXPECT_TRUE(c.pass);
  }
  const auto far = variation_inequality_check(unit_step(), {4.0});
  EXPECT_NEAR(far.lhs, 0.5, 1e-9);
  EXPECT_TRUE(far.pass);
  const auto z = variation_inequality_check(constant<1>(2.0), {0.3});
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  EXPECT_THROW(variation_inequality_check(unit_step(), {0.0}), InputError);
  const auto d = variation_inequality_check(disk(), {0.1, 0.2});
  EXPECT_TRUE(d.pass) << d.lhs << " " << d.rhs;
}

TEST(Seminorms, NormsAndTotalVariation) {
  EXPECT_NEAR(lq_norm_q(unit_step(3.0), 2.0).value, 9.0, 1e-12);
  EXPECT_NEAR(lq_norm_q(disk(), 2.0).value, kPi * 0.25, 1e-9);
  EXPECT_NEAR(total_variation(unit_step(3.0)).value, 6.0, 1e-12);
  EXPECT_NEAR(total_variation(disk()).value, kPi, 1e-9);
  const auto g = total_variation(gaussian_bump<1>({0.0}, 0.2, 1.0));
  EXPECT_NEAR(g.value, 2.0, 1e-3);
}
