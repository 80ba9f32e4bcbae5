#include <gtest/gtest.h>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step() { return indicator<1>(Region<1>::interval(0.0, 1.0)); }

// (u * eta_eps)(x) by adaptive quadrature in 1D
double conv1d(const Field<1, 1>& u, const MollifierSpec<1>& m, double eps, double x) {
  const double s = m.support_radius();
  std::vector<double> br{-s};
  for (double k : m.kinks()) br.push_back(k);
  for (double b : {x / eps, (x - 1.0) / eps}) br.push_back(b);
  br.push_back(s);
  std::sort(br.begin(), br.end());
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = std::max(br[i], -s), b = std::min(br[i + 1], s);
    if (b > a) v += integrate_1d([&](double z) { return m.value({z}) * u({x - eps * z})[0]; }, a, b, 1e-12);
  }
  return v;
}

}  // namespace

TEST(Mollifiers, SpecScalars) {
  EXPECT_NEAR(MollifierSpec<1>::tent().total(), 1.0, 1e-12);
  EXPECT_NEAR(MollifierSpec<2>::smooth_bump().total(), 1.0, 1e-10);
  EXPECT_NEAR(MollifierSpec<3>::truncated_gaussian().total(), 1.0, 1e-10);
  EXPECT_NEAR(MollifierSpec<3>::tent().total(), 1.0, 1e-10);
  const auto tent = MollifierSpec<1>::tent();
  EXPECT_NEAR(tent.abs_mass(), 1.0, 1e-12);
  EXPECT_NEAR(tent.grad_mass(), 2.0, 1e-9);
  EXPECT_NEAR(MollifierSpec<1>::signed_test().total(), 0.0, 1e-12);
  EXPECT_NEAR(MollifierSpec<2>::signed_test().total(), 0.0, 1e-10);
  EXPECT_GT(MollifierSpec<2>::signed_test().abs_mass(), 0.0);
  const auto s2 = MollifierSpec<2>::tent();
  EXPECT_NEAR(s2.polar([&](const Vec<2>& z) { return s2.value(z); }), 1.0, 1e-8);
  EXPECT_TRUE(std::isfinite(s2.grad_mass()));
  EXPECT_TRUE(std::isfinite(s2.weighted_grad(1.0)));
  EXPECT_GT(s2.weighted_grad(1.0), s2.grad_mass());
}

TEST(Mollifiers, ScaledAndMixtures) {
  const auto t = MollifierSpec<1>::tent();
  const auto t2 = t.scaled(2.0);
  EXPECT_NEAR(t2.total(), 2.0, 1e-12);
  EXPECT_NEAR(t2.abs_mass(), 2.0, 1e-12);
  const auto mix = t.scaled(0.5).plus(MollifierSpec<1>::smooth_bump().scaled(0.5));
  EXPECT_NEAR(mix.total(), 1.0, 1e-10);
  EXPECT_THROW(MollifierSpec<1>(std::vector<MollifierSpec<1>::Term>{}), InputError);
}

TEST(Mollifiers, ConstantFieldStaysConstant) {
  const auto c = constant<1>(2.5);
  const auto u = mollify(c, MollifierSpec<1>::tent(), 0.3);
  for (double x : {-3.0, 0.0, 0.7}) EXPECT_NEAR(eval_field(u, {x})[0], 2.5, 1e-12);
  const auto z = mollify(c, MollifierSpec<1>::signed_test(), 0.3);
  for (double x : {-3.0, 0.0, 0.7}) EXPECT_NEAR(eval_field(z, {x})[0], 0.0, 1e-12);
  const auto c2 = constant<2>(-1.0);
  const auto u2 = mollify(c2, MollifierSpec<2>::smooth_bump(), 0.1);
  EXPECT_NEAR(eval_field(u2, {0.3, 0.1})[0], -1.0, 1e-10);
}

TEST(Mollifiers, StepTentAtJump) {
  const auto u = mollify(unit_step(), MollifierSpec<1>::tent(), 0.2);
  EXPECT_NEAR(eval_field(u, {0.0})[0], 0.5, 1e-14);
  EXPECT_NEAR(eval_field(u, {1.0})[0], 0.5, 1e-14);
  EXPECT_NEAR(eval_field(u, {0.5})[0], 1.0, 1e-14);
  EXPECT_NEAR(eval_field(u, {-0.3})[0], 0.0, 1e-14);
  EXPECT_NEAR(eval_field(u, {0.1})[0], 1.0 - 0.5 * 0.25, 1e-14);
}

TEST(Mollifiers, StepClosedFormMatchesQuadrature) {
  for (const auto& m : {MollifierSpec<1>::tent(), MollifierSpec<1>::smooth_bump(), MollifierSpec<1>::truncated_gaussian(),
                        MollifierSpec<1>::signed_test()}) {
    const double eps = 0.15;
    const auto u = mollify(unit_step(), m, eps);
    for (double x : {-0.1, -0.03, 0.0, 0.04, 0.5, 0.97, 1.1}) {
      EXPECT_NEAR(eval_field(u, {x})[0], conv1d(unit_step(), m, eps, x), 1e-9) << m.name() << " x=" << x;
    }
  }
}

TEST(Mollifiers, DiskPathMatchesPolarQuadrature) {
  const auto disk = indicator<2>(Region<2>::ball({0.0, 0.0}, 0.5));
  const auto m = MollifierSpec<2>::tent();
  const double eps = 0.1;
  const auto u = mollify(disk, m, eps);
  for (const Vec<2>& x : {Vec<2>{0.5, 0.0}, Vec<2>{0.3, 0.36}, Vec<2>{0.0, 0.58}, Vec<2>{0.1, 0.1}}) {
    const double ref = m.polar([&](const Vec<2>& z) { return m.value(z) * disk(Vec<2>{x[0] - eps * z[0], x[1] - eps * z[1]})[0]; });
    EXPECT_NEAR(eval_field(u, x)[0], ref, 5e-3) << x[0] << "," << x[1];
  }
}

TEST(Mollifiers, GridPathResolutionRule) {
  const auto g = sample(gaussian_bump<1>({0.0}, 0.3, 1.0), GridSpec<1>::covering(Box<1>::make({-2}, {2}), 0.01));
  EXPECT_THROW(mollify(g, MollifierSpec<1>::tent(), 0.05), ResolutionError);
  const auto u = mollify(g, MollifierSpec<1>::tent(), 0.2);
  const auto ref = mollify(gaussian_bump<1>({0.0}, 0.3, 1.0), MollifierSpec<1>::tent(), 0.2);
  for (double x : {-0.4, 0.0, 0.25}) EXPECT_NEAR(eval_field(u, {x})[0], eval_field(ref, {x})[0], 2e-3);
}

TEST(Mollifiers, BoundCheckExamples) {
  const auto c = mollifier_bound_check(constant<1>(1.0), MollifierSpec<1>::tent(), 0.1, 2.0, {0.05});
  EXPECT_NEAR(c.lhs, 0.0, 1e-14);
  EXPECT_NEAR(c.rhs, 0.0, 1e-14);
  EXPECT_TRUE(c.pass);
  const auto s = mollifier_bound_check(unit_step(), MollifierSpec<1>::tent(), 0.1, 2.0, {0.05});
  EXPECT_NEAR(s.rhs, 0.1, 1e-9);
  EXPECT_LE(s.lhs, s.rhs);
  EXPECT_TRUE(s.pass);
  const auto s2 = mollifier_bound_check(unit_step(), MollifierSpec<1>::tent().scaled(2.0), 0.1, 2.0, {0.05});
  EXPECT_NEAR(s2.rhs, 4.0 * s.rhs, 1e-9);
  EXPECT_NEAR(s2.lhs, 4.0 * s.lhs, 1e-9);
  const auto d = mollifier_bound_check(indicator<2>(Region<2>::ball({0, 0}, 0.5)), MollifierSpec<2>::tent(), 0.1, 2.0,
                                       {0.03, 0.04});
  EXPECT_TRUE(d.pass) << d.lhs << " " << d.rhs;
}

TEST(Mollifiers, BesovContraction) {
  FunctionalParams<1> P;
  P.E = Domain<1>::everywhere();
  const auto grid = default_shift_grid(unit_step());
  const double raw = besov_seminorm_q(unit_step(), P, grid).value;
  for (const auto& m : {MollifierSpec<1>::tent(), MollifierSpec<1>::smooth_bump(), MollifierSpec<1>::signed_test()})
    for (double eps : {0.2, 0.05}) {
      const auto ue = mollify(unit_step(), m, eps);
      const auto v = besov_seminorm_q(ue, P, grid);
      EXPECT_LE(v.value, std::pow(m.abs_mass(), P.q) * raw + 3.0 * v.error_estimate + 1e-9) << m.name() << " " << eps;
    }
}

TEST(Mollifiers, LqConvergenceBound) {
  // ||u - u_eps||_q^q <= eps^{rq} ||eta||_1^{q-1} [u]_B^q int |eta||v|^{rq} dv
  const auto u = unit_step();
  const auto m = MollifierSpec<1>::tent();
  FunctionalParams<1> P;
  P.E = Domain<1>::everywhere();
  const double bq = besov_seminorm_q(u, P).value;
  EXPECT_NEAR(bq, 2.0, 1e-9);
  const double mom = m.polar([&](const Vec<1>& z) { return std::abs(m.value(z)) * std::pow(std::abs(z[0]), P.rq()); });
  const double coef = std::pow(m.abs_mass(), P.q - 1.0) * bq * mom;
  for (double eps : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const auto diff = subtract(u, mollify(u, m, eps));
    const double lq = lq_norm_q(diff, P.q).value;
    EXPECT_NEAR(lq, 0.2 * eps, 1e-6 * eps);
    EXPECT_LE(lq / std::pow(eps, P.rq()), coef) << eps;
  }
}

TEST(Mollifiers, ThreadCountDoesNotChangeGridConvolution) {
  const auto f = indicator<2>(Region<2>::box({0, 0}, {0.5, 0.4}));
  const auto a = mollify(f, MollifierSpec<2>::tent(), 0.1, 1);
  const auto b = mollify(f, MollifierSpec<2>::tent(), 0.1, 3);
  for (const Vec<2>& x : {Vec<2>{0.0, 0.0}, Vec<2>{0.25, 0.41}, Vec<2>{0.51, 0.2}})
    EXPECT_EQ(eval_field(a, x)[0], eval_field(b, x)[0]);
}
