#include <gtest/gtest.h>

#include <random>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step() { return indicator<1>(Region<1>::interval(0.0, 1.0)); }

// int_a^b t^p dt
double pint(double p, double a, double b) {
  if (!(b > a)) return 0.0;
  if (p == -1.0) return std::log(b / a);
  return (std::pow(b, p + 1) - std::pow(a, p + 1)) / (p + 1);
}

// Step chi_[0,1] over R: int_{a<|z|<b} |z|^-s * 2 min(|z|,1) dz.
double step_window(double s, double a, double b) {
  return 4.0 * (pint(1.0 - s, a, std::min(b, 1.0)) + pint(-s, std::max(a, 1.0), b));
}

QuadBudget budget(std::uint64_t evals = 20000, double rel = 2e-3, std::uint64_t seed = 11) {
  QuadBudget b;
  b.max_evaluations = evals;
  b.target_rel_error = rel;
  b.rng_seed = seed;
  return b;
}

}  // namespace

TEST(Quadrature, SphereMeasure) {
  EXPECT_DOUBLE_EQ(sphere_measure(1), 2.0);
  EXPECT_NEAR(sphere_measure(2), 2 * kPi, 1e-15);
  EXPECT_NEAR(sphere_measure(3), 4 * kPi, 1e-14);
  EXPECT_THROW(sphere_measure(4), CapabilityError);
}

TEST(Quadrature, IntegrateSphereExamples) {
  const auto one = integrate_sphere<2>([](const Vec<2>&) { return 1.0; }, SphereRule::trapezoid(64));
  EXPECT_NEAR(one.value, 2 * kPi, 1e-12);
  const auto abs1 = integrate_sphere<2>([](const Vec<2>& n) { return std::abs(n[0]); }, SphereRule::trapezoid(256));
  EXPECT_NEAR(abs1.value, 4.0, 1e-3);
  EXPECT_NEAR(integrate_sphere<1>([](const Vec<1>& n) { return std::abs(n[0]); }, SphereRule::exact2()).value, 2.0, 0);
  EXPECT_NEAR(integrate_sphere<1>([](const Vec<1>& n) { return n[0]; }, SphereRule::exact2()).value, 0.0, 1e-15);
  EXPECT_NEAR(integrate_sphere<2>([](const Vec<2>& n) { return n[0]; }, SphereRule::trapezoid(32)).value, 0.0, 1e-12);
  const auto odd3 = integrate_sphere<3>([](const Vec<3>& n) { return n[0]; }, SphereRule::lat_long(16));
  EXPECT_NEAR(odd3.value, 0.0, 1e-10);
  const auto one3 = integrate_sphere<3>([](const Vec<3>&) { return 1.0; }, SphereRule::lat_long(32));
  EXPECT_NEAR(one3.value, 4 * kPi, 1e-10);
}

TEST(Quadrature, IntegrateSphereRuleMismatch) {
  EXPECT_THROW(integrate_sphere<2>([](const Vec<2>&) { return 1.0; }, SphereRule::exact2()), InputError);
  EXPECT_THROW(integrate_sphere<1>([](const Vec<1>&) { return 1.0; }, SphereRule::trapezoid(8)), InputError);
}

TEST(Quadrature, RadialIntegralExamples) {
  for (int N = 1; N <= 3; ++N) {
    const auto k = KernelFamily::trivial(N);
    const double eps = 0.3;
    const auto r = radial_integral([&](double t) { return k.profile(eps, t); }, N, 0.0, 1.0, {eps});
    EXPECT_NEAR(r.value, 1.0, 1e-12) << "N=" << N;
    EXPECT_NEAR(radial_integral_analytic(k.pieces(Scale::of(eps)), N), 1.0, 1e-12);

    const double a = 1e-3, R = 0.4;
    const std::vector<PowerPiece> inv{{0.0, -static_cast<double>(N), std::log(a), std::log(R)}};
    EXPECT_NEAR(radial_integral_analytic(inv, N), sphere_measure(N) * (std::log(R) - std::log(a)), 1e-12);

    EXPECT_EQ(radial_integral([](double) { return 0.0; }, N, 0.0, 5.0).value, 0.0);
  }
}

TEST(Quadrature, RadialIntegralDivergenceGuard) {
  const std::vector<PowerPiece> div{{0.0, -2.0, -kInf, 0.0}};
  EXPECT_THROW(radial_integral_analytic(div, 1), DivergenceError);
  EXPECT_THROW(guard_overflow(2e12, "x"), DivergenceError);
}

TEST(Quadrature, DoubleIntegralConstantIsZero) {
  const auto c = constant<1>(3.0);
  for (const auto& w : {Window::full(), Window::annulus(0.1, 0.5), Window::ball(0.2)}) {
    const auto r = double_integral_singular(c, Domain<1>::of(Region<1>::interval(-1, 2)), 1.5, 2.0, w, budget());
    EXPECT_EQ(r.value, 0.0);
  }
  const auto c2 = constant<2>(1.0);
  const auto r2 = double_integral_singular(c2, Domain<2>::of(Region<2>::box({-1, -1}, {1, 1})), 2.5, 2.0,
                                           Window::annulus(0.1, 0.5), budget());
  EXPECT_EQ(r2.value, 0.0);
}

TEST(Quadrature, DoubleIntegralStepBall) {
  const auto r = double_integral_singular(unit_step(), Domain<1>::of(Region<1>::interval(-1, 2)), 1.0, 2.0,
                                          Window::ball(0.1), budget());
  EXPECT_NEAR(r.value, 0.4, 0.02 * 0.4);
}

TEST(Quadrature, DoubleIntegralStepAnnulus) {
  for (auto [b, g] : {std::pair{0.01, 0.5}, std::pair{0.001, 0.9}, std::pair{0.1, 0.2}}) {
    const auto r = double_integral_singular(unit_step(), Domain<1>::of(Region<1>::interval(-1, 2)), 2.0, 2.0,
                                            Window::annulus(b, g), budget());
    const double exact = 4.0 * std::log(g / b);
    EXPECT_NEAR(r.value, exact, 0.02 * exact) << b << " " << g;
  }
}

TEST(Quadrature, RawStepGagliardoDiverges) {
  FunctionalParams<1> P;
  EXPECT_THROW(gagliardo_seminorm_q(unit_step(), P, budget()), DivergenceError);
}

TEST(Quadrature, PolarConsistencyDisk) {
  const auto f = indicator<2>(Region<2>::ball({0.0, 0.0}, 0.5));
  const Domain<2> E = Domain<2>::everywhere();
  ShiftEngine<2, 1> eng(f, E, 2.0);
  const double lo = 0.05, hi = 0.6, s = 2.5;
  const auto mc = double_integral_singular(f, E, s, 2.0, Window::annulus(lo, hi), budget(40000, 1e-3));
  const auto rad = radial_integral([&](double t) { return std::pow(t, -s) * eng.difference({t, 0.0}); }, 2, lo, hi, {},
                                   1e-10);
  EXPECT_NEAR(mc.value, rad.value, 3.0 * (mc.error_estimate + rad.error_estimate) + 1e-12)
      << "mc=" << mc.value << "+-" << mc.error_estimate << " radial=" << rad.value;
}

TEST(Quadrature, PolarConsistencyStep) {
  const auto f = unit_step();
  ShiftEngine<1, 1> eng(f, Domain<1>::everywhere(), 2.0);
  const auto mc = double_integral_singular(f, Domain<1>::everywhere(), 1.7, 2.0, Window::annulus(0.02, 3.0), budget());
  const auto rad = radial_integral([&](double t) { return std::pow(t, -1.7) * eng.difference({t}); }, 1, 0.02, 3.0,
                                   {1.0});
  EXPECT_NEAR(mc.value, rad.value, 3.0 * (mc.error_estimate + rad.error_estimate) + 1e-12);
  EXPECT_NEAR(rad.value, step_window(1.7, 0.02, 3.0), 1e-9);
}

TEST(Quadrature, SeededDeterminismAndThreads) {
  const auto f = indicator<2>(Region<2>::ball({0.1, 0.0}, 0.4));
  const Domain<2> E = Domain<2>::of(Region<2>::box({-1, -1}, {1, 1}));
  auto b1 = budget(6000, 1e-3, 99);
  const auto a = double_integral_singular(f, E, 2.5, 2.0, Window::annulus(0.01, 0.3), b1);
  const auto b = double_integral_singular(f, E, 2.5, 2.0, Window::annulus(0.01, 0.3), b1);
  auto b3 = b1;
  b3.threads = 3;
  const auto c = double_integral_singular(f, E, 2.5, 2.0, Window::annulus(0.01, 0.3), b3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.error_estimate, b.error_estimate);
  EXPECT_EQ(a.evaluations_used, b.evaluations_used);
  EXPECT_EQ(a.value, c.value);
  EXPECT_EQ(a.error_estimate, c.error_estimate);
  EXPECT_LE(a.evaluations_used, b1.max_evaluations);
  const auto d = double_integral_singular(f, E, 2.5, 2.0, Window::annulus(0.01, 0.3), budget(6000, 1e-3, 100));
  EXPECT_NE(a.value, d.value);
}

TEST(Quadrature, BudgetExhaustionIsFlaggedNotThrown) {
  const auto f = indicator<2>(Region<2>::ball({0.0, 0.0}, 0.5));
  const auto r = double_integral_singular(f, Domain<2>::everywhere(), 2.5, 2.0, Window::annulus(0.01, 0.5),
                                          budget(50, 1e-6));
  EXPECT_TRUE(r.low_confidence);
  EXPECT_LE(r.evaluations_used, 50u);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(Quadrature, ErrorEstimateHonesty) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int covered = 0;
  const int cases = 100;
  for (int i = 0; i < cases; ++i) {
    const double s = 1.0 + 1.5 * U(rng);
    const double a = std::exp(std::log(1e-3) + U(rng) * std::log(0.5 / 1e-3));
    const double b = a * (1.2 + 8.0 * U(rng));
    const auto r = double_integral_singular(unit_step(), Domain<1>::everywhere(), s, 2.0, Window::annulus(a, b),
                                            budget(4000, 1e-3, 1000 + i));
    const double exact = step_window(s, a, b);
    if (std::abs(r.value - exact) <= r.error_estimate) ++covered;
  }
  EXPECT_GE(covered, 95) << covered << "/" << cases;
}
