#include <gtest/gtest.h>

#include "besovlab/besovlab.hpp"

using namespace besov;

namespace {

Field<1, 1> unit_step(double amp = 1.0) { return indicator<1>(Region<1>::interval(0.0, 1.0), amp); }

QuadBudget budget(std::uint64_t seed = 3, int threads = 1) {
  QuadBudget b;
  b.rng_seed = seed;
  b.threads = threads;
  return b;
}

FunctionalValue fv(double v, double e = 0.0) {
  FunctionalValue r;
  r.value = v;
  r.error_estimate = e;
  return r;
}

std::vector<ChainTerm> terms(const std::vector<double>& v) {
  std::vector<ChainTerm> t;
  for (std::size_t i = 0; i < v.size(); ++i) t.push_back({"t" + std::to_string(i), v[i], 0.0, ""});
  return t;
}

}  // namespace

TEST(Limits, GridValidation) {
  EXPECT_THROW(EpsilonGrid::geometric(0.2, 1.0, 10).validate(), ValidationError);
  EXPECT_THROW(EpsilonGrid::geometric(0.2, 0.5, 3).validate(), ValidationError);
  EXPECT_NO_THROW(EpsilonGrid::default_variation().validate());
  const auto v = EpsilonGrid::default_variation().values();
  ASSERT_EQ(v.size(), 10u);
  EXPECT_NEAR(v.front().value(), 0.2, 1e-15);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i].log_value, v[i - 1].log_value);
  const auto g = EpsilonGrid::default_gagliardo().values();
  ASSERT_EQ(g.size(), 8u);
  EXPECT_NEAR(g.front().log_value, -2.0, 1e-14);
  EXPECT_NEAR(g.back().log_value, -9.0, 1e-14);
  const auto ll = EpsilonGrid::log_log(2.0, 2000.0, 4).values();
  EXPECT_NEAR(ll[1].log_value, -20.0, 1e-9);
}

TEST(Limits, ConstantFunctionalSweep) {
  const auto sw = epsilon_sweep("const", EpsilonGrid::default_variation(),
                                [](Scale, const QuadBudget&) { return fv(3.5, 1e-3); }, budget());
  EXPECT_EQ(sw.tail_window, 4);
  EXPECT_EQ(sw.tail_min, 3.5);
  EXPECT_EQ(sw.tail_max, 3.5);
  for (auto m : {ExtrapolationModel::ConstantTail, ExtrapolationModel::AffineInverseLog, ExtrapolationModel::AffinePower}) {
    const auto ex = extrapolate(sw, m, 1.0);
    EXPECT_NEAR(ex.limit, 3.5, 1e-12) << to_string(m);
    EXPECT_GE(ex.uncertainty, 0.0);
  }
  EXPECT_LE(extrapolate(sw, ExtrapolationModel::ConstantTail).uncertainty, 1e-3 + 1e-15);
}

TEST(Limits, ExactModelRecovery) {
  const auto sw = epsilon_sweep("affine", EpsilonGrid::log_uniform(2.0, 9.0, 8), [](Scale e, const QuadBudget&) {
    return fv(1.75 - 3.0 / (-e.log_value));
  }, budget());
  EXPECT_NEAR(extrapolate(sw, ExtrapolationModel::AffineInverseLog).limit, 1.75, 1e-12);
  const auto sp = epsilon_sweep("power", EpsilonGrid::default_variation(), [](Scale e, const QuadBudget&) {
    return fv(-2.0 + 5.0 * std::pow(e.value(), 0.5));
  }, budget());
  EXPECT_NEAR(extrapolate(sp, ExtrapolationModel::AffinePower, 0.5).limit, -2.0, 1e-12);
}

TEST(Limits, FitErrors) {
  auto sw = epsilon_sweep("c", EpsilonGrid::default_variation(), [](Scale, const QuadBudget&) { return fv(1.0); }, budget(),
                          2);
  EXPECT_THROW(extrapolate(sw, ExtrapolationModel::ConstantTail), FitError);
  sw = epsilon_sweep("c", EpsilonGrid::default_variation(), [](Scale, const QuadBudget&) { return fv(1.0); }, budget());
  EXPECT_THROW(extrapolate(sw, ExtrapolationModel::AffinePower, 0.0), FitError);
}

TEST(Limits, RowFailuresAreFlagged) {
  const auto sw = epsilon_sweep("partial", EpsilonGrid::default_variation(), [](Scale e, const QuadBudget&) {
    if (e.value() > 0.05) throw DivergenceError("too coarse");
    return fv(1.0);
  }, budget());
  EXPECT_TRUE(sw.rows[0].flagged);
  EXPECT_NE(sw.rows[0].flag.find("too coarse"), std::string::npos);
  EXPECT_FALSE(sw.rows.back().flagged);
  EXPECT_THROW(epsilon_sweep("none", EpsilonGrid::default_variation(),
                             [](Scale, const QuadBudget&) -> FunctionalValue { throw InputError("no"); }, budget()),
               Error);
}

TEST(Limits, BesovConstantPowerExtrapolation) {
  const auto u = unit_step();
  FunctionalParams<1> P;
  const auto grid = EpsilonGrid::explicit_list({1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
  const auto sw = epsilon_sweep("besov_constant", grid, [&](Scale e, const QuadBudget& b) {
    return besov_constant_at(u, P, KernelFamily::trivial(1), e, b);
  }, budget(), 7);
  const auto ex = extrapolate(sw, ExtrapolationModel::AffinePower, 1.0);
  EXPECT_NEAR(ex.limit, 2.0, 0.01 * 2.0);
}

TEST(Limits, GagliardoStepTowardFour) {
  const auto u = unit_step();
  FunctionalParams<1> P;
  const auto m = MollifierSpec<1>::tent();
  const auto sw = epsilon_sweep("gagliardo_constant", EpsilonGrid::default_gagliardo(), [&](Scale e, const QuadBudget& b) {
    return gagliardo_constant_at(u, m, P, e.value(), b);
  }, budget());
  // rows approach 4 from above like 4 + c/|ln eps|
  for (std::size_t i = 1; i < sw.rows.size(); ++i)
    EXPECT_LT(std::abs(sw.rows[i].value - 4.0), std::abs(sw.rows[i - 1].value - 4.0));
  const auto ex = extrapolate(sw, ExtrapolationModel::AffineInverseLog);
  EXPECT_NEAR(ex.limit, 4.0, 0.1 * 4.0);
}

TEST(Limits, LogMomentRowsDecayToZero) {
  const auto sw = epsilon_sweep("log_moment", EpsilonGrid::log_log(2.0, 1e5, 10), [](Scale e, const QuadBudget&) {
    return fv(log_kernel_moment(e, 0.5, 1.0, 2));
  }, budget());
  for (std::size_t i = 1; i < sw.rows.size(); ++i) EXPECT_LT(sw.rows[i].value, sw.rows[i - 1].value);
  const auto ex = extrapolate(sw, ExtrapolationModel::ConstantTail);
  EXPECT_LT(ex.limit, 1e-3);
}

TEST(Limits, ChainVerdicts) {
  const auto ok = chain_check(ChainKind::JumpChain, terms({4, 4, 4, 4}), 0.1);
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.worst_violation, 0.0);
  const auto bad = chain_check(ChainKind::JumpChain, terms({4, 6, 4, 4}), 0.1);
  EXPECT_FALSE(bad.pass);
  EXPECT_DOUBLE_EQ(bad.worst_violation, 2.0);
  const auto zero = chain_check(ChainKind::KernelEquivalence, terms({0, 0, 0, 0}), 0.1);
  EXPECT_TRUE(zero.pass);
  const auto near = chain_check(ChainKind::JumpChain, terms({4.0, 4.3, 3.9}), 0.1);
  EXPECT_TRUE(near.pass);
  EXPECT_EQ(near.pass, near.worst_violation <= near.tolerance);

  std::vector<ChainTerm> sw{{"lower", 1.0, 0, ""}, {"mid", 2.0, 0, ""}, {"upper", 3.0, 0, ""}};
  EXPECT_TRUE(chain_check(ChainKind::Sandwich, sw, 0.05).pass);
  sw[1].value = 3.5;
  const auto over = chain_check(ChainKind::Sandwich, sw, 0.05);
  EXPECT_FALSE(over.pass);
  EXPECT_DOUBLE_EQ(over.worst_violation, 0.5);
  EXPECT_THROW(chain_check(ChainKind::Sandwich, {{"lower", 1, 0, ""}, {"upper", 2, 0, ""}}, 0.1), InputError);
  EXPECT_THROW(chain_check(ChainKind::JumpChain, terms({4}), 0.1), InputError);
  EXPECT_THROW(chain_check(ChainKind::JumpChain, terms({4, NAN}), 0.1), InputError);
}

TEST(Limits, TailEstimatorStability) {
  const double delta = 0.01;
  auto base = [](Scale e) { return 2.0 + std::sin(7.0 * e.log_value); };
  const auto a = epsilon_sweep("a", EpsilonGrid::default_variation(), [&](Scale e, const QuadBudget&) { return fv(base(e)); }, budget());
  const auto b = epsilon_sweep("b", EpsilonGrid::default_variation(), [&](Scale e, const QuadBudget&) {
    return fv(base(e) + delta * std::cos(13.0 * e.log_value));
  }, budget());
  EXPECT_LE(std::abs(a.tail_min - b.tail_min), delta + 1e-15);
  EXPECT_LE(std::abs(a.tail_max - b.tail_max), delta + 1e-15);
  EXPECT_LE(a.tail_min, a.tail_max);
}

TEST(Limits, ContinuityInEta) {
  // |[u*eta'_eps] - [u*eta_eps]|^q / |ln eps| <= uniform bound of u with eta' - eta
  const auto u = unit_step();
  FunctionalParams<1> P;
  const auto eta = MollifierSpec<1>::tent();
  const auto eta2 = eta.scaled(0.9).plus(MollifierSpec<1>::smooth_bump().scaled(0.1));
  const auto diff = eta.scaled(-0.1).plus(MollifierSpec<1>::smooth_bump().scaled(0.1));
  const double B = gagliardo_uniform_bound(u, diff, P);
  const auto grid = EpsilonGrid::default_gagliardo();
  auto sweep = [&](const MollifierSpec<1>& m) {
    return epsilon_sweep("g", grid, [&](Scale e, const QuadBudget& b) { return gagliardo_constant_at(u, m, P, e.value(), b); },
                         budget());
  };
  const auto s1 = sweep(eta), s2 = sweep(eta2);
  for (std::size_t i = 0; i < s1.rows.size(); ++i) {
    const double d = std::abs(std::sqrt(s2.rows[i].value) - std::sqrt(s1.rows[i].value));
    EXPECT_LE(d * d, B) << i;
  }
  const double l1 = extrapolate(s1, ExtrapolationModel::AffineInverseLog).limit;
  const double l2 = extrapolate(s2, ExtrapolationModel::AffineInverseLog).limit;
  const double d = std::abs(std::sqrt(l2) - std::sqrt(l1));
  EXPECT_LE(d * d, B);
  EXPECT_LT(B, gagliardo_uniform_bound(u, eta, P));
}

TEST(Limits, ContinuityInTruncation) {
  const auto f = unit_step(3.0);
  FunctionalParams<1> P;
  const double eps = 1e-3;
  double prev_sv = -1, prev_bc = -1;
  const double sv_full = spherical_variation(f, P, eps).value;
  const double bc_full = besov_constant_at(f, P, KernelFamily::trivial(1), eps, budget()).value;
  for (double l : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    const auto t = truncate(f, l);
    const double sv = spherical_variation(t, P, eps).value;
    const double bc = besov_constant_at(t, P, KernelFamily::trivial(1), eps, budget()).value;
    EXPECT_GE(sv, prev_sv);
    EXPECT_GE(bc, prev_bc);
    if (l >= 3.0) {
      EXPECT_NEAR(sv, sv_full, 1e-9);
      EXPECT_NEAR(bc, bc_full, 1e-9);
    }
    prev_sv = sv;
    prev_bc = bc;
  }
}

TEST(Limits, SweepIndependentOfThreads) {
  const auto u = indicator<2>(Region<2>::ball({0.0, 0.0}, 0.5));
  FunctionalParams<2> P;
  auto fn = [&](Scale e, const QuadBudget& b) { return besov_constant_at(u, P, KernelFamily::trivial(2), e, b); };
  const auto grid = EpsilonGrid::geometric(0.2, 0.5, 4);
  QuadBudget b1 = budget(17, 1), b3 = budget(17, 3);
  b1.max_evaluations = b3.max_evaluations = 3000;
  const auto a = epsilon_sweep("bc", grid, fn, b1);
  const auto c = epsilon_sweep("bc", grid, fn, b3);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].value, c.rows[i].value);
    EXPECT_EQ(a.rows[i].error, c.rows[i].error);
  }
}
