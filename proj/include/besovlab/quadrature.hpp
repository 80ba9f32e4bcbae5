#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "besovlab/core.hpp"
#include "besovlab/region.hpp"

namespace besov {

struct QuadBudget {
  std::uint64_t max_evaluations = 20000;
  double target_rel_error = 2e-3;
  std::uint64_t rng_seed = 0x5eed;
  int threads = 1;

  void validate() const {
    if (max_evaluations < 1) throw InputError("budget: max_evaluations must be >= 1");
    if (!(target_rel_error > 0.0 && target_rel_error < 1.0)) throw InputError("budget: target_rel_error must be in (0,1)");
    if (threads < 1) throw InputError("budget: threads must be >= 1");
  }
  QuadBudget with_seed(std::uint64_t s) const {
    QuadBudget b = *this;
    b.rng_seed = s;
    return b;
  }
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::uint64_t evaluations_used = 0;
  bool low_confidence = false;
};

inline QuadResult operator+(QuadResult a, const QuadResult& b) {
  a.value += b.value;
  a.error_estimate += b.error_estimate;
  a.evaluations_used += b.evaluations_used;
  a.low_confidence = a.low_confidence || b.low_confidence;
  return a;
}

inline void guard_overflow(double v, const std::string& what) {
  if (!std::isfinite(v) || std::abs(v) > kOverflowGuard)
    throw DivergenceError(what + ": value exceeds overflow guard (integral diverges)");
}

// ---------------------------------------------------------------------------
// Sphere rules (unnormalized H^{N-1} measure)
// ---------------------------------------------------------------------------

enum class SphereRuleKind { Exact2pt, Trapezoid, ProductLatLong };

struct SphereRule {
  SphereRuleKind kind = SphereRuleKind::Trapezoid;
  int m = 64;

  static SphereRule exact2() { return {SphereRuleKind::Exact2pt, 2}; }
  static SphereRule trapezoid(int m) { return {SphereRuleKind::Trapezoid, m}; }
  static SphereRule lat_long(int m) { return {SphereRuleKind::ProductLatLong, m}; }
  /// Natural rule for dimension N.
  static SphereRule for_dim(int n, int m = 64) {
    if (n == 1) return exact2();
    if (n == 2) return trapezoid(m);
    return lat_long(m);
  }
  std::string name() const {
    switch (kind) {
      case SphereRuleKind::Exact2pt: return "exact-2pt";
      case SphereRuleKind::Trapezoid: return "trapezoid-" + std::to_string(m);
      case SphereRuleKind::ProductLatLong: return "product-lat-long-" + std::to_string(m);
    }
    return "?";
  }
};

namespace detail {

template <int N, typename G>
double sphere_rule_sum(G&& g, SphereRuleKind kind, int m, std::uint64_t& evals) {
  if constexpr (N == 1) {
    evals += 2;
    return g(Vec<1>{1.0}) + g(Vec<1>{-1.0});
  } else if constexpr (N == 2) {
    (void)kind;
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      const double a = 2.0 * kPi * k / m;
      s += g(Vec<2>{std::cos(a), std::sin(a)});
    }
    evals += static_cast<std::uint64_t>(m);
    return s * 2.0 * kPi / m;
  } else {
    (void)kind;
    const int panels = std::max(1, m / 8);
    const auto& gl = gauss_legendre<8>();
    const int na = 2 * m;
    double s = 0.0;
    const double w = 2.0 / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = -1.0 + (p + 0.5) * w;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double z = mid + 0.5 * w * gl.nodes[i];
        const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
        double ring = 0.0;
        for (int k = 0; k < na; ++k) {
          const double a = 2.0 * kPi * (k + 0.5) / na;
          ring += g(Vec<3>{rr * std::cos(a), rr * std::sin(a), z});
        }
        s += 0.5 * w * gl.weights[i] * ring * 2.0 * kPi / na;
      }
    }
    evals += static_cast<std::uint64_t>(panels) * gl.nodes.size() * na;
    return s;
  }
}

}  // namespace detail

/// Integral of g over S^{N-1}; the error estimate compares against the
/// half-resolution rule.
template <int N, typename G>
QuadResult integrate_sphere(G&& g, const SphereRule& rule) {
  const bool ok = (rule.kind == SphereRuleKind::Exact2pt && N == 1) ||
                  (rule.kind == SphereRuleKind::Trapezoid && N == 2) ||
                  (rule.kind == SphereRuleKind::ProductLatLong && N == 3);
  if (!ok) throw InputError("integrate_sphere: rule " + rule.name() + " does not match dimension " + std::to_string(N));
  QuadResult r;
  if constexpr (N == 1) {
    r.value = detail::sphere_rule_sum<1>(g, rule.kind, 2, r.evaluations_used);
    return r;
  } else {
    if (rule.m < 4) throw InputError("integrate_sphere: rule resolution must be >= 4");
    r.value = detail::sphere_rule_sum<N>(g, rule.kind, rule.m, r.evaluations_used);
    const double coarse = detail::sphere_rule_sum<N>(g, rule.kind, rule.m / 2, r.evaluations_used);
    r.error_estimate = std::abs(r.value - coarse);
    return r;
  }
}

// ---------------------------------------------------------------------------
// Radial integrals: H^{N-1}(S) * int_a^b rho(r) r^{N-1} dr
// ---------------------------------------------------------------------------

/// c r^p on [a, b), stored in log form so extreme scales stay representable.
/// log_a = -inf means a = 0; log_b = +inf means b = inf.
struct PowerPiece {
  double log_c;
  double exponent;
  double log_a;
  double log_b;

  double density(double log_r) const {
    if (log_r < log_a || log_r >= log_b) return 0.0;
    return std::exp(log_c + exponent * log_r);
  }
};

/// Exact int_{e^la}^{e^lb} e^{lc} r^{e} dr in log-safe arithmetic.
inline double power_integral(double lc, double e, double la, double lb) {
  if (!(lb > la)) return 0.0;
  const double k = e + 1.0;
  if (k == 0.0) {
    if (!std::isfinite(la) || !std::isfinite(lb)) return kInf;
    return std::exp(lc) * (lb - la);
  }
  if (k > 0.0) {
    if (!std::isfinite(lb)) return kInf;
    // e^{lc + k lb} (1 - e^{k (la - lb)}) / k
    const double ratio = std::isfinite(la) ? -std::expm1(k * (la - lb)) : 1.0;
    return std::exp(lc + k * lb) * ratio / k;
  }
  if (!std::isfinite(la)) return kInf;
  const double ratio = std::isfinite(lb) ? -std::expm1(k * (lb - la)) : 1.0;
  return std::exp(lc + k * la) * ratio / (-k);
}

/// Analytic path: sum over pieces of H^{N-1}(S) int_a^b c r^{p+N-1} dr.
inline double radial_integral_analytic(const std::vector<PowerPiece>& pieces, int dim, double log_a = -kInf,
                                       double log_b = kInf, bool include_sphere = true) {
  double s = 0.0;
  for (const auto& p : pieces) {
    const double la = std::max(log_a, p.log_a), lb = std::min(log_b, p.log_b);
    s += power_integral(p.log_c, p.exponent + dim - 1, la, lb);
  }
  if (include_sphere) s *= sphere_measure(dim);
  guard_overflow(s, "radial_integral");
  return s;
}

/// Adaptive Gauss-Kronrod path for arbitrary profiles; `breaks` are interior
/// points where the profile is not smooth.
template <typename Profile>
QuadResult radial_integral(Profile&& rho, int dim, double a, double b, std::vector<double> breaks = {},
                           double tol = 1e-13) {
  if (!(a >= 0.0) || !(b > a)) throw InputError("radial_integral: need 0 <= a < b");
  std::vector<double> pts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  QuadResult r;
  const double sm = sphere_measure(dim);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    auto f = [&](double t) {
      ++r.evaluations_used;
      return rho(t) * std::pow(t, dim - 1);
    };
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 15, tol, &err);
    r.value += v;
    r.error_estimate += err;
  }
  r.value *= sm;
  r.error_estimate = r.error_estimate * sm + 4 * std::numeric_limits<double>::epsilon() * std::abs(r.value);
  guard_overflow(r.value, "radial_integral");
  return r;
}

/// One-dimensional adaptive integral (thin wrapper used across modules).
template <typename F>
double integrate_1d(F&& f, double a, double b, double tol = 1e-13, double* err = nullptr) {
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &e);
  if (err) *err = e;
  return v;
}

}  // namespace besov
