#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/quadrature.hpp"

namespace besov {

enum class KernelKind { Trivial, Logarithmic, SigmaApprox };

/// Radial kernel families eps -> rho_eps. Parameters that can fall below the
/// double range (eps for the logarithmic kernel) are carried as Scale.
struct KernelFamily {
  KernelKind kind = KernelKind::Trivial;
  int dim = 1;
  double omega = 0.5;        // logarithmic
  double sigma_ratio = 0.5;  // sigma_eps = sigma_ratio * eps

  static KernelFamily trivial(int dim) { return make(KernelKind::Trivial, dim, 0.5, 0.5); }
  static KernelFamily logarithmic(int dim, double omega) { return make(KernelKind::Logarithmic, dim, omega, 0.5); }
  static KernelFamily sigma_approx(int dim, double ratio = 0.5) { return make(KernelKind::SigmaApprox, dim, 0.5, ratio); }

  static KernelFamily make(KernelKind k, int dim, double omega, double ratio) {
    if (dim < 1 || dim > 3) throw CapabilityError("kernel: dimension must be 1..3");
    if (k == KernelKind::Logarithmic && !(omega > 0.0 && omega < 1.0)) throw InputError("kernel: omega must be in (0,1)");
    if (k == KernelKind::SigmaApprox && !(ratio > 0.0 && ratio < 1.0))
      throw InputError("kernel: sigma rule must give sigma_eps in (0, eps)");
    return KernelFamily{k, dim, omega, ratio};
  }

  std::string name() const {
    switch (kind) {
      case KernelKind::Trivial: return "trivial";
      case KernelKind::Logarithmic: return "logarithmic(omega=" + trimmed(omega) + ")";
      case KernelKind::SigmaApprox: return "sigma_approx(sigma=" + trimmed(sigma_ratio) + "*eps)";
    }
    return "?";
  }

  static std::string trimmed(double v) {
    std::string s = std::to_string(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  void check(Scale eps) const {
    if (kind == KernelKind::Logarithmic) {
      // eps in (0, 1/e): |ln eps| > 1, with a 1e-12 margin at the top
      if (!(eps.log_value < std::log(1.0 / std::exp(1.0) - 1e-12) + 1e-15))
        throw InputError("logarithmic kernel: eps must lie in (0, 1/e)");
    }
  }

  /// ln R_{eps,omega} = -omega ln|ln eps|.
  double log_R(Scale eps) const { return -omega * std::log(-eps.log_value); }

  /// Profile as power-law pieces c r^p on [a, b).
  std::vector<PowerPiece> pieces(Scale eps) const {
    check(eps);
    const double le = eps.log_value;
    const double lS = std::log(sphere_measure(dim));
    switch (kind) {
      case KernelKind::Trivial:
        return {{-dim * le - std::log(unit_ball_volume(dim)), 0.0, -kInf, le}};
      case KernelKind::Logarithmic: {
        const double lR = log_R(eps);
        const double len = -le + lR;  // |ln eps| - |ln R|
        return {{-lS - std::log(len), -static_cast<double>(dim), le, lR}};
      }
      case KernelKind::SigmaApprox: {
        const double ls = std::log(sigma_ratio) + le;
        return {{-(std::log(2.0) + ls + lS), -(dim - 1.0), le + std::log1p(-sigma_ratio), le + std::log1p(sigma_ratio)}};
      }
    }
    return {};
  }

  /// Support [lo, hi) of rho_eps as logs.
  std::pair<double, double> log_support(Scale eps) const {
    const auto p = pieces(eps);
    return {p.front().log_a, p.back().log_b};
  }

  double profile(Scale eps, double r) const {
    if (!(r > 0.0)) throw InputError("kernel_profile: r must be positive");
    const double lr = std::log(r);
    double v = 0.0;
    for (const auto& p : pieces(eps)) v += p.density(lr);
    return v;
  }
  double profile(double eps, double r) const { return profile(Scale::of(eps), r); }
};

inline double kernel_profile(const KernelFamily& k, double eps, double r) { return k.profile(eps, r); }

/// Analytic mass of rho_eps over R^N (expected 1).
inline QuadResult kernel_mass(const KernelFamily& k, Scale eps) {
  QuadResult r;
  r.value = radial_integral_analytic(k.pieces(eps), k.dim);
  r.error_estimate = 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r.value));
  r.evaluations_used = 1;
  return r;
}
inline QuadResult kernel_mass(const KernelFamily& k, double eps) { return kernel_mass(k, Scale::of(eps)); }

/// Independent check of the mass by adaptive quadrature (representable eps only).
inline QuadResult kernel_mass_numeric(const KernelFamily& k, double eps) {
  const Scale s = Scale::of(eps);
  const auto [la, lb] = k.log_support(s);
  const double a = std::isfinite(la) ? std::exp(la) : 0.0;
  const double b = std::exp(lb);
  return radial_integral([&](double r) { return k.profile(s, r); }, k.dim, a, b);
}

/// int_delta^inf rho_eps(r) r^{N-1} dr.
inline double support_tail(const KernelFamily& k, Scale eps, double delta) {
  if (!(delta > 0.0)) throw InputError("support_tail: delta must be positive");
  return radial_integral_analytic(k.pieces(eps), k.dim, std::log(delta), kInf, false);
}
inline double support_tail(const KernelFamily& k, double eps, double delta) {
  return support_tail(k, Scale::of(eps), delta);
}

namespace detail {
inline void check_log_moment_args(Scale eps, double omega, double alpha, int dim) {
  if (!(alpha > 0.0)) throw InputError("log_kernel_moment: alpha must be positive");
  if (!(omega > 0.0 && omega < 1.0)) throw InputError("log_kernel_moment: omega must be in (0,1)");
  if (dim < 1 || dim > 3) throw CapabilityError("log_kernel_moment: dimension must be 1..3");
  KernelFamily::logarithmic(dim, omega).check(eps);
}
}  // namespace detail

/// eps^alpha int rho_{eps,omega}(|z|) |z|^{-alpha} dz, closed form.
inline double log_kernel_moment(Scale eps, double omega, double alpha, int dim) {
  detail::check_log_moment_args(eps, omega, alpha, dim);
  const double L = -eps.log_value;  // |ln eps|
  const double lnL = std::log(L);
  // eps^alpha |ln eps|^{alpha omega}
  const double ratio = -std::expm1(-alpha * L + alpha * omega * lnL);
  return ratio / (alpha * (L - omega * lnL));
}
inline double log_kernel_moment(double eps, double omega, double alpha, int dim) {
  return log_kernel_moment(Scale::of(eps), omega, alpha, dim);
}

/// Same quantity by Gauss-Kronrod in s = ln r (no use of the closed form).
inline QuadResult log_kernel_moment_quadrature(Scale eps, double omega, double alpha, int dim) {
  detail::check_log_moment_args(eps, omega, alpha, dim);
  const KernelFamily k = KernelFamily::logarithmic(dim, omega);
  const PowerPiece p = k.pieces(eps).front();
  // eps^alpha * H * int_{ln eps}^{ln R} c e^{(-N-alpha) s} e^{N s} ds, shifted by ln eps
  const double span = p.log_b - p.log_a;
  const double lead = std::log(sphere_measure(dim)) + p.log_c;
  auto f = [&](double v) { return std::exp(-alpha * v); };
  QuadResult r;
  const double cut = std::min(span, 60.0 / alpha);
  double e1 = 0, e2 = 0;
  double v = integrate_1d(f, 0.0, cut, 1e-14, &e1);
  if (span > cut) v += integrate_1d(f, cut, span, 1e-14, &e2);
  r.value = std::exp(lead) * v;
  r.error_estimate = std::exp(lead) * (e1 + e2) + 4 * std::numeric_limits<double>::epsilon() * r.value;
  r.evaluations_used = 2;
  return r;
}

/// Cross-check in the original radial variable through radial_integral.
inline QuadResult log_kernel_moment_radial(double eps, double omega, double alpha, int dim) {
  const Scale s = Scale::of(eps);
  detail::check_log_moment_args(s, omega, alpha, dim);
  const KernelFamily k = KernelFamily::logarithmic(dim, omega);
  const auto [la, lb] = k.log_support(s);
  const double a = std::exp(la), b = std::exp(lb);
  // split geometrically so each panel sees a bounded dynamic range
  std::vector<double> br;
  for (double x = a * 4; x < b; x *= 4) br.push_back(x);
  QuadResult r = radial_integral([&](double t) { return k.profile(s, t) * std::pow(t, -alpha); }, dim, a, b, br);
  const double ea = std::pow(eps, alpha);
  r.value *= ea;
  r.error_estimate *= ea;
  return r;
}

}  // namespace besov
