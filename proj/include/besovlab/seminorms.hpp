#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/jumps.hpp"
#include "besovlab/kernels.hpp"
#include "besovlab/mollifiers.hpp"
#include "besovlab/quadrature.hpp"
#include "besovlab/region.hpp"
#include "besovlab/shift.hpp"

namespace besov {

template <int N>
struct FunctionalParams {
  double r = 0.5;
  double q = 2.0;
  std::optional<double> p;
  std::optional<Domain<N>> E;  // default: support box plus a unit margin

  double rq() const { return r * q; }
  void validate() const {
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("params.r", "r must lie in (0,1)");
    if (!(q >= 1.0) || !std::isfinite(q)) throw ValidationError("params.q", "q must lie in [1,inf)");
    if (p && !(*p > q && std::isfinite(*p))) throw ValidationError("params.p", "p must lie in (q,inf)");
  }
  /// r = 1/q up to rounding of the decimal representation.
  bool jump_regime() const { return std::abs(r * q - 1.0) <= 1e-12; }
};

struct FunctionalValue {
  double value = 0.0;
  double error_estimate = 0.0;
  std::string provenance;
  bool low_confidence = false;
  std::uint64_t evaluations = 0;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

template <int N>
std::string fmt_vec(const Vec<N>& v) {
  std::string s = "(";
  for (int i = 0; i < N; ++i) s += (i ? "," : "") + fmt(v[i]);
  return s + ")";
}

template <int N>
ShiftOptions coarse_options() {
  ShiftOptions o;
  o.line_max_panels = 32;
  o.transversal_min_panels = 2;
  o.transversal_max_panels = 12;
  o.angular_nodes = 16;
  return o;
}

/// F_E(z) with a resolution-halving error estimate.
template <int N, int D>
std::pair<double, double> shift_with_error(const Field<N, D>& f, const Domain<N>& E, double q, const std::type_identity_t<Vec<N>>& z) {
  const double fine = ShiftEngine<N, D>(f, E, q).difference(z);
  const double coarse = ShiftEngine<N, D>(f, E, q, coarse_options<N>()).difference(z);
  return {fine, std::abs(fine - coarse) + 1e-13 * std::abs(fine)};
}

}  // namespace detail

/// Support box plus a unit margin (the whole space when the support is
/// empty or unbounded).
template <int N, int D>
Domain<N> default_domain(const Field<N, D>& f) {
  const Box<N> vb = f.variation_box();
  if (vb.empty || !vb.bounded()) return Domain<N>::everywhere();
  const Box<N> b = vb.expanded(1.0);
  return Domain<N>::of(Region<N>::box(b.lo, b.hi));
}

template <int N, int D>
Domain<N> domain_for(const Field<N, D>& f, const FunctionalParams<N>& P) {
  return P.E ? *P.E : default_domain(f);
}

template <int N>
std::string describe_params(const FunctionalParams<N>& P, const Domain<N>& E) {
  std::string s = "r=" + detail::fmt(P.r) + ",q=" + detail::fmt(P.q);
  if (P.p) s += ",p=" + detail::fmt(*P.p);
  return s + ",E=" + E.describe();
}

namespace detail {
template <int N, int D>
FunctionalValue from_quad(const QuadResult& r, std::string prov) {
  FunctionalValue v;
  v.value = r.value;
  v.error_estimate = r.error_estimate;
  v.low_confidence = r.low_confidence;
  v.evaluations = r.evaluations_used;
  v.provenance = std::move(prov) + ",evals=" + std::to_string(r.evaluations_used) + (r.low_confidence ? ",low_confidence" : "");
  return v;
}
}  // namespace detail

/// [u]^q_{W^{r,q}(E)} = int_E int_E |u(x)-u(y)|^q / |x-y|^{N+rq}.
template <int N, int D>
FunctionalValue gagliardo_seminorm_q(const Field<N, D>& f, const FunctionalParams<N>& P, const QuadBudget& budget) {
  P.validate();
  const Domain<N> E = domain_for(f, P);
  ShiftEngine<N, D> eng(f, E, P.q);
  const auto W = RadialWeight::power_law(N + P.rq(), 1.0, 0.0, kInf, "|z|^-(N+rq)");
  const QuadResult r = double_integral_singular(eng, W, budget);
  return detail::from_quad<N, D>(r, "gagliardo_seminorm_q(field=" + f.describe() + "," + describe_params(P, E) + ")");
}

/// Finite set of shifts for the sup in the Besov seminorm.
template <int N>
struct ShiftGrid {
  std::vector<Vec<N>> shifts;
  std::string description;
};

/// |h| log-spaced over [1e-6 s, 2 diam] (s the field's feature scale) times the
/// probe direction set.
template <int N, int D>
ShiftGrid<N> default_shift_grid(const Field<N, D>& f, int radii = 25) {
  const Box<N> vb = f.variation_box();
  double s = f.feature_scale();
  if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  const double top = (vb.empty || !vb.bounded()) ? 1.0 : 2.0 * vb.diameter();
  const double lo = 1e-6 * s;
  ShiftGrid<N> g;
  const auto dirs = detail::probe_directions<N>();
  for (int k = 0; k < radii; ++k) {
    const double t = lo * std::pow(top / lo, static_cast<double>(k) / (radii - 1));
    for (const auto& d : dirs) g.shifts.push_back(t * d);
  }
  g.description = "log|h| in [" + detail::fmt(lo) + "," + detail::fmt(top) + "] x " + std::to_string(radii) + " radii x " +
                  std::to_string(dirs.size()) + " directions";
  return g;
}

/// max over the grid of int chi_E(x) chi_E(x+h) |u(x+h)-u(x)|^q / |h|^{rq}
/// (a lower bound for the supremum).
template <int N, int D>
FunctionalValue besov_seminorm_q(const Field<N, D>& f, const FunctionalParams<N>& P, const ShiftGrid<N>& grid) {
  P.validate();
  if (grid.shifts.empty()) throw InputError("besov_seminorm_q: shift grid is empty");
  const Domain<N> E = domain_for(f, P);
  ShiftEngine<N, D> eng(f, E, P.q);
  double best = 0.0;
  Vec<N> arg = grid.shifts.front();
  for (const auto& h : grid.shifts) {
    const double t = norm(h);
    if (!(t > 0.0)) throw InputError("besov_seminorm_q: shift grid must exclude 0");
    const double v = eng.difference(h) / std::pow(t, P.rq());
    if (v > best) {
      best = v;
      arg = h;
    }
  }
  FunctionalValue out;
  out.value = best;
  out.evaluations = grid.shifts.size();
  if (best > 0.0) {
    const auto [fine, err] = detail::shift_with_error(f, E, P.q, arg);
    (void)fine;
    out.error_estimate = err / std::pow(norm(arg), P.rq());
  }
  out.provenance = "besov_seminorm_q(field=" + f.describe() + "," + describe_params(P, E) + ",grid=" + grid.description +
                   ",argmax_h=" + detail::fmt_vec<N>(arg) + ",lower_bound)";
  return out;
}

template <int N, int D>
FunctionalValue besov_seminorm_q(const Field<N, D>& f, const FunctionalParams<N>& P) {
  return besov_seminorm_q(f, P, default_shift_grid(f));
}

/// int_E (1/eps^N) int_{E cap B_eps(x)} |u(x)-u(y)|^q / |x-y|^{rq} dy dx.
template <int N, int D>
FunctionalValue brq_double_integral(const Field<N, D>& f, const FunctionalParams<N>& P, double eps,
                                    const QuadBudget& budget) {
  P.validate();
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("brq_double_integral: eps must be positive");
  const Domain<N> E = domain_for(f, P);
  ShiftEngine<N, D> eng(f, E, P.q);
  const auto W = RadialWeight::power_law(P.rq(), std::pow(eps, -N), 0.0, eps, "eps^-N |z|^-rq");
  return detail::from_quad<N, D>(double_integral_singular(eng, W, budget),
                                 "brq_double_integral(field=" + f.describe() + "," + describe_params(P, E) +
                                     ",eps=" + detail::fmt(eps) + ")");
}

/// int_E chi_E(x + eps n) |u(x + eps n) - u(x)|^q / eps^{rq} dx.
template <int N, int D>
FunctionalValue directional_variation(const Field<N, D>& f, const FunctionalParams<N>& P,
                                      const std::type_identity_t<Vec<N>>& n, double eps) {
  P.validate();
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("directional_variation: eps must be positive");
  if (!all_finite(n)) throw InputError("directional_variation: direction must be finite");
  const Domain<N> E = domain_for(f, P);
  FunctionalValue out;
  out.provenance = "directional_variation(field=" + f.describe() + "," + describe_params(P, E) + ",n=" +
                   detail::fmt_vec<N>(n) + ",eps=" + detail::fmt(eps) + ")";
  if (norm(n) == 0.0) return out;
  const auto [v, err] = detail::shift_with_error(f, E, P.q, eps * n);
  const double s = std::pow(eps, P.rq());
  out.value = v / s;
  out.error_estimate = err / s;
  out.evaluations = 2;
  return out;
}

/// Unnormalized sphere integral of the directional variation over n.
template <int N, int D>
FunctionalValue spherical_variation(const Field<N, D>& f, const FunctionalParams<N>& P, double eps,
                                    const SphereRule& rule = SphereRule::for_dim(N, N == 2 ? 32 : 8)) {
  P.validate();
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("spherical_variation: eps must be positive");
  const Domain<N> E = domain_for(f, P);
  ShiftEngine<N, D> eng(f, E, P.q);
  const double s = std::pow(eps, P.rq());
  const QuadResult r = integrate_sphere<N>([&](const Vec<N>& n) { return eng.difference(eps * n) / s; }, rule);
  FunctionalValue out;
  out.value = r.value;
  out.evaluations = r.evaluations_used;
  // add the line-quadrature error at one representative direction
  const auto [v1, e1] = detail::shift_with_error(f, E, P.q, eps * unit_vector<N>(0));
  (void)v1;
  out.error_estimate = r.error_estimate + sphere_measure(N) * e1 / s;
  out.provenance = "spherical_variation(field=" + f.describe() + "," + describe_params(P, E) +
                   ",eps=" + detail::fmt(eps) + ",rule=" + rule.name() + ",unnormalized)";
  return out;
}

/// Kernel profile times |z|^{-rq} as a radial weight (every shipped kernel is
/// a single power-law piece).
inline RadialWeight kernel_weight(const KernelFamily& k, Scale eps, double rq) {
  const auto pieces = k.pieces(eps);
  const PowerPiece& p = pieces.front();
  const double lo = std::isfinite(p.log_a) ? std::exp(p.log_a) : 0.0;
  const double hi = std::exp(p.log_b);
  if (std::isfinite(p.log_a) && !(lo > 0.0))
    throw CapabilityError("besov_constant_at: kernel support lies below the double range (eps too small)");
  if (!std::isfinite(p.log_c) || std::abs(p.log_c) > 700.0)
    throw CapabilityError("besov_constant_at: kernel normalization not representable at this eps");
  return RadialWeight::power_law(rq - p.exponent, std::exp(p.log_c), lo, hi, k.name());
}

/// int_E int_E rho_eps(|x-y|) |u(x)-u(y)|^q / |x-y|^{rq}.
template <int N, int D>
FunctionalValue besov_constant_at(const Field<N, D>& f, const FunctionalParams<N>& P, const KernelFamily& k, Scale eps,
                                  const QuadBudget& budget) {
  P.validate();
  if (k.dim != N) throw InputError("besov_constant_at: kernel dimension does not match the field");
  const Domain<N> E = domain_for(f, P);
  ShiftEngine<N, D> eng(f, E, P.q);
  const RadialWeight W = kernel_weight(k, eps, P.rq());
  return detail::from_quad<N, D>(double_integral_singular(eng, W, budget),
                                 "besov_constant_at(field=" + f.describe() + "," + describe_params(P, E) +
                                     ",kernel=" + k.name() + ",eps=" + detail::fmt(eps.value()) + ")");
}
template <int N, int D>
FunctionalValue besov_constant_at(const Field<N, D>& f, const FunctionalParams<N>& P, const KernelFamily& k, double eps,
                                  const QuadBudget& budget) {
  return besov_constant_at(f, P, k, Scale::of(eps), budget);
}

/// (1/|ln eps|) [u * eta_(eps)]^q_{W^{r,q}(E)}, E fixed from the unmollified field.
template <int N, int D>
FunctionalValue gagliardo_constant_at(const Field<N, D>& f, const MollifierSpec<N>& m, const FunctionalParams<N>& P,
                                      double eps, const QuadBudget& budget) {
  P.validate();
  if (!(eps > 0.0 && eps < std::exp(-1.0))) throw InputError("gagliardo_constant_at: eps must lie in (0, 1/e)");
  FunctionalParams<N> Q = P;
  Q.E = domain_for(f, P);
  const Field<N, D> ue = mollify(f, m, eps, budget.threads);
  FunctionalValue v = gagliardo_seminorm_q(ue, Q, budget);
  const double L = -std::log(eps);
  v.value /= L;
  v.error_estimate /= L;
  v.provenance = "gagliardo_constant_at(field=" + f.describe() + ",eta=" + m.name() + "," + describe_params(P, *Q.E) +
                 ",eps=" + detail::fmt(eps) + ",evals=" + std::to_string(v.evaluations) + ")";
  return v;
}

/// int_E |u|^q.
template <int N, int D>
FunctionalValue lq_norm_q(const Field<N, D>& f, double q, const Domain<N>& E = Domain<N>::everywhere()) {
  ShiftEngine<N, D> eng(f, E, q);
  const double v = eng.magnitude();
  const double c = ShiftEngine<N, D>(f, E, q, detail::coarse_options<N>()).magnitude();
  FunctionalValue out;
  out.value = v;
  out.error_estimate = std::abs(v - c) + 1e-13 * std::abs(v);
  out.provenance = "lq_norm_q(field=" + f.describe() + ",q=" + detail::fmt(q) + ",E=" + E.describe() + ")";
  return out;
}

/// ||Du||: jump part for piecewise fields, int |grad u| otherwise.
template <int N, int D>
FunctionalValue total_variation(const Field<N, D>& f) {
  FunctionalValue out;
  if (f.template as<PiecewiseField<N, D>>()) {
    out.value = jump_total_variation(jump_set_of(f));
    out.provenance = "total_variation(field=" + f.describe() + ",jump_set)";
    return out;
  }
  const Box<N> vb = f.variation_box();
  if (vb.empty) {
    out.provenance = "total_variation(field=" + f.describe() + ",constant)";
    return out;
  }
  if (!vb.bounded()) throw CapabilityError("total_variation: needs a bounded support");
  auto integrate_at = [&](double h) {
    const GridSpec<N> g = GridSpec<N>::covering(vb.expanded(2 * h), h);
    if (g.cells() > kMaxGridCells) throw CapabilityError("total_variation: grid too large");
    double s = 0.0;
    double cell = 1.0;
    for (int i = 0; i < N; ++i) cell *= g.spacing[i];
    for (std::size_t k = 0; k < g.cells(); ++k) {
      const Vec<N> x = g.center_of(g.unflatten(k));
      std::array<Value<D>, N> grad{};
      for (int i = 0; i < N; ++i) {
        const Vec<N> e = (0.5 * h) * unit_vector<N>(i);
        grad[i] = (1.0 / h) * (f(x + e) - f(x - e));
      }
      double g2 = 0.0;
      for (int i = 0; i < N; ++i)
        for (int c = 0; c < D; ++c) g2 += grad[i][c] * grad[i][c];
      s += std::sqrt(g2) * cell;
    }
    return s;
  };
  const double h = f.feature_scale() / (N == 3 ? 8.0 : 32.0);
  const double fine = integrate_at(h), coarse = integrate_at(2 * h);
  out.value = fine;
  out.error_estimate = std::abs(fine - coarse);
  out.provenance = "total_variation(field=" + f.describe() + ",grad_quadrature,h=" + detail::fmt(h) + ")";
  return out;
}

struct CheckPair {
  double lhs = 0, rhs = 0;
  double lhs_error = 0, rhs_error = 0;
  double tolerance = 0;
  bool pass = false;
  std::string provenance;
};

/// Smoothing cannot increase a shift integral beyond ||eta||_1^q times the
/// unsmoothed one.
template <int N, int D>
CheckPair mollifier_bound_check(const Field<N, D>& f, const MollifierSpec<N>& m, double eps, double q,
                                const std::type_identity_t<Vec<N>>& h, int threads = 1) {
  if (!(m.abs_mass() > 0.0) || !std::isfinite(m.abs_mass())) throw InputError("mollifier_bound_check: ||eta||_1 must be finite");
  const Domain<N> R = Domain<N>::everywhere();
  const Field<N, D> ue = mollify(f, m, eps, threads);
  CheckPair c;
  std::tie(c.lhs, c.lhs_error) = detail::shift_with_error(ue, R, q, h);
  double raw, raw_err;
  std::tie(raw, raw_err) = detail::shift_with_error(f, R, q, h);
  const double a = std::pow(m.abs_mass(), q);
  c.rhs = a * raw;
  c.rhs_error = a * raw_err;
  c.tolerance = 3.0 * (c.lhs_error + c.rhs_error) + 1e-12 * std::max(1.0, c.rhs);
  c.pass = c.lhs <= c.rhs + c.tolerance;
  c.provenance = "mollifier_bound_check(field=" + f.describe() + ",eta=" + m.name() + ",eps=" + detail::fmt(eps) +
                 ",q=" + detail::fmt(q) + ",h=" + detail::fmt_vec<N>(h) + ")";
  return c;
}

/// Right-hand sides of the three-region estimate for [u_eps]^q.
struct SplitBounds {
  double tail = 0, annulus = 0, core = 0;
  double core_alt = 0;  // alternative core bound for beta = eps (may be infinite)
  double lq_norm_q = 0, besov_q = 0;
  std::string provenance;
};

template <int N, int D>
SplitBounds gagliardo_split_bounds(const Field<N, D>& f, const MollifierSpec<N>& m, const FunctionalParams<N>& P,
                                   double eps, double beta, double gamma) {
  P.validate();
  if (!(beta > 0.0) || !(gamma > beta)) throw InputError("gagliardo_split_bounds: need 0 < beta < gamma");
  if (!(eps > 0.0)) throw InputError("gagliardo_split_bounds: eps must be positive");
  const double q = P.q, rq = P.rq();
  const double S = sphere_measure(N);
  SplitBounds b;
  b.lq_norm_q = lq_norm_q(f, q).value;
  FunctionalParams<N> whole = P;
  whole.E = Domain<N>::everywhere();
  b.besov_q = besov_seminorm_q(f, whole).value;
  const double eta1 = std::pow(m.abs_mass(), q);
  const double g = m.grad_mass();
  b.tail = eta1 * std::pow(2.0, q) * b.lq_norm_q * S / (rq * std::pow(gamma, rq));
  b.annulus = eta1 * b.besov_q * S * (std::log(gamma) - std::log(beta));
  b.core = std::pow(g, q) * std::pow(2.0, q) * b.lq_norm_q * S / (q - rq) * std::pow(beta, q - rq) / std::pow(eps, q);
  b.core_alt = std::pow(g, q - 1.0) * b.besov_q * m.weighted_grad(rq) * S / (q - rq);
  b.provenance = "gagliardo_split_bounds(field=" + f.describe() + ",eta=" + m.name() + ",r=" + detail::fmt(P.r) +
                 ",q=" + detail::fmt(q) + ",eps=" + detail::fmt(eps) + ",beta=" + detail::fmt(beta) +
                 ",gamma=" + detail::fmt(gamma) + ")";
  return b;
}

/// The three region integrals of g^eps measured over the whole space.
struct SplitMeasured {
  FunctionalValue tail, annulus, core;
};

template <int N, int D>
SplitMeasured gagliardo_split_measured(const Field<N, D>& f, const MollifierSpec<N>& m, const FunctionalParams<N>& P,
                                       double eps, double beta, double gamma, const QuadBudget& budget) {
  P.validate();
  if (!(beta > 0.0) || !(gamma > beta)) throw InputError("gagliardo_split_measured: need 0 < beta < gamma");
  const Field<N, D> ue = mollify(f, m, eps, budget.threads);
  ShiftEngine<N, D> eng(ue, Domain<N>::everywhere(), P.q);
  const double s = N + P.rq();
  const std::string base = "gagliardo_split_measured(field=" + f.describe() + ",eta=" + m.name() +
                           ",eps=" + detail::fmt(eps) + ",beta=" + detail::fmt(beta) + ",gamma=" + detail::fmt(gamma);
  SplitMeasured out;
  out.tail = detail::from_quad<N, D>(
      double_integral_singular(eng, RadialWeight::power_law(s, 1.0, gamma, kInf), budget.with_seed(derive_seed(budget.rng_seed, 1))),
      base + ",region=tail)");
  out.annulus = detail::from_quad<N, D>(
      double_integral_singular(eng, RadialWeight::power_law(s, 1.0, beta, gamma), budget.with_seed(derive_seed(budget.rng_seed, 2))),
      base + ",region=annulus)");
  out.core = detail::from_quad<N, D>(
      double_integral_singular(eng, RadialWeight::power_law(s, 1.0, 0.0, beta), budget.with_seed(derive_seed(budget.rng_seed, 3))),
      base + ",region=core)");
  return out;
}

/// Uniform bound on sup over eps in (0,1/e) of the Gagliardo constant.
template <int N, int D>
double gagliardo_uniform_bound(const Field<N, D>& f, const MollifierSpec<N>& m, const FunctionalParams<N>& P) {
  P.validate();
  const double q = P.q, rq = P.rq();
  const double S = sphere_measure(N);
  const double lq = lq_norm_q(f, q).value;
  FunctionalParams<N> whole = P;
  whole.E = Domain<N>::everywhere();
  const double bq = besov_seminorm_q(f, whole).value;
  const double eta1 = std::pow(m.abs_mass(), q);
  return eta1 * std::pow(2.0, q) * lq * S / rq + eta1 * bq * S * q / (q - rq) +
         std::pow(m.grad_mass(), q) * std::pow(2.0, q) * lq * S / (q - rq);
}

/// lhs = [u]^q_{B^{1/q}_{q}}, rhs = ||Du||^alpha ([u]^p_{B^{1/p}_{p}})^{1-alpha},
/// alpha = (p-q)/(p-1).
template <int N, int D>
CheckPair interpolation_check(const Field<N, D>& f, double q, double p, double tol = 1e-6) {
  if (!(q > 1.0)) throw InputError("interpolation_check: q must exceed 1");
  if (!(p > q)) throw InputError("interpolation_check: need q < p");
  FunctionalParams<N> Pq{1.0 / q, q, std::nullopt, std::nullopt};
  FunctionalParams<N> Pp{1.0 / p, p, std::nullopt, std::nullopt};
  const auto grid = default_shift_grid(f);
  const FunctionalValue l = besov_seminorm_q(f, Pq, grid);
  const FunctionalValue bp = besov_seminorm_q(f, Pp, grid);
  const FunctionalValue tv = total_variation(f);
  const double alpha = (p - q) / (p - 1.0);
  CheckPair c;
  c.lhs = l.value;
  c.lhs_error = l.error_estimate;
  c.rhs = std::pow(tv.value, alpha) * std::pow(bp.value, 1.0 - alpha);
  c.rhs_error = c.rhs * (alpha * (tv.value > 0 ? tv.error_estimate / tv.value : 0.0) +
                         (1.0 - alpha) * (bp.value > 0 ? bp.error_estimate / bp.value : 0.0));
  c.tolerance = tol * std::max(1.0, c.rhs) + 3.0 * (c.lhs_error + c.rhs_error);
  c.pass = c.lhs <= c.rhs + c.tolerance;
  c.provenance = "interpolation_check(field=" + f.describe() + ",q=" + detail::fmt(q) + ",p=" + detail::fmt(p) +
                 ",alpha=" + detail::fmt(alpha) + ")";
  return c;
}

/// lhs = int |u(x+h)-u(x)| / |h| over the whole space (the integrand lives on
/// the support box and its shift), rhs = ||Du||.
template <int N, int D>
CheckPair variation_inequality_check(const Field<N, D>& f, const std::type_identity_t<Vec<N>>& h, double tol = 1e-9) {
  const double t = norm(h);
  if (!(t > 0.0)) throw InputError("variation_inequality_check: h must be nonzero");
  const auto [v, err] = detail::shift_with_error(f, Domain<N>::everywhere(), 1.0, h);
  const FunctionalValue tv = total_variation(f);
  CheckPair c;
  c.lhs = v / t;
  c.lhs_error = err / t;
  c.rhs = tv.value;
  c.rhs_error = tv.error_estimate;
  c.tolerance = tol * std::max(1.0, c.rhs) + 3.0 * (c.lhs_error + c.rhs_error);
  c.pass = c.lhs <= c.rhs + c.tolerance;
  c.provenance = "variation_inequality_check(field=" + f.describe() + ",h=" + detail::fmt_vec<N>(h) + ")";
  return c;
}

}  // namespace besov
