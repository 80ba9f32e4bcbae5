#pragma once

#include <cmath>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "besovlab/core.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/region.hpp"

namespace besov {

/// int_{S^{N-1}} |z_1|^q dH^{N-1}.
inline double sphere_moment(int dim, double q) {
  if (dim < 1 || dim > 3) throw CapabilityError("sphere_moment: dimension must be 1..3");
  if (!(q > -1.0)) throw InputError("sphere_moment: q must exceed -1");
  if (dim == 1) return 2.0;
  return 2.0 * std::pow(kPi, 0.5 * (dim - 1)) * std::exp(std::lgamma(0.5 * (q + 1)) - std::lgamma(0.5 * (dim + q)));
}

/// int_{S^{N-1}} |z_1| dH^{N-1}: 2, 4, 2 pi.
inline double moment1(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 4.0;
    case 3: return 2.0 * kPi;
    default: throw CapabilityError("moment1: dimension must be 1..3");
  }
}

struct ConstantsTable {
  int dim = 1;
  double sphere_measure = 0;
  double moment1 = 0;            // unnormalized
  double moment1_averaged = 0;   // moment1 / sphere_measure
  double C_N = 0;                // moment1 / N
  double nc_integral = 0;        // int_{R^{N-1}} 2 (1+|v|^2)^{-(N+1)/2} dv
  double nc_residual = 0;        // |nc_integral - moment1|, N >= 2
  double nc_error = 0;
  struct Moment {
    double q;
    double moment;  // int |z_1|^q dH
    double hatC;    // averaged
  };
  std::vector<Moment> moments;
};

inline ConstantsTable dimensional_constants(int dim, const std::vector<double>& q_list = {1.0, 2.0}) {
  if (dim < 1 || dim > 3) throw CapabilityError("dimensional_constants: N must be 1, 2 or 3");
  ConstantsTable t;
  t.dim = dim;
  t.sphere_measure = sphere_measure(dim);
  t.moment1 = moment1(dim);
  t.moment1_averaged = t.moment1 / t.sphere_measure;
  t.C_N = t.moment1 / dim;
  for (double q : q_list) {
    const double m = sphere_moment(dim, q);
    t.moments.push_back({q, m, m / t.sphere_measure});
  }
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  if (dim == 2) {
    double err = 0;
    t.nc_integral = GK::integrate([](double v) { return 2.0 * std::pow(1.0 + v * v, -1.5); },
                                  -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15,
                                  1e-14, &err);
    t.nc_error = err;
  } else if (dim == 3) {
    // polar coordinates in R^2
    double err = 0;
    const double radial = GK::integrate([](double p) { return 2.0 * p / ((1.0 + p * p) * (1.0 + p * p)); }, 0.0,
                                        std::numeric_limits<double>::infinity(), 15, 1e-14, &err);
    t.nc_integral = 2.0 * kPi * radial;
    t.nc_error = 2.0 * kPi * err;
  }
  if (dim >= 2) t.nc_residual = std::abs(t.nc_integral - t.moment1);
  return t;
}

namespace detail {

/// 1 if the patch lies in S, 0 if it misses S (up to H^{N-1}-null sets);
/// nullopt when the overlap is partial or undecidable in closed form.
template <int N, int D>
std::optional<double> patch_fraction(const JumpPatch<N, D>& p, const Region<N>& s) {
  auto box_of_patch = [&]() {
    if (p.kind == PatchKind::Sphere) return Region<N>::ball(p.anchor, p.radius).bounding_box();
    Box<N> b;
    b.lo = p.anchor;
    b.hi = p.upper;
    b.empty = false;
    return b;
  };
  auto corners = [&]() { return box_of_patch().corners(); };
  switch (s.kind) {
    case RegionKind::Box: {
      const Box<N> pb = box_of_patch();
      bool inside = true, outside = false;
      for (int i = 0; i < N; ++i) {
        inside = inside && pb.lo[i] >= s.a[i] && pb.hi[i] <= s.b[i];
        outside = outside || pb.hi[i] <= s.a[i] || pb.lo[i] >= s.b[i];
      }
      if (p.kind == PatchKind::Point) return s.contains(p.anchor) ? 1.0 : 0.0;
      if (inside) return 1.0;
      if (outside) return 0.0;
      return std::nullopt;
    }
    case RegionKind::Ball: {
      const double R = s.scalar;
      if (p.kind == PatchKind::Point) return s.contains(p.anchor) ? 1.0 : 0.0;
      if (p.kind == PatchKind::Sphere) {
        const double d = norm(p.anchor - s.a);
        if (d + p.radius <= R) return 1.0;
        if (d >= p.radius + R || p.radius >= d + R) return 0.0;
        return std::nullopt;
      }
      bool all_in = true;
      for (const auto& c : corners()) all_in = all_in && norm(c - s.a) <= R;
      if (all_in) return 1.0;
      // distance from the center to the face box
      const Box<N> pb = box_of_patch();
      double d2 = 0;
      for (int i = 0; i < N; ++i) {
        const double c = std::min(std::max(s.a[i], pb.lo[i]), pb.hi[i]);
        d2 += (c - s.a[i]) * (c - s.a[i]);
      }
      if (std::sqrt(d2) >= R) return 0.0;
      return std::nullopt;
    }
    case RegionKind::HalfSpace: {
      if (p.kind == PatchKind::Point) return s.contains(p.anchor) ? 1.0 : 0.0;
      if (p.kind == PatchKind::Sphere) {
        const double h = dot(s.a, p.anchor) - s.scalar;
        if (h >= p.radius) return 1.0;
        if (h <= -p.radius) return 0.0;
        return std::nullopt;
      }
      bool all_in = true, all_out = true;
      for (const auto& c : corners()) {
        const double h = dot(s.a, c) - s.scalar;
        all_in = all_in && h >= 0;
        all_out = all_out && h <= 0;
      }
      if (all_in) return 1.0;
      if (all_out) return 0.0;
      return std::nullopt;
    }
    case RegionKind::Complement: {
      const auto f = patch_fraction(p, s.children.front());
      if (!f) return std::nullopt;
      return 1.0 - *f;
    }
    case RegionKind::Union: {
      bool all_zero = true;
      for (const auto& c : s.children) {
        const auto f = patch_fraction(p, c);
        if (!f) return std::nullopt;
        if (*f == 1.0) return 1.0;
        all_zero = all_zero && *f == 0.0;
      }
      if (all_zero) return 0.0;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

template <int N, int D>
double patch_weight(const JumpPatch<N, D>& p, const Domain<N>& s) {
  if (s.whole) return 1.0;
  const auto f = patch_fraction(p, s.region);
  if (!f)
    throw CapabilityError("jump_variation: clipping a " + std::string(p.kind == PatchKind::Sphere ? "sphere" : "flat") +
                          " patch by " + s.describe() + " is not supported");
  return *f;
}

}  // namespace detail

/// sum over patches of int_{patch cap S} |u+ - u-|^q dH^{N-1}.
template <int N, int D>
double jump_variation(const JumpSetSpec<N, D>& js, double q, const Domain<N>& s = Domain<N>::everywhere()) {
  if (!std::isfinite(q)) throw InputError("jump_variation: q must be finite");
  double v = 0.0;
  for (const auto& p : js.patches) {
    const double w = detail::patch_weight(p, s);
    if (w == 0.0) continue;
    v += w * diff_pow<D>(p.trace_plus, p.trace_minus, q) * p.measure;
  }
  return v;
}

/// sum over patches of int |u+ - u-|^q |nu . n| dH^{N-1}.
template <int N, int D>
double directional_jump_variation(const JumpSetSpec<N, D>& js, double q, const std::type_identity_t<Vec<N>>& n,
                                  const Domain<N>& s = Domain<N>::everywhere()) {
  if (!std::isfinite(q) || !all_finite(n)) throw InputError("directional_jump_variation: arguments must be finite");
  double v = 0.0;
  for (const auto& p : js.patches) {
    const double w = detail::patch_weight(p, s);
    if (w == 0.0) continue;
    const double a = diff_pow<D>(p.trace_plus, p.trace_minus, q);
    switch (p.kind) {
      case PatchKind::Point:
        v += w * a * std::abs(n[0] * p.normal[0]);
        break;
      case PatchKind::Face:
        v += w * a * std::abs(dot(n, p.normal)) * p.measure;
        break;
      case PatchKind::Sphere:
        // int_{|x-c|=R} |nu . n| = R^{N-1} |n| int_S |z_1|
        v += w * a * std::pow(p.radius, N - 1) * moment1(N) * norm(n);
        break;
    }
  }
  return v;
}

/// ||Du|| of a piecewise-constant field: sum |u+ - u-| measure.
template <int N, int D>
double jump_total_variation(const JumpSetSpec<N, D>& js) {
  double v = 0.0;
  for (const auto& p : js.patches) v += p.jump_size() * p.measure;
  return v;
}

}  // namespace besov
