#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "besovlab/core.hpp"

namespace besov {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo;
  double hi;
};

/// Sort and merge overlapping / touching intervals; drops empty ones.
inline std::vector<Interval> normalize(std::vector<Interval> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](const Interval& i) { return !(i.hi > i.lo); }), v.end());
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& i : v) {
    if (!out.empty() && i.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, i.hi);
    else
      out.push_back(i);
  }
  return out;
}

inline std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (hi > lo) out.push_back({lo, hi});
    if (a[i].hi < b[j].hi)
      ++i;
    else
      ++j;
  }
  return out;
}

inline std::vector<Interval> complement(const std::vector<Interval>& a) {
  std::vector<Interval> out;
  double cur = -kInf;
  for (const auto& i : a) {
    if (i.lo > cur) out.push_back({cur, i.lo});
    cur = i.hi;
  }
  if (cur < kInf) out.push_back({cur, kInf});
  return out;
}

inline std::vector<Interval> shifted(std::vector<Interval> a, double t) {
  for (auto& i : a) {
    i.lo += t;
    i.hi += t;
  }
  return a;
}

/// Axis-aligned box, possibly empty or unbounded.
template <int N>
struct Box {
  Vec<N> lo{};
  Vec<N> hi{};
  bool empty = true;

  static Box make(const Vec<N>& lo, const Vec<N>& hi) { return Box{lo, hi, false}; }
  static Box everything() {
    Box b;
    b.empty = false;
    b.lo.fill(-kInf);
    b.hi.fill(kInf);
    return b;
  }
  bool bounded() const {
    if (empty) return true;
    for (int i = 0; i < N; ++i)
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
    return true;
  }
  Box united(const Box& o) const {
    if (empty) return o;
    if (o.empty) return *this;
    Box r = *this;
    for (int i = 0; i < N; ++i) {
      r.lo[i] = std::min(lo[i], o.lo[i]);
      r.hi[i] = std::max(hi[i], o.hi[i]);
    }
    return r;
  }
  Box expanded(double m) const {
    if (empty) return *this;
    Box r = *this;
    for (int i = 0; i < N; ++i) {
      r.lo[i] -= m;
      r.hi[i] += m;
    }
    return r;
  }
  Vec<N> center() const { return 0.5 * (lo + hi); }
  double diameter() const {
    if (empty) return 0.0;
    return norm(hi - lo);
  }
  std::vector<Vec<N>> corners() const {
    std::vector<Vec<N>> c;
    if (empty) return c;
    for (int m = 0; m < (1 << N); ++m) {
      Vec<N> v;
      for (int i = 0; i < N; ++i) v[i] = (m >> i) & 1 ? hi[i] : lo[i];
      c.push_back(v);
    }
    return c;
  }
  /// Parameter interval of the line p + tau d inside the closed box.
  Interval clip_line(const Vec<N>& p, const Vec<N>& d) const {
    if (empty) return {0.0, 0.0};
    double a = -kInf, b = kInf;
    for (int i = 0; i < N; ++i) {
      if (d[i] == 0.0) {
        if (p[i] < lo[i] || p[i] > hi[i]) return {0.0, 0.0};
        continue;
      }
      double t0 = (lo[i] - p[i]) / d[i];
      double t1 = (hi[i] - p[i]) / d[i];
      if (t0 > t1) std::swap(t0, t1);
      a = std::max(a, t0);
      b = std::min(b, t1);
    }
    if (!(b > a)) return {0.0, 0.0};
    return {a, b};
  }
};

/// Geometric landmarks used to place quadrature breakpoints transversally to
/// slicing lines: spheres (center, radius) and isolated points (corners).
template <int N>
struct Features {
  std::vector<std::pair<Vec<N>, double>> spheres;
  std::vector<Vec<N>> points;
  double panel_hint = kInf;  // uniform panel width for fields with dense structure

  void append(const Features& o) {
    spheres.insert(spheres.end(), o.spheres.begin(), o.spheres.end());
    points.insert(points.end(), o.points.begin(), o.points.end());
    panel_hint = std::min(panel_hint, o.panel_hint);
  }
};

enum class RegionKind { Box, Ball, HalfSpace, Complement, Union };

/// Whitelisted geometry with exact membership and exact line restriction.
template <int N>
struct Region {
  RegionKind kind = RegionKind::Box;
  Vec<N> a{};        // box lo / ball center / half-space normal
  Vec<N> b{};        // box hi
  double scalar = 0; // ball radius / half-space offset
  std::vector<Region> children;

  static Region box(const Vec<N>& lo, const Vec<N>& hi) {
    for (int i = 0; i < N; ++i)
      if (!(hi[i] > lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
        throw InputError("box: need finite lo < hi on every axis");
    Region r;
    r.kind = RegionKind::Box;
    r.a = lo;
    r.b = hi;
    return r;
  }
  static Region interval(double lo, double hi) {
    static_assert(N == 1, "interval is one-dimensional");
    return box(Vec<N>{lo}, Vec<N>{hi});
  }
  static Region ball(const Vec<N>& c, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius) || !all_finite(c)) throw InputError("ball: radius must be positive");
    Region r;
    r.kind = RegionKind::Ball;
    r.a = c;
    r.scalar = radius;
    return r;
  }
  /// {x : n.x >= offset}
  static Region half_space(Vec<N> n, double offset) {
    const double len = norm(n);
    if (!(len > 0.0)) throw InputError("half-space: normal must be nonzero");
    Region r;
    r.kind = RegionKind::HalfSpace;
    r.a = (1.0 / len) * n;
    r.scalar = offset / len;
    return r;
  }
  static Region complement_of(const Region& inner) {
    Region r;
    r.kind = RegionKind::Complement;
    r.children = {inner};
    return r;
  }
  static Region union_of(std::vector<Region> parts) {
    if (parts.empty()) throw InputError("union: needs at least one part");
    Region r;
    r.kind = RegionKind::Union;
    r.children = std::move(parts);
    return r;
  }

  bool contains(const Vec<N>& x) const {
    switch (kind) {
      case RegionKind::Box:
        for (int i = 0; i < N; ++i)
          if (x[i] < a[i] || x[i] >= b[i]) return false;
        return true;
      case RegionKind::Ball: {
        const Vec<N> d = x - a;
        return dot(d, d) <= scalar * scalar;
      }
      case RegionKind::HalfSpace:
        return dot(a, x) >= scalar;
      case RegionKind::Complement:
        return !children[0].contains(x);
      case RegionKind::Union:
        for (const auto& c : children)
          if (c.contains(x)) return true;
        return false;
    }
    return false;
  }

  /// Sorted disjoint parameter intervals of {tau : p + tau d in region}.
  std::vector<Interval> line_intervals(const Vec<N>& p, const Vec<N>& d) const {
    switch (kind) {
      case RegionKind::Box: {
        const auto iv = Box<N>::make(a, b).clip_line(p, d);
        if (iv.hi > iv.lo) return {iv};
        return {};
      }
      case RegionKind::Ball: {
        const Vec<N> w = p - a;
        const double dd = dot(d, d);
        const double bb = dot(w, d);
        const double cc = dot(w, w) - scalar * scalar;
        const double disc = bb * bb - dd * cc;
        if (!(disc > 0.0)) return {};
        const double sq = std::sqrt(disc);
        // stable roots
        const double qq = -(bb + std::copysign(sq, bb));
        double t0, t1;
        if (qq != 0.0) {
          t0 = qq / dd;
          t1 = cc / qq;
        } else {
          t0 = -sq / dd;
          t1 = sq / dd;
        }
        if (t0 > t1) std::swap(t0, t1);
        return {{t0, t1}};
      }
      case RegionKind::HalfSpace: {
        const double nd = dot(a, d);
        const double np = dot(a, p);
        if (nd == 0.0) return np >= scalar ? std::vector<Interval>{{-kInf, kInf}} : std::vector<Interval>{};
        const double t = (scalar - np) / nd;
        return nd > 0 ? std::vector<Interval>{{t, kInf}} : std::vector<Interval>{{-kInf, t}};
      }
      case RegionKind::Complement:
        return complement(children[0].line_intervals(p, d));
      case RegionKind::Union: {
        std::vector<Interval> all;
        for (const auto& c : children) {
          auto v = c.line_intervals(p, d);
          all.insert(all.end(), v.begin(), v.end());
        }
        return normalize(std::move(all));
      }
    }
    return {};
  }

  Box<N> bounding_box() const {
    switch (kind) {
      case RegionKind::Box:
        return Box<N>::make(a, b);
      case RegionKind::Ball: {
        Vec<N> lo = a, hi = a;
        for (int i = 0; i < N; ++i) {
          lo[i] -= scalar;
          hi[i] += scalar;
        }
        return Box<N>::make(lo, hi);
      }
      case RegionKind::HalfSpace:
      case RegionKind::Complement:
        return Box<N>::everything();
      case RegionKind::Union: {
        Box<N> r;
        for (const auto& c : children) r = r.united(c.bounding_box());
        return r;
      }
    }
    return Box<N>::everything();
  }

  bool bounded() const { return bounding_box().bounded(); }

  void features(Features<N>& out) const {
    switch (kind) {
      case RegionKind::Box:
        for (const auto& c : Box<N>::make(a, b).corners()) out.points.push_back(c);
        break;
      case RegionKind::Ball:
        out.spheres.push_back({a, scalar});
        break;
      case RegionKind::HalfSpace:
        break;
      case RegionKind::Complement:
      case RegionKind::Union:
        for (const auto& c : children) c.features(out);
        break;
    }
  }

  /// Smallest characteristic length (box side / ball radius); inf if none.
  double feature_scale() const {
    switch (kind) {
      case RegionKind::Box: {
        double s = kInf;
        for (int i = 0; i < N; ++i) s = std::min(s, b[i] - a[i]);
        return s;
      }
      case RegionKind::Ball:
        return scalar;
      case RegionKind::HalfSpace:
        return kInf;
      case RegionKind::Complement:
      case RegionKind::Union: {
        double s = kInf;
        for (const auto& c : children) s = std::min(s, c.feature_scale());
        return s;
      }
    }
    return kInf;
  }

  std::string describe() const {
    auto vec = [](const Vec<N>& v) {
      std::string s = "(";
      for (int i = 0; i < N; ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s + ")";
    };
    switch (kind) {
      case RegionKind::Box: return "box" + vec(a) + "-" + vec(b);
      case RegionKind::Ball: return "ball" + vec(a) + "r" + std::to_string(scalar);
      case RegionKind::HalfSpace: return "halfspace" + vec(a) + ">=" + std::to_string(scalar);
      case RegionKind::Complement: return "not(" + children[0].describe() + ")";
      case RegionKind::Union: {
        std::string s = "union(";
        for (std::size_t i = 0; i < children.size(); ++i) s += (i ? "," : "") + children[i].describe();
        return s + ")";
      }
    }
    return "?";
  }
};

/// Integration domain E: either all of R^N or a region.
template <int N>
struct Domain {
  bool whole = true;
  Region<N> region;

  static Domain everywhere() { return Domain{}; }
  static Domain of(Region<N> r) { return Domain{false, std::move(r)}; }

  bool contains(const Vec<N>& x) const { return whole || region.contains(x); }
  std::vector<Interval> line_intervals(const Vec<N>& p, const Vec<N>& d) const {
    if (whole) return {{-kInf, kInf}};
    return region.line_intervals(p, d);
  }
  Box<N> bounding_box() const { return whole ? Box<N>::everything() : region.bounding_box(); }
  bool bounded() const { return !whole && region.bounded(); }
  void features(Features<N>& out) const {
    if (!whole) region.features(out);
  }
  std::string describe() const { return whole ? std::string("R^") + std::to_string(N) : region.describe(); }
};

}  // namespace besov
