#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/quadrature.hpp"
#include "besovlab/region.hpp"

namespace besov {

struct ShiftOptions {
  int line_max_panels = 64;       // Gauss panels per non-flat line piece
  int transversal_min_panels = 4;
  int transversal_max_panels = 24;
  int angular_nodes = 32;          // N = 3 polar transversal grid
};

/// Deterministic evaluation of
///   F_E(z) = int chi_E(x) chi_E(x+z) |u(x+z) - u(x)|^q dx
/// and of int_E |u - c|^q, by slicing R^N into lines parallel to z. Along each
/// line the integrand is split at the field's breaks (and their shifts); flat
/// pieces are exact, the rest use composite Gauss-Legendre.
template <int N, int D>
class ShiftEngine {
 public:
  ShiftEngine(Field<N, D> u, Domain<N> E, double q, ShiftOptions opt = {})
      : u_(std::move(u)), E_(std::move(E)), q_(q), opt_(opt) {
    if (!(q > 0.0) || !std::isfinite(q)) throw InputError("shift integral: q must be positive");
    vb_ = u_.variation_box();
    bg_ = u_.background();
    bg_zero_ = std::all_of(bg_.begin(), bg_.end(), [](double v) { return v == 0.0; });
    scale_ = u_.feature_scale();
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) scale_ = 1.0;
    u_.impl().features(feat_);
    E_.features(feat_);
  }

  const Field<N, D>& field() const { return u_; }
  const Domain<N>& domain() const { return E_; }
  double q() const { return q_; }

  /// F_E(z).
  double difference(const Vec<N>& z) const {
    if (!all_finite(z)) throw InputError("shift: non-finite shift");
    const double t = norm(z);
    if (t == 0.0 || vb_.empty) return 0.0;
    const Vec<N> d = (1.0 / t) * z;
    return sweep(d, [&](const Vec<N>& p) { return line(p, d, t, true, false); }, true);
  }

  /// int_E |u|^q (subtract_background = false) or int_E |u - background|^q.
  double magnitude(bool subtract_background = false) const {
    const bool zero_bg = bg_zero_ || subtract_background;
    if (vb_.empty && zero_bg) return 0.0;
    const Vec<N> d = unit_vector<N>(0);
    return sweep(d, [&](const Vec<N>& p) { return line(p, d, 0.0, false, subtract_background); }, zero_bg);
  }

 private:
  double integrand(const Vec<N>& x, const Vec<N>& d, double t, bool diff, bool sub_bg) const {
    if (diff) return diff_pow<D>(u_(x + t * d), u_(x), q_);
    if (sub_bg) return diff_pow<D>(u_(x), bg_, q_);
    return abs_pow<D>(u_(x), q_);
  }

  double line(const Vec<N>& p, const Vec<N>& d, double t, bool diff, bool sub_bg) const {
    std::vector<Interval> A = E_.line_intervals(p, d);
    if (diff) A = intersect(A, shifted(A, -t));
    if (A.empty()) return 0.0;

    const bool zero_outside = diff || bg_zero_ || sub_bg;
    Interval range{-kInf, kInf};
    if (zero_outside) {
      if (vb_.empty) return 0.0;
      const Interval iv = vb_.clip_line(p, d);
      if (!(iv.hi > iv.lo)) {
        // vb may be degenerate along this line only if the line misses it
        return 0.0;
      }
      range = diff ? Interval{iv.lo - t, iv.hi} : iv;
    }
    A = intersect(A, {range});
    if (A.empty()) return 0.0;
    if (!std::isfinite(A.front().lo) || !std::isfinite(A.back().hi))
      throw CapabilityError("shift integral: unbounded integration range (bound E or the field support)");

    std::vector<double> br;
    u_.impl().line_breaks(p, d, br);
    if (diff) {
      const std::size_t n = br.size();
      for (std::size_t i = 0; i < n; ++i) br.push_back(br[i] - t);
    }
    std::sort(br.begin(), br.end());

    const auto& g = gauss_legendre<8>();
    double total = 0.0;
    std::vector<double> pts;
    for (const auto& iv : A) {
      pts.clear();
      pts.push_back(iv.lo);
      for (auto it = std::upper_bound(br.begin(), br.end(), iv.lo); it != br.end() && *it < iv.hi; ++it)
        if (*it > pts.back()) pts.push_back(*it);
      pts.push_back(iv.hi);
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k], b = pts[k + 1];
        const double len = b - a;
        if (!(len > 0.0)) continue;
        const double mid = 0.5 * (a + b);
        const Vec<N> xm = p + mid * d;
        const bool flat = u_.impl().flat_piece(xm) && (!diff || u_.impl().flat_piece(xm + t * d));
        if (flat) {
          total += len * integrand(xm, d, t, diff, sub_bg);
          continue;
        }
        const int panels = std::clamp(static_cast<int>(std::ceil(len / scale_)), 1, opt_.line_max_panels);
        const double w = len / panels;
        for (int pn = 0; pn < panels; ++pn) {
          const double c = a + (pn + 0.5) * w;
          double s = 0.0;
          for (std::size_t i = 0; i < g.nodes.size(); ++i)
            s += g.weights[i] * integrand(p + (c + 0.5 * w * g.nodes[i]) * d, d, t, diff, sub_bg);
          total += 0.5 * w * s;
        }
      }
    }
    return total;
  }

  /// Box on which lines must be integrated (variation box intersected with E).
  Box<N> slab_box(bool zero_outside) const {
    Box<N> b = zero_outside ? vb_ : Box<N>::everything();
    if (E_.bounded()) {
      const Box<N> eb = E_.bounding_box();
      if (b.empty) return b;
      for (int i = 0; i < N; ++i) {
        b.lo[i] = std::max(b.lo[i], eb.lo[i]);
        b.hi[i] = std::min(b.hi[i], eb.hi[i]);
        if (!(b.hi[i] > b.lo[i])) return Box<N>{};
      }
    }
    if (!b.bounded()) throw CapabilityError("shift integral: unbounded integration range (bound E or the field support)");
    return b;
  }

  // Composite Gauss-Legendre in v over [-1,1] with s = c + h sin(pi v / 2):
  // clusters nodes at both ends, where line lengths behave like square roots.
  template <typename F>
  double mapped_interval(F&& f, double a, double b, int panels) const {
    const auto& g = gauss_legendre<8>();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double w = 2.0 / panels;
    double total = 0.0;
    for (int pn = 0; pn < panels; ++pn) {
      const double vm = -1.0 + (pn + 0.5) * w;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double v = vm + 0.5 * w * g.nodes[i];
        const double s = c + h * std::sin(0.5 * kPi * v);
        const double jac = h * 0.5 * kPi * std::cos(0.5 * kPi * v);
        total += 0.5 * w * g.weights[i] * jac * f(s);
      }
    }
    return total;
  }

  int panels_for(double width) const {
    const double sc = std::min(scale_, feat_.panel_hint);
    const int p = static_cast<int>(std::ceil(2.0 * width / sc));
    return std::clamp(p, opt_.transversal_min_panels, opt_.transversal_max_panels);
  }

  template <typename LineFn>
  double sweep(const Vec<N>& d, LineFn&& line_at, bool zero_outside) const {
    if constexpr (N == 1) {
      (void)zero_outside;
      return line_at(Vec<1>{0.0});
    } else if constexpr (N == 2) {
      const Vec<2> e{-d[1], d[0]};
      const Box<2> b = slab_box(zero_outside);
      if (b.empty) return 0.0;
      double smin = kInf, smax = -kInf;
      for (const auto& c : b.corners()) {
        smin = std::min(smin, dot(c, e));
        smax = std::max(smax, dot(c, e));
      }
      std::vector<double> cuts{smin, smax};
      for (const auto& [c, r] : feat_.spheres) {
        cuts.push_back(dot(c, e) - r);
        cuts.push_back(dot(c, e) + r);
      }
      for (const auto& pt : feat_.points) cuts.push_back(dot(pt, e));
      std::sort(cuts.begin(), cuts.end());
      double total = 0.0;
      double prev = smin;
      for (double c : cuts) {
        if (c <= prev) continue;
        const double hi = std::min(c, smax);
        if (hi > prev) total += mapped_interval([&](double s) { return line_at(s * e); }, prev, hi, panels_for(hi - prev));
        prev = hi;
        if (prev >= smax) break;
      }
      return total;
    } else {
      // orthonormal frame {e1, e2} of the plane orthogonal to d
      const int k = std::abs(d[0]) < 0.6 ? 0 : (std::abs(d[1]) < 0.6 ? 1 : 2);
      Vec<3> a = unit_vector<3>(k);
      a = a - dot(a, d) * d;
      const Vec<3> e1 = (1.0 / norm(a)) * a;
      const Vec<3> e2{d[1] * e1[2] - d[2] * e1[1], d[2] * e1[0] - d[0] * e1[2], d[0] * e1[1] - d[1] * e1[0]};
      const Box<3> b = slab_box(zero_outside);
      if (b.empty) return 0.0;
      Vec<3> c0 = b.center();
      c0 = c0 - dot(c0, d) * d;
      auto proj_dist = [&](const Vec<3>& x) {
        const Vec<3> y = x - dot(x, d) * d - c0;
        return norm(y);
      };
      double rmax = 0.0;
      for (const auto& c : b.corners()) rmax = std::max(rmax, proj_dist(c));
      std::vector<double> cuts{rmax};
      for (const auto& [c, r] : feat_.spheres) {
        const double m = proj_dist(c);
        cuts.push_back(std::max(0.0, m - r));
        cuts.push_back(m + r);
      }
      for (const auto& pt : feat_.points) cuts.push_back(proj_dist(pt));
      std::sort(cuts.begin(), cuts.end());
      const int na = opt_.angular_nodes;
      double total = 0.0;
      double prev = 0.0;
      for (double c : cuts) {
        if (c <= prev) continue;
        const double hi = std::min(c, rmax);
        if (hi > prev) {
          total += mapped_interval(
              [&](double rho) {
                double ring = 0.0;
                for (int j = 0; j < na; ++j) {
                  const double ang = 2.0 * kPi * (j + 0.5) / na;
                  ring += line_at(c0 + (rho * std::cos(ang)) * e1 + (rho * std::sin(ang)) * e2);
                }
                return ring * rho * 2.0 * kPi / na;
              },
              prev, hi, panels_for(hi - prev));
        }
        prev = hi;
        if (prev >= rmax) break;
      }
      return total;
    }
  }

  Field<N, D> u_;
  Domain<N> E_;
  double q_;
  ShiftOptions opt_;
  Box<N> vb_;
  Value<D> bg_{};
  bool bg_zero_ = true;
  double scale_ = 1.0;
  Features<N> feat_;
};

// ---------------------------------------------------------------------------
// Stratified polar sampler for
//   I = int_{S^{N-1}} int_{sigma_lo}^{sigma_hi} phi(e^sigma, theta) dsigma dtheta
// with phi even in theta (so only a half-sphere is sampled). Strata are cells
// of a (log-radius x direction) grid; each cell owns an RNG stream keyed by
// (seed, level, cell), and the reduction runs in cell order.
// ---------------------------------------------------------------------------

namespace detail {

template <int N>
double half_sphere_measure() {
  return 0.5 * sphere_measure(N);
}

template <int N>
struct DirectionStrata {
  int count = 1;
  int nz = 1;
  int npsi = 1;

  static DirectionStrata for_cells(std::size_t cells) {
    DirectionStrata s;
    if constexpr (N == 2) {
      s.count = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(cells) / 4.0)));
    } else if constexpr (N == 3) {
      const int total = std::max(4, static_cast<int>(std::sqrt(static_cast<double>(cells) / 2.0)));
      s.nz = std::max(1, static_cast<int>(std::sqrt(total / 2.0)));
      s.npsi = std::max(1, total / s.nz);
      s.count = s.nz * s.npsi;
    }
    return s;
  }

  Vec<N> direction(int j, double u1, double u2) const {
    if constexpr (N == 1) {
      (void)j, (void)u1, (void)u2;
      return Vec<1>{1.0};
    } else if constexpr (N == 2) {
      (void)u2;
      const double a = kPi * (j + u1) / count;
      return Vec<2>{std::cos(a), std::sin(a)};
    } else {
      const int jz = j / npsi, jp = j % npsi;
      const double z = (jz + u1) / nz;
      const double psi = 2.0 * kPi * (jp + u2) / npsi;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      return Vec<3>{rr * std::cos(psi), rr * std::sin(psi), z};
    }
  }
};

/// Fixed directions used for deterministic probes.
template <int N>
std::vector<Vec<N>> probe_directions() {
  if constexpr (N == 1) {
    return {Vec<1>{1.0}};
  } else if constexpr (N == 2) {
    std::vector<Vec<2>> v;
    for (int k = 0; k < 4; ++k) {
      const double a = kPi * (k + 0.5) / 4;
      v.push_back({std::cos(a), std::sin(a)});
    }
    return v;
  } else {
    std::vector<Vec<3>> v;
    for (int k = 0; k < 6; ++k) {
      const double z = (k + 0.5) / 6.0;
      const double a = 2.399963229728653 * k;
      const double rr = std::sqrt(1 - z * z);
      v.push_back({rr * std::cos(a), rr * std::sin(a), z});
    }
    return v;
  }
}

}  // namespace detail

/// phi(t, theta) is the full integrand in (sigma = ln t, theta) coordinates,
/// i.e. already multiplied by t^N.
template <int N, typename Phi>
QuadResult stratified_polar_integral(Phi&& phi, double sigma_lo, double sigma_hi, const QuadBudget& budget,
                                     std::uint64_t evaluations_already = 0) {
  budget.validate();
  QuadResult res;
  res.evaluations_used = evaluations_already;
  if (!(sigma_hi > sigma_lo)) return res;
  const double hm = detail::half_sphere_measure<N>();
  const std::uint64_t cap = budget.max_evaluations;

  if (cap <= res.evaluations_used + 1) {
    // budget cannot afford two samples: one midpoint sample, flagged
    const double sm = 0.5 * (sigma_lo + sigma_hi);
    const double v = phi(std::exp(sm), detail::DirectionStrata<N>::for_cells(1).direction(0, 0.5, 0.5));
    res.value = 2.0 * hm * (sigma_hi - sigma_lo) * v;
    res.error_estimate = std::abs(res.value);
    res.evaluations_used += 1;
    res.low_confidence = true;
    return res;
  }

  std::size_t cells = N == 1 ? 32 : (N == 2 ? 64 : 128);
  for (int level = 0;; ++level) {
    const std::uint64_t room = cap - res.evaluations_used;
    if (2 * cells > room) cells = std::max<std::size_t>(1, room / 2);
    const auto dirs = detail::DirectionStrata<N>::for_cells(cells);
    const std::size_t K = std::max<std::size_t>(1, cells / dirs.count);
    const std::size_t total_cells = K * dirs.count;
    const double dsig = (sigma_hi - sigma_lo) / K;
    const double vol = dsig * hm / dirs.count;

    std::vector<double> f1(total_cells), f2(total_cells);
    parallel_for(total_cells, budget.threads, [&](std::size_t c) {
      StratumRng rng(budget.rng_seed, (static_cast<std::uint64_t>(level) << 40) | c);
      const std::size_t k = c / dirs.count;
      const int j = static_cast<int>(c % dirs.count);
      for (int s = 0; s < 2; ++s) {
        const double sig = sigma_lo + (k + rng.uniform()) * dsig;
        const double u1 = rng.uniform(), u2 = rng.uniform();
        const double v = phi(std::exp(sig), dirs.direction(j, u1, u2));
        (s == 0 ? f1 : f2)[c] = v;
      }
    });
    double sum = 0.0, var = 0.0;
    for (std::size_t c = 0; c < total_cells; ++c) {
      sum += vol * 0.5 * (f1[c] + f2[c]);
      const double d = f1[c] - f2[c];
      var += vol * vol * d * d * 0.25;
    }
    res.evaluations_used += 2 * total_cells;
    res.value = 2.0 * sum;
    res.error_estimate = 2.5 * 2.0 * std::sqrt(var);  // 2.5 standard errors
    const bool met = res.error_estimate <= budget.target_rel_error * std::abs(res.value) || res.error_estimate == 0.0;
    if (met) return res;
    if (res.evaluations_used + 4 * total_cells > cap) {
      res.low_confidence = true;
      return res;
    }
    cells = 2 * total_cells;
  }
}

/// Radial weight w(|z|) restricted to the window [lo, hi).
struct RadialWeight {
  std::function<double(double)> w;
  double lo = 0.0;
  double hi = kInf;
  double power = std::numeric_limits<double>::quiet_NaN();  // w = coef t^{-power} when set
  double coef = 1.0;
  std::string name;

  static RadialWeight power_law(double s, double coef, double lo, double hi, std::string name = "power") {
    RadialWeight r;
    r.w = [s, coef](double t) { return coef * std::pow(t, -s); };
    r.lo = lo;
    r.hi = hi;
    r.power = s;
    r.coef = coef;
    r.name = std::move(name);
    return r;
  }
  bool is_power() const { return !std::isnan(power); }
};

/// int_{|z| in [a,b)} w(|z|) dz / H^{N-1}(S), i.e. int_a^b w(t) t^{N-1} dt.
inline double radial_weight_mass(const RadialWeight& W, int dim, double a, double b) {
  if (!(b > a)) return 0.0;
  if (W.is_power()) {
    const double k = dim - W.power;  // exponent + 1
    if (k == 0.0) return std::isfinite(b) ? W.coef * (std::log(b) - std::log(a)) : kInf;
    if (!std::isfinite(b)) return k < 0.0 ? W.coef * std::pow(a, k) / (-k) : kInf;
    return W.coef * (std::pow(b, k) - std::pow(a, k)) / k;
  }
  return integrate_1d([&](double t) { return W.w(t) * std::pow(t, dim - 1); }, a, b, 1e-12);
}

/// int_{E x E, |x-y| in window} w(|x-y|) |u(x) - u(y)|^q dy dx.
///
/// Change of variables z = y - x: the x-integral is the deterministic shift
/// integral F_E(z); (ln|z|, z/|z|) is sampled by stratified jittered Monte
/// Carlo. Below a floor the integrand is extrapolated as a power law fitted to
/// two probes (a non-decaying integrand means the integral diverges). For
/// E = R^N the region beyond the support diameter, where F_E is constant, is
/// added in closed form.
template <int N, int D>
QuadResult double_integral_singular(const ShiftEngine<N, D>& eng, const RadialWeight& W, const QuadBudget& budget) {
  budget.validate();
  if (!(W.hi > W.lo) || W.lo < 0.0) throw InputError("double_integral_singular: window needs 0 <= lo < hi");
  const Field<N, D>& u = eng.field();
  const Domain<N>& E = eng.domain();
  QuadResult res;
  const Box<N> vb = u.variation_box();
  if (vb.empty) return res;  // constant field

  double t_num_max;
  double tail_from = kInf;
  if (E.bounded()) {
    t_num_max = E.bounding_box().diameter();
  } else {
    if (!vb.bounded()) throw CapabilityError("double_integral_singular: unbounded E needs a bounded field support");
    t_num_max = vb.diameter();
    tail_from = t_num_max;
  }
  const double hi_num = std::min(W.hi, t_num_max);

  auto phi = [&](double t, const Vec<N>& th) {
    const double f = eng.difference(t * th);
    return f == 0.0 ? 0.0 : W.w(t) * std::pow(t, N) * f;
  };

  if (hi_num > W.lo) {
    double lo_num = W.lo;
    if (W.lo == 0.0) {
      const double feature = std::min({u.feature_scale(), W.hi, hi_num});
      lo_num = 1e-4 * feature;
      // power-law remainder below the floor
      const auto dirs = detail::probe_directions<N>();
      auto probe = [&](double t) {
        double s = 0.0;
        for (const auto& th : dirs) s += phi(t, th);
        res.evaluations_used += dirs.size();
        return s / dirs.size();
      };
      const double h1 = probe(lo_num), h2 = probe(0.25 * lo_num);
      if (h1 > 0.0) {
        const double k = h2 > 0.0 ? std::log(h1 / h2) / std::log(4.0) : 50.0;
        if (!(k >= 0.05))
          throw DivergenceError("double_integral_singular: integrand does not decay as |z|->0 (local power " +
                                std::to_string(k) + "); the integral diverges");
        const double rem = sphere_measure(N) * h1 / k;
        res.value += rem;
        res.error_estimate += 0.25 * rem;
      }
    }
    const QuadResult mc = stratified_polar_integral<N>(phi, std::log(lo_num), std::log(hi_num), budget,
                                                       res.evaluations_used);
    res.value += mc.value;
    res.error_estimate += mc.error_estimate;
    res.evaluations_used = mc.evaluations_used;
    res.low_confidence = mc.low_confidence;
  }

  if (std::isfinite(tail_from) && W.hi > tail_from) {
    const double a = std::max(tail_from, W.lo);
    const double mass = radial_weight_mass(W, N, a, W.hi);
    if (!std::isfinite(mass)) throw DivergenceError("double_integral_singular: weight not integrable at infinity");
    const double f_inf = 2.0 * eng.magnitude(true);
    res.value += sphere_measure(N) * mass * f_inf;
    res.error_estimate += 1e-10 * std::abs(sphere_measure(N) * mass * f_inf);
  }
  guard_overflow(res.value, "double_integral_singular");
  return res;
}

enum class WindowKind { Full, Annulus, Ball };

struct Window {
  WindowKind kind = WindowKind::Full;
  double a = 0.0;  // annulus inner radius
  double b = kInf; // annulus outer radius / ball radius

  static Window full() { return {}; }
  static Window annulus(double beta, double gamma) {
    if (!(beta > 0.0) || !(gamma > beta)) throw InputError("window: annulus needs 0 < beta < gamma");
    return {WindowKind::Annulus, beta, gamma};
  }
  static Window ball(double eps) {
    if (!(eps > 0.0)) throw InputError("window: ball radius must be positive");
    return {WindowKind::Ball, 0.0, eps};
  }
  std::string name() const {
    switch (kind) {
      case WindowKind::Full: return "full";
      case WindowKind::Annulus: return "annulus";
      case WindowKind::Ball: return "ball";
    }
    return "?";
  }
};

/// Weight |x - y|^{-s} over the window.
template <int N, int D>
QuadResult double_integral_singular(const Field<N, D>& f, const Domain<N>& E, double s, double q, const Window& win,
                                    const QuadBudget& budget) {
  ShiftEngine<N, D> eng(f, E, q);
  return double_integral_singular(eng, RadialWeight::power_law(s, 1.0, win.a, win.b, "|z|^-s"), budget);
}

}  // namespace besov
