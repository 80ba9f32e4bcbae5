#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/quadrature.hpp"

namespace besov {

enum class MollifierKind { Tent, TruncatedGaussian, SmoothBump, SignedTest };

inline const char* to_string(MollifierKind k) {
  switch (k) {
    case MollifierKind::Tent: return "tent";
    case MollifierKind::TruncatedGaussian: return "truncated_gaussian";
    case MollifierKind::SmoothBump: return "smooth_bump";
    case MollifierKind::SignedTest: return "signed_test";
  }
  return "?";
}

inline constexpr double kGaussianCut = 6.0;

namespace detail {

inline double bump_raw(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

/// Normalizing constant Z_N(kind) = H^{N-1}(S) int_0^s f(r) r^{N-1} dr.
inline double radial_normalizer_uncached(MollifierKind kind, int dim) {
  const double sm = sphere_measure(dim);
  switch (kind) {
    case MollifierKind::Tent:
      return sm / (dim * (dim + 1.0));
    case MollifierKind::TruncatedGaussian: {
      const double fl = std::exp(-0.5 * kGaussianCut * kGaussianCut);
      return sm * integrate_1d([&](double r) { return (std::exp(-0.5 * r * r) - fl) * std::pow(r, dim - 1); }, 0.0,
                               kGaussianCut, 1e-15);
    }
    case MollifierKind::SmoothBump:
    case MollifierKind::SignedTest:
      return sm * integrate_1d([&](double r) { return bump_raw(r) * std::pow(r, dim - 1); }, 0.0, 1.0, 1e-15);
  }
  return 1.0;
}

inline double radial_normalizer(MollifierKind kind, int dim) {
  static const auto table = [] {
    std::array<std::array<double, 4>, 4> t{};
    for (int k = 0; k < 4; ++k)
      for (int d = 1; d <= 3; ++d) t[k][d] = radial_normalizer_uncached(static_cast<MollifierKind>(k), d);
    return t;
  }();
  return table[static_cast<int>(kind)][dim];
}

/// Normalized radial profile f(r) and derivative for the radial kinds
/// (SignedTest returns the bump it differentiates).
inline double radial_f(MollifierKind kind, int dim, double r) {
  const double z = radial_normalizer(kind, dim);
  switch (kind) {
    case MollifierKind::Tent:
      return r < 1.0 ? (1.0 - r) / z : 0.0;
    case MollifierKind::TruncatedGaussian:
      return r < kGaussianCut ? (std::exp(-0.5 * r * r) - std::exp(-0.5 * kGaussianCut * kGaussianCut)) / z : 0.0;
    case MollifierKind::SmoothBump:
    case MollifierKind::SignedTest:
      return bump_raw(r) / z;
  }
  return 0.0;
}

inline double radial_df(MollifierKind kind, int dim, double r) {
  const double z = radial_normalizer(kind, dim);
  switch (kind) {
    case MollifierKind::Tent:
      return r < 1.0 ? -1.0 / z : 0.0;
    case MollifierKind::TruncatedGaussian:
      return r < kGaussianCut ? -r * std::exp(-0.5 * r * r) / z : 0.0;
    case MollifierKind::SmoothBump:
    case MollifierKind::SignedTest: {
      if (r >= 1.0) return 0.0;
      const double a = 1.0 - r * r;
      return bump_raw(r) / z * (-2.0 * r / (a * a));
    }
  }
  return 0.0;
}

/// b'(r)/r and b''(r) of the normalized bump (finite at r = 0).
inline std::pair<double, double> bump_d_over_r_and_dd(int dim, double r) {
  if (r >= 1.0) return {0.0, 0.0};
  const double b = bump_raw(r) / radial_normalizer(MollifierKind::SmoothBump, dim);
  const double a = 1.0 - r * r;
  const double g1 = -2.0 * r / (a * a);
  const double g2 = -2.0 / (a * a) - 8.0 * r * r / (a * a * a);
  return {b * (-2.0 / (a * a)), b * (g1 * g1 + g2)};
}

/// Cumulative integral of the 1D normalized bump on [-1, 1], cubic Hermite.
class BumpCdf {
 public:
  static const BumpCdf& instance() {
    static const BumpCdf t;
    return t;
  }
  double operator()(double s) const {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double u = (s + 1.0) / h_;
    const int i = std::min(static_cast<int>(u), kSeg - 1);
    const double t = u - i;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * c_[i] + h10 * h_ * d_[i] + h01 * c_[i + 1] + h11 * h_ * d_[i + 1];
  }

 private:
  static constexpr int kSeg = 4096;
  BumpCdf() : c_(kSeg + 1), d_(kSeg + 1) {
    h_ = 2.0 / kSeg;
    const auto f = [](double x) { return radial_f(MollifierKind::SmoothBump, 1, std::abs(x)); };
    c_[0] = 0.0;
    for (int i = 0; i < kSeg; ++i) {
      const double a = -1.0 + i * h_;
      c_[i + 1] = c_[i] + gauss_composite<8>(f, a, a + h_);
    }
    const double total = c_[kSeg];
    for (int i = 0; i <= kSeg; ++i) {
      c_[i] /= total;
      d_[i] = f(-1.0 + i * h_) / total;
    }
  }
  std::vector<double> c_, d_;
  double h_ = 0;
};

/// Clamped cubic spline on a uniform grid (second-derivative form).
class UniformSpline {
 public:
  UniformSpline() = default;
  UniformSpline(std::vector<double> y, double x0, double h, double d0, double d1) : y_(std::move(y)), x0_(x0), h_(h) {
    const std::size_t n = y_.size();
    if (n < 3) throw InputError("spline: needs at least three nodes");
    // tridiagonal system for the second derivatives, Thomas algorithm
    std::vector<double> a(n, 1.0), b(n, 4.0), c(n, 1.0), r(n);
    b[0] = b[n - 1] = 2.0;
    r[0] = 6.0 / h * ((y_[1] - y_[0]) / h - d0);
    r[n - 1] = 6.0 / h * (d1 - (y_[n - 1] - y_[n - 2]) / h);
    for (std::size_t i = 1; i + 1 < n; ++i) r[i] = 6.0 / (h * h) * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]);
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      r[i] -= w * r[i - 1];
    }
    m_.assign(n, 0.0);
    m_[n - 1] = r[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (r[i] - c[i] * m_[i + 1]) / b[i];
  }
  double operator()(double x) const {
    const double u = (x - x0_) / h_;
    std::size_t i = u <= 0.0 ? 0 : static_cast<std::size_t>(u);
    if (i >= y_.size() - 1) i = y_.size() - 2;
    const double t = u - static_cast<double>(i), s = 1.0 - t;
    return s * y_[i] + t * y_[i + 1] + h_ * h_ / 6.0 * ((s * s * s - s) * m_[i] + (t * t * t - t) * m_[i + 1]);
  }

 private:
  std::vector<double> y_, m_;
  double x0_ = 0, h_ = 1;
};

}  // namespace detail

/// eta as a finite linear combination of shipped profiles, so scalings
/// (2 eta) and perturbations (eta - eta') stay in the same type.
template <int N>
class MollifierSpec {
 public:
  struct Term {
    double weight;
    MollifierKind kind;
  };

  MollifierSpec() = default;
  explicit MollifierSpec(MollifierKind k) : terms_{{1.0, k}} { precompute(); }
  explicit MollifierSpec(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw InputError("mollifier: needs at least one term");
    for (const auto& t : terms_)
      if (!std::isfinite(t.weight)) throw InputError("mollifier: weights must be finite");
    precompute();
  }

  static MollifierSpec tent() { return MollifierSpec(MollifierKind::Tent); }
  static MollifierSpec truncated_gaussian() { return MollifierSpec(MollifierKind::TruncatedGaussian); }
  static MollifierSpec smooth_bump() { return MollifierSpec(MollifierKind::SmoothBump); }
  static MollifierSpec signed_test() { return MollifierSpec(MollifierKind::SignedTest); }

  MollifierSpec scaled(double lambda) const {
    auto t = terms_;
    for (auto& x : t) x.weight *= lambda;
    return MollifierSpec(t);
  }
  MollifierSpec plus(const MollifierSpec& o) const {
    auto t = terms_;
    t.insert(t.end(), o.terms_.begin(), o.terms_.end());
    return MollifierSpec(t);
  }

  const std::vector<Term>& terms() const { return terms_; }
  int dim() const { return N; }
  double total() const { return total_; }
  double abs_mass() const { return abs_mass_; }
  double grad_mass() const { return grad_mass_; }
  double weighted_grad(double rq) const {
    return polar([&](const Vec<N>& z) { return norm(gradient(z)) * std::pow(norm(z) + 2.0, rq); });
  }

  bool radial() const {
    for (const auto& t : terms_)
      if (t.kind == MollifierKind::SignedTest) return false;
    return true;
  }
  double support_radius() const {
    double s = 0.0;
    for (const auto& t : terms_) s = std::max(s, t.kind == MollifierKind::TruncatedGaussian ? kGaussianCut : 1.0);
    return s;
  }

  std::string name() const {
    std::string s;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i) s += "+";
      if (terms_[i].weight != 1.0) s += KernelTrim(terms_[i].weight) + "*";
      s += to_string(terms_[i].kind);
    }
    return s;
  }

  /// Radial profile (radial specs only).
  double radial_profile(double r) const {
    double v = 0.0;
    for (const auto& t : terms_) v += t.weight * detail::radial_f(t.kind, N, r);
    return v;
  }

  double value(const Vec<N>& z) const {
    const double r = norm(z);
    double v = 0.0;
    for (const auto& t : terms_) {
      if (t.kind == MollifierKind::SignedTest) {
        v += t.weight * detail::bump_d_over_r_and_dd(N, r).first * z[0];
      } else {
        v += t.weight * detail::radial_f(t.kind, N, r);
      }
    }
    return v;
  }

  Vec<N> gradient(const Vec<N>& z) const {
    const double r = norm(z);
    Vec<N> g{};
    for (const auto& t : terms_) {
      if (t.kind == MollifierKind::SignedTest) {
        // d_j d_1 b = b'' th1 thj + (b'/r)(delta_1j - th1 thj)
        const auto [dor, dd] = detail::bump_d_over_r_and_dd(N, r);
        for (int j = 0; j < N; ++j) {
          const double th1 = r > 0 ? z[0] / r : (j == 0 ? 1.0 : 0.0);
          const double thj = r > 0 ? z[j] / r : (j == 0 ? 1.0 : 0.0);
          g[j] += t.weight * (dd * th1 * thj + dor * ((j == 0 ? 1.0 : 0.0) - th1 * thj));
        }
      } else if (r > 0.0) {
        const double df = detail::radial_df(t.kind, N, r);
        for (int j = 0; j < N; ++j) g[j] += t.weight * df * z[j] / r;
      }
    }
    return g;
  }

  /// int_{-inf}^s eta (N = 1).
  double cdf(double s) const {
    static_assert(N == 1, "cdf is one-dimensional");
    double v = 0.0;
    for (const auto& t : terms_) v += t.weight * cdf_term(t.kind, s);
    return v;
  }

  /// Points in z (units of eps) where eta or its derivative is not smooth.
  std::vector<double> kinks() const {
    const double s = support_radius();
    std::vector<double> k{-s, 0.0, s};
    if (s != 1.0) {
      k.push_back(-1.0);
      k.push_back(1.0);
    }
    std::sort(k.begin(), k.end());
    return k;
  }

  /// int over the support ball of g(z) dz, polar composite Gauss x sphere rule.
  template <typename G>
  double polar(G&& g) const {
    const double s = support_radius();
    std::vector<double> br{0.0, 1.0};
    if (s > 1.0) br.push_back(s);
    const auto& gl = gauss_legendre<8>();
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const int panels = 48;
      const double w = (br[k + 1] - br[k]) / panels;
      for (int p = 0; p < panels; ++p) {
        const double c = br[k] + (p + 0.5) * w;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double r = c + 0.5 * w * gl.nodes[i];
          const double shell = sphere_sum([&](const Vec<N>& th) { return g(r * th); });
          total += 0.5 * w * gl.weights[i] * shell * std::pow(r, N - 1);
        }
      }
    }
    return total;
  }

 private:
  static std::string KernelTrim(double v) {
    std::string s = std::to_string(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  static double cdf_term(MollifierKind k, double s) {
    switch (k) {
      case MollifierKind::Tent:
        if (s <= -1.0) return 0.0;
        if (s <= 0.0) return 0.5 * (1.0 + s) * (1.0 + s);
        if (s < 1.0) return 1.0 - 0.5 * (1.0 - s) * (1.0 - s);
        return 1.0;
      case MollifierKind::TruncatedGaussian: {
        const double c = kGaussianCut;
        if (s <= -c) return 0.0;
        if (s >= c) return 1.0;
        const double fl = std::exp(-0.5 * c * c);
        const double num = std::sqrt(0.5 * kPi) * (std::erf(s / std::sqrt(2.0)) + std::erf(c / std::sqrt(2.0))) - fl * (s + c);
        return num / detail::radial_normalizer(MollifierKind::TruncatedGaussian, 1);
      }
      case MollifierKind::SmoothBump:
        return detail::BumpCdf::instance()(s);
      case MollifierKind::SignedTest:
        return detail::radial_f(MollifierKind::SmoothBump, 1, std::abs(s));
    }
    return 0.0;
  }

  template <typename G>
  static double sphere_sum(G&& g) {
    if constexpr (N == 1) {
      return g(Vec<1>{1.0}) + g(Vec<1>{-1.0});
    } else if constexpr (N == 2) {
      const int m = 128;
      double s = 0.0;
      for (int k = 0; k < m; ++k) {
        const double a = 2 * kPi * k / m;
        s += g(Vec<2>{std::cos(a), std::sin(a)});
      }
      return s * 2 * kPi / m;
    } else {
      const auto& gl = gauss_legendre<8>();
      const int panels = 2, na = 32;
      double s = 0.0;
      for (int p = 0; p < panels; ++p) {
        const double mid = -1.0 + (p + 0.5) * (2.0 / panels);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double z = mid + gl.nodes[i] / panels;
          const double rr = std::sqrt(std::max(0.0, 1 - z * z));
          double ring = 0.0;
          for (int k = 0; k < na; ++k) {
            const double a = 2 * kPi * (k + 0.5) / na;
            ring += g(Vec<3>{rr * std::cos(a), rr * std::sin(a), z});
          }
          s += gl.weights[i] / panels * ring * 2 * kPi / na;
        }
      }
      return s;
    }
  }

  void precompute() {
    if (radial()) {
      const double sm = sphere_measure(N);
      auto radial_int = [&](auto&& f) {
        double v = 0.0;
        const double s = support_radius();
        v += gauss_composite<8>([&](double r) { return f(r) * std::pow(r, N - 1); }, 0.0, 1.0, 64);
        if (s > 1.0) v += gauss_composite<8>([&](double r) { return f(r) * std::pow(r, N - 1); }, 1.0, s, 128);
        return sm * v;
      };
      total_ = radial_int([&](double r) { return radial_profile(r); });
      abs_mass_ = radial_int([&](double r) { return std::abs(radial_profile(r)); });
      grad_mass_ = radial_int([&](double r) {
        double d = 0.0;
        for (const auto& t : terms_) d += t.weight * detail::radial_df(t.kind, N, r);
        return std::abs(d);
      });
    } else {
      total_ = polar([&](const Vec<N>& z) { return value(z); });
      abs_mass_ = polar([&](const Vec<N>& z) { return std::abs(value(z)); });
      grad_mass_ = polar([&](const Vec<N>& z) { return norm(gradient(z)); });
    }
    if (std::abs(total_) < 1e-12) total_ = 0.0;
  }

  std::vector<Term> terms_;
  double total_ = 0, abs_mass_ = 0, grad_mass_ = 0;
};

// ---------------------------------------------------------------------------
// Mollified fields
// ---------------------------------------------------------------------------

/// 1D piecewise-constant u = v_left + sum_j jump_j H(x - b_j), mollified in
/// closed form: u_eps(x) = v_left int(eta) + sum_j jump_j C((x - b_j)/eps).
template <int D>
class MollifiedSteps1D final : public FieldImpl<1, D> {
 public:
  MollifiedSteps1D(std::vector<double> breaks, std::vector<Value<D>> jumps, Value<D> left, MollifierSpec<1> m, double eps,
                   std::string source)
      : b_(std::move(breaks)), jump_(std::move(jumps)), left_(left), m_(std::move(m)), eps_(eps), src_(std::move(source)) {
    s_ = m_.support_radius();
    kinks_ = m_.kinks();
    right_ = left_;
    for (const auto& j : jump_) right_ = right_ + j;
  }
  FieldKind kind() const override { return FieldKind::Mollified; }
  Value<D> value(const Vec<1>& x) const override {
    Value<D> v = left_;
    for (auto& c : v) c *= m_.total();
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const double c = m_.cdf((x[0] - b_[j]) / eps_);
      if (c == 0.0) continue;
      for (int i = 0; i < D; ++i) v[i] += jump_[j][i] * c;
    }
    return v;
  }
  Value<D> background() const override {
    Value<D> v = left_;
    for (auto& c : v) c *= m_.total();
    return v;
  }
  Box<1> variation_box() const override {
    if (b_.empty()) return Box<1>{};
    if (m_.total() != 0.0 && left_ != right_) return Box<1>::everything();
    return Box<1>::make({b_.front() - eps_ * s_}, {b_.back() + eps_ * s_});
  }
  void line_breaks(const Vec<1>& p, const Vec<1>& d, std::vector<double>& out) const override {
    for (double b : b_)
      for (double k : kinks_) out.push_back((b + eps_ * k - p[0]) / d[0]);
  }
  bool flat_piece(const Vec<1>& x) const override {
    for (double b : b_)
      if (std::abs(x[0] - b) < eps_ * s_) return false;
    return true;
  }
  double feature_scale() const override { return eps_; }
  void features(Features<1>&) const override {}
  std::string describe() const override {
    return "mollify(" + src_ + "," + m_.name() + ",eps=" + std::to_string(eps_) + ")";
  }

 private:
  std::vector<double> b_;
  std::vector<Value<D>> jump_;
  Value<D> left_, right_;
  MollifierSpec<1> m_;
  double eps_;
  std::string src_;
  double s_ = 1;
  std::vector<double> kinks_;
};

/// Mollified indicator of a ball as a function of distance from the center,
/// tabulated in delta = (|x - c| - R)/eps and splined.
template <int N>
class BallProfile {
 public:
  BallProfile(double radius, double eps, const MollifierSpec<N>& m) : R_(radius), eps_(eps), total_(m.total()) {
    s_ = m.support_radius();
    const double Rp = radius / eps;
    lo_ = std::max(-s_, -Rp);
    hi_ = s_;
    const int nodes = 2049;
    h_ = (hi_ - lo_) / (nodes - 1);
    std::vector<double> vals(nodes);
    for (int i = 0; i < nodes; ++i) vals[i] = integral(lo_ + i * h_, Rp, m);
    vals.front() = total_;
    vals.back() = 0.0;
    spline_ = detail::UniformSpline(std::move(vals), lo_, h_, 0.0, 0.0);
  }
  double operator()(double dist) const {
    const double delta = (dist - R_) / eps_;
    if (delta <= lo_) return total_;
    if (delta >= hi_) return 0.0;
    return spline_(delta);
  }
  double support() const { return s_; }

 private:
  static double integral(double delta, double Rp, const MollifierSpec<N>& m) {
    const double rhop = Rp + delta;
    const double s = m.support_radius();
    auto A = [&](double r) {
      if (rhop <= 0.0) return r < Rp ? sphere_measure(N) : 0.0;
      double kappa = (delta * (2.0 * Rp + delta) + r * r) / (2.0 * r * rhop);
      kappa = std::min(1.0, std::max(-1.0, kappa));
      if constexpr (N == 2) return 2.0 * std::acos(kappa);
      return 2.0 * kPi * (1.0 - kappa);
    };
    std::vector<double> br{0.0, s};
    for (double x : {std::abs(delta), 2.0 * Rp + delta, 1.0})
      if (x > 0.0 && x < s) br.push_back(x);
    std::sort(br.begin(), br.end());
    const auto& g = gauss_legendre<8>();
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const double a = br[k], b = br[k + 1];
      if (!(b > a)) continue;
      const double c = 0.5 * (a + b), hh = 0.5 * (b - a);
      const int panels = 6;
      const double w = 2.0 / panels;
      for (int p = 0; p < panels; ++p) {
        const double vm = -1.0 + (p + 0.5) * w;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
          const double v = vm + 0.5 * w * g.nodes[i];
          const double r = c + hh * std::sin(0.5 * kPi * v);
          const double jac = hh * 0.5 * kPi * std::cos(0.5 * kPi * v);
          total += 0.5 * w * g.weights[i] * jac * m.radial_profile(r) * std::pow(r, N - 1) * A(r);
        }
      }
    }
    return total;
  }

  double R_, eps_, total_;
  double s_ = 1, lo_ = -1, hi_ = 1, h_ = 0;
  detail::UniformSpline spline_;
};

template <int N, int D>
class MollifiedBalls final : public FieldImpl<N, D> {
 public:
  struct Ball {
    Vec<N> center;
    double radius;
    Value<D> amplitude;
  };
  MollifiedBalls(std::vector<Ball> balls, Value<D> background, const MollifierSpec<N>& m, double eps, std::string src)
      : balls_(std::move(balls)), bg_(background), eps_(eps), src_(std::move(src)), name_(m.name()) {
    for (auto& c : bg_) c *= m.total();
    for (const auto& b : balls_) profiles_.emplace_back(b.radius, eps, m);
    s_ = m.support_radius();
  }
  FieldKind kind() const override { return FieldKind::Mollified; }
  Value<D> value(const Vec<N>& x) const override {
    Value<D> v = bg_;
    for (std::size_t k = 0; k < balls_.size(); ++k) {
      const double p = profiles_[k](norm(x - balls_[k].center));
      if (p == 0.0) continue;
      for (int i = 0; i < D; ++i) v[i] += balls_[k].amplitude[i] * p;
    }
    return v;
  }
  Value<D> background() const override { return bg_; }
  Box<N> variation_box() const override {
    Box<N> b;
    for (const auto& bl : balls_) b = b.united(Region<N>::ball(bl.center, bl.radius + eps_ * s_).bounding_box());
    return b;
  }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    for (const auto& bl : balls_)
      for (double k : {-1.0, 0.0, 1.0}) {
        const double r = bl.radius + k * eps_ * s_;
        if (r <= 0.0) continue;
        for (const auto& iv : Region<N>::ball(bl.center, r).line_intervals(p, d)) {
          out.push_back(iv.lo);
          out.push_back(iv.hi);
        }
      }
  }
  bool flat_piece(const Vec<N>& x) const override {
    for (const auto& bl : balls_)
      if (std::abs(norm(x - bl.center) - bl.radius) < eps_ * s_) return false;
    return true;
  }
  double feature_scale() const override { return eps_; }
  void features(Features<N>& out) const override {
    for (const auto& bl : balls_)
      for (double k : {-1.0, 0.0, 1.0}) out.spheres.push_back({bl.center, std::max(0.0, bl.radius + k * eps_ * s_)});
  }
  std::string describe() const override {
    return "mollify(" + src_ + "," + name_ + ",eps=" + std::to_string(eps_) + ")";
  }

 private:
  std::vector<Ball> balls_;
  Value<D> bg_;
  double eps_;
  std::string src_, name_;
  std::vector<BallProfile<N>> profiles_;
  double s_ = 1;
};

/// u_eps(x) = sum_i w_i u(x - eps z_i): tensor Gauss rule over the support
/// box of eta, evaluated lazily (for smooth sources).
template <int N, int D>
class LazyConvolution final : public FieldImpl<N, D> {
 public:
  LazyConvolution(Field<N, D> src, const MollifierSpec<N>& m, double eps)
      : src_(std::move(src)), eps_(eps), name_(m.name()) {
    s_ = m.support_radius();
    // per-axis nodes: panels split at the kinks of eta
    std::vector<double> ax_nodes, ax_w;
    auto kinks = m.kinks();
    const auto& g = gauss_legendre<8>();
    const int sub = N == 1 ? 4 : 2;
    for (std::size_t k = 0; k + 1 < kinks.size(); ++k) {
      const double a = kinks[k], b = kinks[k + 1];
      const double w = (b - a) / sub;
      for (int p = 0; p < sub; ++p)
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
          ax_nodes.push_back(a + (p + 0.5) * w + 0.5 * w * g.nodes[i]);
          ax_w.push_back(0.5 * w * g.weights[i]);
        }
    }
    const std::size_t n1 = ax_nodes.size();
    std::size_t total = 1;
    for (int i = 0; i < N; ++i) total *= n1;
    double wsum = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
      Vec<N> z;
      double w = 1.0;
      std::size_t kk = k;
      for (int i = 0; i < N; ++i) {
        z[i] = ax_nodes[kk % n1];
        w *= ax_w[kk % n1];
        kk /= n1;
      }
      const double e = m.value(z);
      if (e == 0.0) continue;
      nodes_.push_back(z);
      weights_.push_back(w * e);
      wsum += w * e;
    }
    if (m.total() != 0.0 && wsum != 0.0)
      for (auto& w : weights_) w *= m.total() / wsum;
    bg_ = src_.background();
    for (auto& c : bg_) c *= m.total();
  }
  FieldKind kind() const override { return FieldKind::Mollified; }
  Value<D> value(const Vec<N>& x) const override {
    Value<D> v{};
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const Value<D> s = src_(x - eps_ * nodes_[k]);
      for (int i = 0; i < D; ++i) v[i] += weights_[k] * s[i];
    }
    return v;
  }
  Value<D> background() const override { return bg_; }
  Box<N> variation_box() const override { return src_.variation_box().expanded(eps_ * s_ * std::sqrt(N)); }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    const auto iv = variation_box().clip_line(p, d);
    if (iv.hi > iv.lo) {
      out.push_back(iv.lo);
      out.push_back(iv.hi);
    }
    std::vector<double> inner;
    src_.impl().line_breaks(p, d, inner);
    for (double t : inner) {
      out.push_back(t - eps_ * s_);
      out.push_back(t + eps_ * s_);
    }
  }
  bool flat_piece(const Vec<N>& x) const override {
    const Box<N> b = variation_box();
    for (int i = 0; i < N; ++i)
      if (x[i] <= b.lo[i] || x[i] >= b.hi[i]) return true;
    return false;
  }
  double feature_scale() const override { return std::min(eps_, src_.feature_scale()); }
  void features(Features<N>& out) const override {
    Features<N> f;
    src_.impl().features(f);
    for (const auto& [c, r] : f.spheres) {
      out.spheres.push_back({c, r + eps_ * s_});
      out.spheres.push_back({c, std::max(0.0, r - eps_ * s_)});
    }
    out.points.insert(out.points.end(), f.points.begin(), f.points.end());
    out.panel_hint = std::min(out.panel_hint, f.panel_hint);
  }
  std::string describe() const override {
    return "mollify(" + src_.describe() + "," + name_ + ",eps=" + std::to_string(eps_) + ")";
  }

 private:
  Field<N, D> src_;
  double eps_;
  std::string name_;
  double s_ = 1;
  std::vector<Vec<N>> nodes_;
  std::vector<double> weights_;
  Value<D> bg_{};
};

namespace detail {

/// Discrete convolution on a uniform grid (direct summation).
template <int N, int D>
Field<N, D> grid_convolve(const GridSpec<N>& out_spec, const std::vector<Value<D>>& src_vals,
                          const MollifierSpec<N>& m, double eps, const std::string& name, int threads) {
  const double h = out_spec.spacing[0];
  const int K = static_cast<int>(std::ceil(eps * m.support_radius() / h));
  std::vector<std::pair<std::array<int, N>, double>> stencil;
  int width = 2 * K + 1;
  std::size_t count = 1;
  for (int i = 0; i < N; ++i) count *= static_cast<std::size_t>(width);
  double wsum = 0.0;
  const double cell = std::pow(h / eps, N);
  for (std::size_t k = 0; k < count; ++k) {
    std::array<int, N> off{};
    Vec<N> z{};
    std::size_t kk = k;
    for (int i = 0; i < N; ++i) {
      off[i] = static_cast<int>(kk % width) - K;
      kk /= width;
      z[i] = off[i] * h / eps;
    }
    const double w = m.value(z) * cell;
    if (w == 0.0) continue;
    stencil.push_back({off, w});
    wsum += w;
  }
  if (m.total() != 0.0 && wsum != 0.0)
    for (auto& s : stencil) s.second *= m.total() / wsum;

  std::vector<Value<D>> out(out_spec.cells());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    const auto idx = out_spec.unflatten(k);
    Value<D> v{};
    for (const auto& [off, w] : stencil) {
      std::array<int, N> j{};
      bool inside = true;
      for (int i = 0; i < N; ++i) {
        j[i] = idx[i] - off[i];
        if (j[i] < 0 || j[i] >= out_spec.extent[i]) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      const auto& s = src_vals[out_spec.flatten(j)];
      for (int c = 0; c < D; ++c) v[c] += w * s[c];
    }
    out[k] = v;
  });
  return Field<N, D>(std::make_shared<GridField<N, D>>(out_spec, std::move(out), name));
}

}  // namespace detail

/// u_eps = u * eta_(eps) with eta_(eps)(z) = eps^{-N} eta(z/eps).
///
/// Paths: closed form for 1D piecewise-constant fields; tabulated radial
/// profile for unions of disjoint balls with a radial eta; lazy quadrature
/// convolution for smooth closed forms; otherwise direct grid convolution at
/// spacing <= eps/8.
template <int N, int D>
Field<N, D> mollify(const Field<N, D>& f, const MollifierSpec<N>& m, double eps, int threads = 1) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("mollify: eps must be positive");
  if (const auto* sc = f.template as<ScaledField<N, D>>()) return scale(mollify(sc->inner(), m, eps, threads), sc->lambda());
  if (const auto* sm = f.template as<SumField<N, D>>())
    return add(mollify(sm->first(), m, eps, threads), mollify(sm->second(), m, eps, threads));

  const std::string tag = "mollify(" + f.describe() + "," + m.name() + ",eps=" + std::to_string(eps) + ")";

  if (const auto* pw = f.template as<PiecewiseField<N, D>>()) {
    if constexpr (N == 1) {
      std::vector<double> pts;
      pw->line_breaks(Vec<1>{0.0}, Vec<1>{1.0}, pts);
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      std::vector<Value<D>> vals;  // value left of pts[0], then on each piece
      vals.push_back(f(Vec<1>{pts.empty() ? 0.0 : pts.front() - 1.0}));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = i + 1 < pts.size() ? 0.5 * (pts[i] + pts[i + 1]) : pts[i] + 1.0;
        vals.push_back(f(Vec<1>{x}));
      }
      std::vector<double> br;
      std::vector<Value<D>> jumps;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Value<D> j = vals[i + 1] - vals[i];
        if (std::any_of(j.begin(), j.end(), [](double v) { return v != 0.0; })) {
          br.push_back(pts[i]);
          jumps.push_back(j);
        }
      }
      return Field<1, D>(std::make_shared<MollifiedSteps1D<D>>(br, jumps, vals.front(), m, eps, f.describe()));
    } else {
      bool balls_only = m.radial();
      for (const auto& p : pw->pieces()) balls_only = balls_only && p.region.kind == RegionKind::Ball;
      if (balls_only) {
        const auto& pcs = pw->pieces();
        bool disjoint = true;
        for (std::size_t i = 0; i < pcs.size(); ++i)
          for (std::size_t j = i + 1; j < pcs.size(); ++j)
            disjoint = disjoint && norm(pcs[i].region.a - pcs[j].region.a) >= pcs[i].region.scalar + pcs[j].region.scalar;
        const double l = pw->clamp_level();
        if (disjoint || !std::isfinite(l)) {
          std::vector<typename MollifiedBalls<N, D>::Ball> balls;
          const Value<D> bg = clamp_value<D>(pw->raw_background(), l);
          for (const auto& p : pcs) {
            const Value<D> amp = clamp_value<D>(pw->raw_background() + p.amplitude, l) - bg;
            balls.push_back({p.region.a, p.region.scalar, amp});
          }
          return Field<N, D>(std::make_shared<MollifiedBalls<N, D>>(balls, bg, m, eps, f.describe()));
        }
      }
    }
  }

  if (f.template as<SmoothField<N, D>>() || f.kind() == FieldKind::Mollified)
    return Field<N, D>(std::make_shared<LazyConvolution<N, D>>(f, m, eps));

  // grid path
  const auto bgv = f.background();
  if (std::any_of(bgv.begin(), bgv.end(), [](double v) { return v != 0.0; }))
    throw CapabilityError("mollify: grid path needs a field vanishing outside its support");
  const double s = m.support_radius();
  if (const auto* g = f.template as<GridField<N, D>>()) {
    const auto& sp = g->spec();
    for (int i = 1; i < N; ++i)
      if (sp.spacing[i] != sp.spacing[0]) throw CapabilityError("mollify: grid path needs isotropic spacing");
    const double h = sp.spacing[0];
    if (eps < 8.0 * h)
      throw ResolutionError("mollify: eps=" + std::to_string(eps) + " is below 8x the source grid spacing " +
                            std::to_string(h));
    const int K = static_cast<int>(std::ceil(eps * s / h));
    GridSpec<N> out = sp;
    for (int i = 0; i < N; ++i) {
      out.origin[i] -= K * h;
      out.extent[i] += 2 * K;
    }
    if (out.cells() > kMaxGridCells) throw CapabilityError("mollify: grid convolution exceeds the cell cap");
    std::vector<Value<D>> vals(out.cells());
    for (std::size_t k = 0; k < vals.size(); ++k) {
      auto idx = out.unflatten(k);
      bool inside = true;
      for (int i = 0; i < N; ++i) {
        idx[i] -= K;
        inside = inside && idx[i] >= 0 && idx[i] < sp.extent[i];
      }
      vals[k] = inside ? g->values()[sp.flatten(idx)] : Value<D>{};
    }
    return detail::grid_convolve<N, D>(out, vals, m, eps, tag, threads);
  }
  const Box<N> vb = f.variation_box();
  if (vb.empty) {
    Value<D> c = f.background();
    for (auto& x : c) x *= m.total();
    return constant<N, D>(c);
  }
  if (!vb.bounded()) throw CapabilityError("mollify: grid path needs a bounded support");
  const double h = eps / 8.0;
  const GridSpec<N> out = GridSpec<N>::covering(vb.expanded(eps * s + h), h);
  if (out.cells() > kMaxGridCells)
    throw CapabilityError("mollify: grid convolution at eps=" + std::to_string(eps) + " exceeds the cell cap");
  std::vector<Value<D>> vals(out.cells());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = f(out.center_of(out.unflatten(k)));
  return detail::grid_convolve<N, D>(out, vals, m, eps, tag, threads);
}

}  // namespace besov
