#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/region.hpp"

namespace besov {

enum class FieldKind { PiecewiseConstant, SmoothClosedForm, GridSample, Mollified, Composite };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::PiecewiseConstant: return "piecewise-constant";
    case FieldKind::SmoothClosedForm: return "smooth-closed-form";
    case FieldKind::GridSample: return "grid-sample";
    case FieldKind::Mollified: return "mollified";
    case FieldKind::Composite: return "composite";
  }
  return "?";
}

/// Implementation interface. Besides point evaluation, every field exposes the
/// structure the line-slicing quadrature needs: where its restriction to a line
/// changes formula, and whether it is constant between such breaks.
template <int N, int D>
class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual FieldKind kind() const = 0;
  virtual Value<D> value(const Vec<N>& x) const = 0;
  /// u equals background() outside variation_box().
  virtual Value<D> background() const { return Value<D>{}; }
  virtual Box<N> variation_box() const = 0;
  /// Append every tau at which u(p + tau d) may change formula.
  virtual void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const = 0;
  /// True if u is constant on the line piece (between breaks) containing x.
  virtual bool flat_piece(const Vec<N>& x) const = 0;
  /// Length scale below which u may vary; sets quadrature panel widths.
  virtual double feature_scale() const = 0;
  virtual void features(Features<N>& out) const = 0;
  virtual std::string describe() const = 0;
};

template <int N, int D>
class Field {
 public:
  Field() = default;
  explicit Field(std::shared_ptr<const FieldImpl<N, D>> impl) : impl_(std::move(impl)) {}

  Value<D> operator()(const Vec<N>& x) const { return impl_->value(x); }
  const FieldImpl<N, D>& impl() const { return *impl_; }
  const std::shared_ptr<const FieldImpl<N, D>>& ptr() const { return impl_; }
  FieldKind kind() const { return impl_->kind(); }
  Box<N> variation_box() const { return impl_->variation_box(); }
  Value<D> background() const { return impl_->background(); }
  double feature_scale() const { return impl_->feature_scale(); }
  std::string describe() const { return impl_->describe(); }
  explicit operator bool() const { return static_cast<bool>(impl_); }

  template <typename T>
  const T* as() const {
    return dynamic_cast<const T*>(impl_.get());
  }

 private:
  std::shared_ptr<const FieldImpl<N, D>> impl_;
};

template <int D>
Value<D> clamp_value(Value<D> v, double l) {
  if (std::isinf(l)) return v;
  for (auto& c : v) c = std::min(l, std::max(-l, c));
  return v;
}

template <int D>
std::string describe_value(const Value<D>& v) {
  std::ostringstream os;
  os.precision(6);
  if (D == 1) {
    os << v[0];
    return os.str();
  }
  os << "(";
  for (int i = 0; i < D; ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Piecewise-constant: u = clamp_l(background + sum_k amp_k chi_{R_k}).
// ---------------------------------------------------------------------------

template <int N, int D>
class PiecewiseField final : public FieldImpl<N, D> {
 public:
  struct Piece {
    Region<N> region;
    Value<D> amplitude;
  };

  PiecewiseField(std::vector<Piece> pieces, Value<D> bg, double clamp_level = kInf)
      : pieces_(std::move(pieces)), background_(bg), clamp_(clamp_level) {
    for (const auto& p : pieces_)
      if (!all_finite(p.amplitude)) throw InputError("piecewise field: amplitudes must be finite");
    if (!all_finite(background_)) throw InputError("piecewise field: background must be finite");
  }

  FieldKind kind() const override { return FieldKind::PiecewiseConstant; }

  Value<D> raw(const Vec<N>& x) const {
    Value<D> v = background_;
    for (const auto& p : pieces_)
      if (p.region.contains(x))
        for (int i = 0; i < D; ++i) v[i] += p.amplitude[i];
    return v;
  }
  Value<D> value(const Vec<N>& x) const override { return clamp_value<D>(raw(x), clamp_); }
  Value<D> background() const override { return clamp_value<D>(background_, clamp_); }

  Box<N> variation_box() const override {
    Box<N> b;
    for (const auto& p : pieces_) b = b.united(p.region.bounding_box());
    return b;
  }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    for (const auto& pc : pieces_)
      for (const auto& iv : pc.region.line_intervals(p, d)) {
        if (std::isfinite(iv.lo)) out.push_back(iv.lo);
        if (std::isfinite(iv.hi)) out.push_back(iv.hi);
      }
  }
  bool flat_piece(const Vec<N>&) const override { return true; }
  double feature_scale() const override {
    double s = kInf;
    for (const auto& p : pieces_) s = std::min(s, p.region.feature_scale());
    return std::isfinite(s) ? s : 1.0;
  }
  void features(Features<N>& out) const override {
    for (const auto& p : pieces_) p.region.features(out);
  }
  std::string describe() const override {
    std::string s = "piecewise[";
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      s += (i ? "+" : "") + describe_value<D>(pieces_[i].amplitude) + "*" + pieces_[i].region.describe();
    s += "]";
    if (std::isfinite(clamp_)) s += "|clamp " + std::to_string(clamp_);
    return s;
  }

  const std::vector<Piece>& pieces() const { return pieces_; }
  const Value<D>& raw_background() const { return background_; }
  double clamp_level() const { return clamp_; }

 private:
  std::vector<Piece> pieces_;
  Value<D> background_;
  double clamp_;
};

// ---------------------------------------------------------------------------
// Smooth closed forms with compact support.
// ---------------------------------------------------------------------------

enum class SmoothFormula { Gaussian, Cos2 };

template <int N, int D>
class SmoothField final : public FieldImpl<N, D> {
 public:
  /// Gaussian: amp (exp(-rho^2/2) - exp(-cut^2/2))_+, rho = |x-c|/width, support radius cut*width.
  /// Cos2: amp cos^2(pi |x-c| / (2 width)) on |x-c| < width.
  SmoothField(SmoothFormula f, Vec<N> center, double width, Value<D> amp, double cut = 6.0)
      : formula_(f), center_(center), width_(width), amp_(amp), cut_(cut) {
    if (!(width > 0.0) || !std::isfinite(width)) throw InputError("smooth field: width must be positive");
    if (!(cut > 0.0)) throw InputError("smooth field: cut must be positive");
    if (!all_finite(center) || !all_finite(amp)) throw InputError("smooth field: non-finite parameter");
    support_ = f == SmoothFormula::Gaussian ? cut * width : width;
    floor_ = std::exp(-0.5 * cut * cut);
  }

  FieldKind kind() const override { return FieldKind::SmoothClosedForm; }

  double profile(double dist) const {
    if (dist >= support_) return 0.0;
    const double rho = dist / width_;
    if (formula_ == SmoothFormula::Gaussian) return std::exp(-0.5 * rho * rho) - floor_;
    const double c = std::cos(0.5 * kPi * rho);
    return c * c;
  }
  /// d/d(dist) of profile.
  double profile_slope(double dist) const {
    if (dist >= support_) return 0.0;
    const double rho = dist / width_;
    if (formula_ == SmoothFormula::Gaussian) return -rho * std::exp(-0.5 * rho * rho) / width_;
    return -0.5 * kPi / width_ * std::sin(kPi * rho);
  }
  Value<D> value(const Vec<N>& x) const override {
    const double p = profile(norm(x - center_));
    Value<D> v;
    for (int i = 0; i < D; ++i) v[i] = amp_[i] * p;
    return v;
  }
  Box<N> variation_box() const override { return Region<N>::ball(center_, support_).bounding_box(); }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    for (const auto& iv : Region<N>::ball(center_, support_).line_intervals(p, d)) {
      out.push_back(iv.lo);
      out.push_back(iv.hi);
    }
  }
  bool flat_piece(const Vec<N>& x) const override { return norm(x - center_) >= support_; }
  double feature_scale() const override { return 0.5 * width_; }
  void features(Features<N>& out) const override {
    out.spheres.push_back({center_, support_});
    out.points.push_back(center_);
  }
  std::string describe() const override {
    return std::string(formula_ == SmoothFormula::Gaussian ? "gaussian" : "cos2") + "(w=" + std::to_string(width_) +
           ",amp=" + describe_value<D>(amp_) + ")";
  }

  SmoothFormula formula() const { return formula_; }
  const Vec<N>& center() const { return center_; }
  const Value<D>& amplitude() const { return amp_; }
  double support_radius() const { return support_; }

 private:
  SmoothFormula formula_;
  Vec<N> center_;
  double width_;
  Value<D> amp_;
  double cut_;
  double support_ = 0;
  double floor_ = 0;
};

// ---------------------------------------------------------------------------
// Grid samples: values at cell centers, multilinear in between, zero outside.
// ---------------------------------------------------------------------------

template <int N>
struct GridSpec {
  Vec<N> origin{};
  Vec<N> spacing{};
  std::array<int, N> extent{};

  void validate() const {
    for (int i = 0; i < N; ++i) {
      if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i])) throw InputError("grid: spacing must be positive");
      if (extent[i] < 2) throw InputError("grid: extent must be >= 2 cells per axis");
      if (!std::isfinite(origin[i])) throw InputError("grid: origin must be finite");
    }
  }
  std::size_t cells() const {
    std::size_t n = 1;
    for (int i = 0; i < N; ++i) n *= static_cast<std::size_t>(extent[i]);
    return n;
  }
  Vec<N> center_of(const std::array<int, N>& idx) const {
    Vec<N> x;
    for (int i = 0; i < N; ++i) x[i] = origin[i] + (idx[i] + 0.5) * spacing[i];
    return x;
  }
  std::array<int, N> unflatten(std::size_t k) const {
    std::array<int, N> idx{};
    for (int i = 0; i < N; ++i) {
      idx[i] = static_cast<int>(k % static_cast<std::size_t>(extent[i]));
      k /= static_cast<std::size_t>(extent[i]);
    }
    return idx;
  }
  std::size_t flatten(const std::array<int, N>& idx) const {
    std::size_t k = 0;
    for (int i = N - 1; i >= 0; --i) k = k * static_cast<std::size_t>(extent[i]) + static_cast<std::size_t>(idx[i]);
    return k;
  }
  Box<N> box() const {
    Vec<N> hi;
    for (int i = 0; i < N; ++i) hi[i] = origin[i] + extent[i] * spacing[i];
    return Box<N>::make(origin, hi);
  }
  double min_spacing() const { return *std::min_element(spacing.begin(), spacing.end()); }

  /// Grid of cells with spacing h covering box b.
  static GridSpec covering(const Box<N>& b, double h) {
    GridSpec g;
    for (int i = 0; i < N; ++i) {
      const double len = b.hi[i] - b.lo[i];
      const int n = std::max(2, static_cast<int>(std::ceil(len / h - 1e-9)));
      const double pad = 0.5 * (n * h - len);
      g.origin[i] = b.lo[i] - pad;
      g.spacing[i] = h;
      g.extent[i] = n;
    }
    return g;
  }
};

template <int N, int D>
class GridField final : public FieldImpl<N, D> {
 public:
  GridField(GridSpec<N> spec, std::vector<Value<D>> values, std::string source)
      : spec_(spec), values_(std::move(values)), source_(std::move(source)) {
    spec_.validate();
    if (values_.size() != spec_.cells()) throw InputError("grid field: value count does not match extent");
    for (const auto& v : values_)
      if (!all_finite(v)) throw InputError("grid field: non-finite sample");
    box_ = spec_.box();
  }

  FieldKind kind() const override { return FieldKind::GridSample; }

  Value<D> value(const Vec<N>& x) const override {
    for (int i = 0; i < N; ++i)
      if (x[i] < box_.lo[i] || x[i] >= box_.hi[i]) return Value<D>{};
    std::array<int, N> base{};
    Vec<N> frac{};
    for (int i = 0; i < N; ++i) {
      double xi = (x[i] - spec_.origin[i]) / spec_.spacing[i] - 0.5;
      xi = std::min(std::max(xi, 0.0), static_cast<double>(spec_.extent[i] - 1));
      int b = std::min(static_cast<int>(std::floor(xi)), spec_.extent[i] - 2);
      base[i] = b;
      frac[i] = xi - b;
    }
    Value<D> v{};
    for (int m = 0; m < (1 << N); ++m) {
      double w = 1.0;
      std::array<int, N> idx{};
      for (int i = 0; i < N; ++i) {
        const int bit = (m >> i) & 1;
        idx[i] = base[i] + bit;
        w *= bit ? frac[i] : 1.0 - frac[i];
      }
      if (w == 0.0) continue;
      const auto& s = values_[spec_.flatten(idx)];
      for (int c = 0; c < D; ++c) v[c] += w * s[c];
    }
    return v;
  }
  Box<N> variation_box() const override { return box_; }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    const auto iv = box_.clip_line(p, d);
    if (!(iv.hi > iv.lo)) return;
    out.push_back(iv.lo);
    out.push_back(iv.hi);
    for (int i = 0; i < N; ++i) {
      if (d[i] == 0.0) continue;
      const double h = spec_.spacing[i];
      const double a = p[i] + iv.lo * d[i], b = p[i] + iv.hi * d[i];
      const double lo = std::min(a, b), hi = std::max(a, b);
      const long k0 = static_cast<long>(std::ceil((lo - spec_.origin[i]) / h - 0.5));
      const long k1 = static_cast<long>(std::floor((hi - spec_.origin[i]) / h - 0.5));
      for (long k = std::max(0L, k0); k <= std::min<long>(k1, spec_.extent[i] - 1); ++k)
        out.push_back((spec_.origin[i] + (k + 0.5) * h - p[i]) / d[i]);
    }
  }
  bool flat_piece(const Vec<N>& x) const override {
    for (int i = 0; i < N; ++i)
      if (x[i] < box_.lo[i] || x[i] >= box_.hi[i]) return true;
    return false;
  }
  double feature_scale() const override { return spec_.min_spacing(); }
  void features(Features<N>& out) const override {
    for (const auto& c : box_.corners()) out.points.push_back(c);
    out.panel_hint = std::min(out.panel_hint, spec_.min_spacing());
  }
  std::string describe() const override { return "grid[" + std::to_string(spec_.cells()) + " cells](" + source_ + ")"; }

  const GridSpec<N>& spec() const { return spec_; }
  const std::vector<Value<D>>& values() const { return values_; }
  const std::string& source() const { return source_; }

 private:
  GridSpec<N> spec_;
  std::vector<Value<D>> values_;
  std::string source_;
  Box<N> box_;
};

// ---------------------------------------------------------------------------
// Linear combinations.
// ---------------------------------------------------------------------------

template <int N, int D>
class ScaledField final : public FieldImpl<N, D> {
 public:
  ScaledField(double lambda, Field<N, D> inner) : lambda_(lambda), inner_(std::move(inner)) {}
  FieldKind kind() const override { return FieldKind::Composite; }
  Value<D> value(const Vec<N>& x) const override {
    auto v = inner_(x);
    for (auto& c : v) c *= lambda_;
    return v;
  }
  Value<D> background() const override {
    auto v = inner_.background();
    for (auto& c : v) c *= lambda_;
    return v;
  }
  Box<N> variation_box() const override { return inner_.variation_box(); }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    inner_.impl().line_breaks(p, d, out);
  }
  bool flat_piece(const Vec<N>& x) const override { return inner_.impl().flat_piece(x); }
  double feature_scale() const override { return inner_.feature_scale(); }
  void features(Features<N>& out) const override { inner_.impl().features(out); }
  std::string describe() const override { return std::to_string(lambda_) + "*" + inner_.describe(); }
  double lambda() const { return lambda_; }
  const Field<N, D>& inner() const { return inner_; }

 private:
  double lambda_;
  Field<N, D> inner_;
};

template <int N, int D>
class SumField final : public FieldImpl<N, D> {
 public:
  SumField(Field<N, D> a, Field<N, D> b) : a_(std::move(a)), b_(std::move(b)) {}
  FieldKind kind() const override { return FieldKind::Composite; }
  Value<D> value(const Vec<N>& x) const override { return a_(x) + b_(x); }
  Value<D> background() const override { return a_.background() + b_.background(); }
  Box<N> variation_box() const override { return a_.variation_box().united(b_.variation_box()); }
  void line_breaks(const Vec<N>& p, const Vec<N>& d, std::vector<double>& out) const override {
    a_.impl().line_breaks(p, d, out);
    b_.impl().line_breaks(p, d, out);
  }
  bool flat_piece(const Vec<N>& x) const override { return a_.impl().flat_piece(x) && b_.impl().flat_piece(x); }
  double feature_scale() const override { return std::min(a_.feature_scale(), b_.feature_scale()); }
  void features(Features<N>& out) const override {
    a_.impl().features(out);
    b_.impl().features(out);
  }
  std::string describe() const override { return "(" + a_.describe() + ")+(" + b_.describe() + ")"; }
  const Field<N, D>& first() const { return a_; }
  const Field<N, D>& second() const { return b_; }

 private:
  Field<N, D> a_, b_;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

template <int N, int D>
Value<D> splat(double v) {
  Value<D> out;
  out.fill(v);
  return out;
}

template <int N, int D>
Field<N, D> piecewise(std::vector<typename PiecewiseField<N, D>::Piece> pieces, Value<D> background = {}) {
  return Field<N, D>(std::make_shared<PiecewiseField<N, D>>(std::move(pieces), background));
}

template <int N, int D>
Field<N, D> indicator(const Region<N>& r, Value<D> amp) {
  return piecewise<N, D>({{r, amp}});
}

template <int N>
Field<N, 1> indicator(const Region<N>& r, double amp = 1.0) {
  return indicator<N, 1>(r, Value<1>{amp});
}

template <int N, int D>
Field<N, D> constant(Value<D> c) {
  return piecewise<N, D>({}, c);
}

template <int N>
Field<N, 1> constant(double c) {
  return constant<N, 1>(Value<1>{c});
}

template <int N, int D>
Field<N, D> gaussian_bump(const Vec<N>& center, double width, Value<D> amp, double cut = 6.0) {
  return Field<N, D>(std::make_shared<SmoothField<N, D>>(SmoothFormula::Gaussian, center, width, amp, cut));
}

template <int N>
Field<N, 1> gaussian_bump(const Vec<N>& center, double width, double amp = 1.0, double cut = 6.0) {
  return gaussian_bump<N, 1>(center, width, Value<1>{amp}, cut);
}

template <int N, int D>
Field<N, D> cos2_bump(const Vec<N>& center, double radius, Value<D> amp) {
  return Field<N, D>(std::make_shared<SmoothField<N, D>>(SmoothFormula::Cos2, center, radius, amp));
}

/// The unit interval indicator with a rotated two-component amplitude.
inline Field<1, 2> rotated_step(double angle) {
  return indicator<1, 2>(Region<1>::interval(0.0, 1.0), Value<2>{std::cos(angle), std::sin(angle)});
}

template <int N, int D>
Field<N, D> scale(const Field<N, D>& f, double lambda) {
  if (!std::isfinite(lambda)) throw InputError("scale: factor must be finite");
  if (const auto* pw = f.template as<PiecewiseField<N, D>>()) {
    // clamp(l) then scale is not a piecewise field unless clamp is inactive
    if (!std::isfinite(pw->clamp_level())) {
      auto pieces = pw->pieces();
      for (auto& p : pieces)
        for (auto& c : p.amplitude) c *= lambda;
      Value<D> bg = pw->raw_background();
      for (auto& c : bg) c *= lambda;
      return piecewise<N, D>(std::move(pieces), bg);
    }
  }
  return Field<N, D>(std::make_shared<ScaledField<N, D>>(lambda, f));
}

template <int N, int D>
Field<N, D> add(const Field<N, D>& a, const Field<N, D>& b) {
  const auto* pa = a.template as<PiecewiseField<N, D>>();
  const auto* pb = b.template as<PiecewiseField<N, D>>();
  if (pa && pb && !std::isfinite(pa->clamp_level()) && !std::isfinite(pb->clamp_level())) {
    auto pieces = pa->pieces();
    pieces.insert(pieces.end(), pb->pieces().begin(), pb->pieces().end());
    return piecewise<N, D>(std::move(pieces), pa->raw_background() + pb->raw_background());
  }
  return Field<N, D>(std::make_shared<SumField<N, D>>(a, b));
}

template <int N, int D>
Field<N, D> subtract(const Field<N, D>& a, const Field<N, D>& b) {
  return add(a, scale(b, -1.0));
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

template <int N, int D>
Value<D> eval_field(const Field<N, D>& f, const std::type_identity_t<Vec<N>>& x) {
  if (!all_finite(x)) throw InputError("eval_field: non-finite coordinate");
  return f(x);
}

/// Sample at cell centers.
template <int N, int D>
Field<N, D> sample(const Field<N, D>& f, const GridSpec<N>& g) {
  g.validate();
  std::vector<Value<D>> values(g.cells());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(g.center_of(g.unflatten(k)));
  return Field<N, D>(std::make_shared<GridField<N, D>>(g, std::move(values), f.describe()));
}

inline constexpr std::size_t kMaxGridCells = 4'000'000;

/// Grid covering the variation box at feature_scale/8 (used when a field kind
/// is not closed under an operation).
template <int N, int D>
GridSpec<N> default_resample_grid(const Field<N, D>& f) {
  const Box<N> vb = f.variation_box();
  if (vb.empty) return GridSpec<N>::covering(Box<N>::make(Vec<N>{}, splat<N, N>(1.0)), 0.5);
  if (!vb.bounded()) throw CapabilityError("resampling requires a bounded variation box");
  double h = f.feature_scale() / 8.0;
  const Box<N> b = vb.expanded(h);
  double cells = 1.0;
  for (int i = 0; i < N; ++i) cells *= (b.hi[i] - b.lo[i]) / h;
  if (cells > static_cast<double>(kMaxGridCells)) h *= std::pow(cells / kMaxGridCells, 1.0 / N);
  return GridSpec<N>::covering(b, h);
}

template <int N, int D>
Field<N, D> truncate(const Field<N, D>& f, double l) {
  if (!(l >= 0.0) || std::isnan(l)) throw InputError("truncate: level must be nonnegative");
  if (const auto* pw = f.template as<PiecewiseField<N, D>>())
    return Field<N, D>(
        std::make_shared<PiecewiseField<N, D>>(pw->pieces(), pw->raw_background(), std::min(l, pw->clamp_level())));
  const auto* g = f.template as<GridField<N, D>>();
  const Field<N, D> grid = g ? f : sample(f, default_resample_grid(f));
  const auto* gg = grid.template as<GridField<N, D>>();
  std::vector<Value<D>> vals = gg->values();
  for (auto& v : vals) v = clamp_value<D>(v, l);
  return Field<N, D>(std::make_shared<GridField<N, D>>(gg->spec(), std::move(vals),
                                                       "truncate(" + gg->source() + "," + std::to_string(l) + ")"));
}

// ---------------------------------------------------------------------------
// Jump sets
// ---------------------------------------------------------------------------

enum class PatchKind { Point, Face, Sphere };

template <int N, int D>
struct JumpPatch {
  PatchKind kind = PatchKind::Point;
  Vec<N> anchor{};  // point / sphere center / face lo corner
  Vec<N> upper{};   // face hi corner (equal to anchor along `axis`)
  int axis = 0;
  double radius = 0;
  Vec<N> normal{};  // constant normal (point, face); spheres use the outward radial
  Value<D> trace_plus{};   // value on the side the normal points to
  Value<D> trace_minus{};
  double measure = 0;

  double jump_size() const { return std::sqrt(diff_pow<D>(trace_plus, trace_minus, 2.0)); }
};

template <int N, int D>
struct JumpSetSpec {
  std::vector<JumpPatch<N, D>> patches;

  double total_measure() const {
    double s = 0;
    for (const auto& p : patches) s += p.measure;
    return s;
  }
};

namespace detail {

template <int N, int D>
bool values_close(const Value<D>& a, const Value<D>& b) {
  for (int i = 0; i < D; ++i)
    if (std::abs(a[i] - b[i]) > 1e-12 * (1.0 + std::abs(a[i]) + std::abs(b[i]))) return false;
  return true;
}

template <int N>
void collect_boundaries(const Region<N>& r, std::vector<Region<N>>& out) {
  switch (r.kind) {
    case RegionKind::Box:
    case RegionKind::Ball:
      out.push_back(r);
      break;
    case RegionKind::HalfSpace:
      throw CapabilityError("jump_set_of: half-space interfaces have infinite measure");
    case RegionKind::Complement:
    case RegionKind::Union:
      for (const auto& c : r.children) collect_boundaries(c, out);
      break;
  }
}

template <int N>
std::vector<Vec<N>> sphere_probe_directions() {
  std::vector<Vec<N>> dirs;
  if constexpr (N == 2) {
    for (int k = 0; k < 12; ++k) {
      const double a = 2 * kPi * (k + 0.37) / 12;
      dirs.push_back({std::cos(a), std::sin(a)});
    }
  } else if constexpr (N == 3) {
    for (int k = 0; k < 16; ++k) {
      const double z = -1.0 + (2.0 * k + 1.0) / 16.0;
      const double a = 2.399963229728653 * k;
      const double s = std::sqrt(1 - z * z);
      dirs.push_back({s * std::cos(a), s * std::sin(a), z});
    }
  }
  return dirs;
}

}  // namespace detail

/// Interfaces of a piecewise-constant field, with traces read off the field.
template <int N, int D>
JumpSetSpec<N, D> jump_set_of(const Field<N, D>& f) {
  const auto* pw = f.template as<PiecewiseField<N, D>>();
  if (!pw) throw CapabilityError("jump_set_of: requires a piecewise-constant field");
  JumpSetSpec<N, D> js;

  if constexpr (N == 1) {
    std::vector<double> pts;
    pw->line_breaks(Vec<1>{0.0}, Vec<1>{1.0}, pts);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double left = i == 0 ? pts[i] - 1.0 : 0.5 * (pts[i - 1] + pts[i]);
      const double right = i + 1 == pts.size() ? pts[i] + 1.0 : 0.5 * (pts[i] + pts[i + 1]);
      JumpPatch<1, D> p;
      p.kind = PatchKind::Point;
      p.anchor = {pts[i]};
      p.upper = p.anchor;
      p.normal = {1.0};
      p.trace_plus = f(Vec<1>{right});
      p.trace_minus = f(Vec<1>{left});
      p.measure = 1.0;
      if (!detail::values_close<N, D>(p.trace_plus, p.trace_minus)) js.patches.push_back(p);
    }
    return js;
  } else {
    std::vector<Region<N>> parts;
    for (const auto& pc : pw->pieces()) detail::collect_boundaries(pc.region, parts);

    std::vector<JumpPatch<N, D>> candidates;
    for (const auto& r : parts) {
      if (r.kind == RegionKind::Ball) {
        JumpPatch<N, D> p;
        p.kind = PatchKind::Sphere;
        p.anchor = r.a;
        p.radius = r.scalar;
        p.measure = sphere_measure(N) * std::pow(r.scalar, N - 1);
        candidates.push_back(p);
      } else {
        for (int ax = 0; ax < N; ++ax)
          for (int side = 0; side < 2; ++side) {
            JumpPatch<N, D> p;
            p.kind = PatchKind::Face;
            p.axis = ax;
            p.anchor = r.a;
            p.upper = r.b;
            const double c = side ? r.b[ax] : r.a[ax];
            p.anchor[ax] = c;
            p.upper[ax] = c;
            p.normal = unit_vector<N>(ax);
            if (!side) p.normal[ax] = -1.0;
            double m = 1.0;
            for (int i = 0; i < N; ++i)
              if (i != ax) m *= r.b[i] - r.a[i];
            p.measure = m;
            candidates.push_back(p);
          }
      }
    }

    auto same_geometry = [](const JumpPatch<N, D>& a, const JumpPatch<N, D>& b) {
      if (a.kind != b.kind) return false;
      if (a.kind == PatchKind::Sphere) return a.anchor == b.anchor && a.radius == b.radius;
      return a.axis == b.axis && a.anchor == b.anchor && a.upper == b.upper;
    };

    double scale = 1.0;
    for (const auto& r : parts) scale = std::max(scale, r.bounding_box().diameter());
    const double delta = 1e-9 * scale;

    for (std::size_t i = 0; i < candidates.size(); ++i) {
      bool dup = false;
      for (std::size_t j = 0; j < i && !dup; ++j) dup = same_geometry(candidates[i], candidates[j]);
      if (dup) continue;
      auto p = candidates[i];

      // probe points on the patch with their normals
      std::vector<std::pair<Vec<N>, Vec<N>>> probes;
      if (p.kind == PatchKind::Sphere) {
        for (const auto& dir : detail::sphere_probe_directions<N>()) probes.push_back({p.anchor + p.radius * dir, dir});
      } else {
        const double fr[3] = {0.23, 0.5, 0.81};
        const int per = 3;
        int total = 1;
        for (int k = 0; k < N - 1; ++k) total *= per;
        for (int m = 0; m < total; ++m) {
          Vec<N> x = p.anchor;
          int mm = m;
          for (int ax = 0; ax < N; ++ax) {
            if (ax == p.axis) continue;
            x[ax] = p.anchor[ax] + fr[mm % per] * (p.upper[ax] - p.anchor[ax]);
            mm /= per;
          }
          probes.push_back({x, p.normal});
        }
      }
      bool first = true;
      for (const auto& [x, nu] : probes) {
        const Value<D> up = f(x + delta * nu);
        const Value<D> dn = f(x - delta * nu);
        if (first) {
          p.trace_plus = up;
          p.trace_minus = dn;
          first = false;
        } else if (!detail::values_close<N, D>(up, p.trace_plus) || !detail::values_close<N, D>(dn, p.trace_minus)) {
          throw CapabilityError("jump_set_of: interface with non-uniform traces (overlapping geometry unsupported)");
        }
      }
      if (!detail::values_close<N, D>(p.trace_plus, p.trace_minus)) js.patches.push_back(p);
    }
    return js;
  }
}

}  // namespace besov
