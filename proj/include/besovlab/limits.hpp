#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "besovlab/core.hpp"
#include "besovlab/quadrature.hpp"
#include "besovlab/seminorms.hpp"

namespace besov {

enum class GridKind { Geometric, LogUniform, LogLog, Explicit };

/// eps values, always carried as logs.
struct EpsilonGrid {
  GridKind kind = GridKind::Geometric;
  double eps0 = 0.2, ratio = 0.5;
  double ln_lo = 2.0, ln_hi = 9.0;  // LogUniform: |ln eps| from ln_lo to ln_hi
  int count = 10;
  std::vector<double> log_values;    // Explicit

  static EpsilonGrid geometric(double eps0, double ratio, int count) {
    EpsilonGrid g;
    g.kind = GridKind::Geometric;
    g.eps0 = eps0;
    g.ratio = ratio;
    g.count = count;
    g.validate();
    return g;
  }
  /// eps = e^{-L}, L uniform in [ln_lo, ln_hi].
  static EpsilonGrid log_uniform(double ln_lo, double ln_hi, int count) {
    EpsilonGrid g;
    g.kind = GridKind::LogUniform;
    g.ln_lo = ln_lo;
    g.ln_hi = ln_hi;
    g.count = count;
    g.validate();
    return g;
  }
  /// eps = e^{-L}, ln L uniform in [ln ln_lo, ln ln_hi] (reaches far below the
  /// double range).
  static EpsilonGrid log_log(double ln_lo, double ln_hi, int count) {
    EpsilonGrid g;
    g.kind = GridKind::LogLog;
    g.ln_lo = ln_lo;
    g.ln_hi = ln_hi;
    g.count = count;
    g.validate();
    return g;
  }
  static EpsilonGrid explicit_list(const std::vector<double>& eps) {
    EpsilonGrid g;
    g.kind = GridKind::Explicit;
    for (double e : eps) {
      if (!(e > 0.0)) throw InputError("epsilon grid: values must be positive");
      g.log_values.push_back(std::log(e));
    }
    g.count = static_cast<int>(eps.size());
    g.validate();
    return g;
  }
  static EpsilonGrid explicit_logs(std::vector<double> logs) {
    EpsilonGrid g;
    g.kind = GridKind::Explicit;
    g.log_values = std::move(logs);
    g.count = static_cast<int>(g.log_values.size());
    g.validate();
    return g;
  }
  /// Variation / Besov-constant default.
  static EpsilonGrid default_variation() { return geometric(0.2, 0.5, 10); }
  /// Gagliardo-constant default: e^{-2} ... e^{-9}.
  static EpsilonGrid default_gagliardo() { return log_uniform(2.0, 9.0, 8); }

  void validate() const {
    switch (kind) {
      case GridKind::Geometric:
        if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("grid.ratio", "ratio must lie in (0,1)");
        if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw ValidationError("grid.eps0", "eps0 must be positive");
        if (count < 4) throw ValidationError("grid.count", "count must be >= 4");
        break;
      case GridKind::LogUniform:
      case GridKind::LogLog:
        if (!(ln_hi > ln_lo) || !(ln_lo > 0.0)) throw ValidationError("grid.ln_range", "need 0 < ln_lo < ln_hi");
        if (count < 4) throw ValidationError("grid.count", "count must be >= 4");
        break;
      case GridKind::Explicit: {
        if (log_values.size() < 4) throw ValidationError("grid.values", "need at least 4 values");
        for (std::size_t i = 1; i < log_values.size(); ++i)
          if (!(log_values[i] < log_values[i - 1])) throw ValidationError("grid.values", "eps must be strictly decreasing");
        break;
      }
    }
  }

  std::vector<Scale> values() const {
    std::vector<Scale> out;
    switch (kind) {
      case GridKind::Geometric:
        for (int i = 0; i < count; ++i) out.push_back(Scale::from_log(std::log(eps0) + i * std::log(ratio)));
        break;
      case GridKind::LogUniform:
        for (int i = 0; i < count; ++i) out.push_back(Scale::from_log(-(ln_lo + (ln_hi - ln_lo) * i / (count - 1))));
        break;
      case GridKind::LogLog:
        for (int i = 0; i < count; ++i)
          out.push_back(Scale::from_log(-std::exp(std::log(ln_lo) + (std::log(ln_hi) - std::log(ln_lo)) * i / (count - 1))));
        break;
      case GridKind::Explicit:
        for (double l : log_values) out.push_back(Scale::from_log(l));
        break;
    }
    return out;
  }

  std::string describe() const {
    switch (kind) {
      case GridKind::Geometric:
        return "geometric(eps0=" + detail::fmt(eps0) + ",ratio=" + detail::fmt(ratio) + ",count=" + std::to_string(count) + ")";
      case GridKind::LogUniform:
        return "log_uniform(|ln eps| in [" + detail::fmt(ln_lo) + "," + detail::fmt(ln_hi) + "],count=" +
               std::to_string(count) + ")";
      case GridKind::LogLog:
        return "log_log(|ln eps| log-spaced in [" + detail::fmt(ln_lo) + "," + detail::fmt(ln_hi) + "],count=" +
               std::to_string(count) + ")";
      case GridKind::Explicit:
        return "explicit(count=" + std::to_string(count) + ")";
    }
    return "?";
  }
};

struct SweepRow {
  double log_epsilon = 0;
  double epsilon = 0;  // 0 when below the double range
  double value = std::numeric_limits<double>::quiet_NaN();
  double error = 0;
  bool flagged = false;
  std::string flag;  // error text for flagged rows, "low_confidence" for budget-limited rows
  std::string provenance;
};

enum class ExtrapolationModel { ConstantTail, AffineInverseLog, AffinePower };

inline std::string to_string(ExtrapolationModel m) {
  switch (m) {
    case ExtrapolationModel::ConstantTail: return "constant-tail";
    case ExtrapolationModel::AffineInverseLog: return "affine-in-inverse-log";
    case ExtrapolationModel::AffinePower: return "affine-in-power";
  }
  return "?";
}

struct Extrapolation {
  ExtrapolationModel model = ExtrapolationModel::ConstantTail;
  double power = 1.0;  // AffinePower exponent s
  double limit = 0;
  double uncertainty = 0;
  int rows_used = 0;
  std::string describe() const {
    std::string s = to_string(model);
    if (model == ExtrapolationModel::AffinePower) s += "(s=" + detail::fmt(power) + ")";
    return s;
  }
};

struct EpsilonSweepResult {
  std::string functional;
  std::string grid;
  std::vector<SweepRow> rows;
  int tail_window = 0;
  double tail_min = std::numeric_limits<double>::quiet_NaN();
  double tail_max = std::numeric_limits<double>::quiet_NaN();
  std::optional<Extrapolation> extrapolated;

  std::vector<const SweepRow*> tail_rows() const {
    std::vector<const SweepRow*> out;
    const std::size_t start = rows.size() > static_cast<std::size_t>(tail_window) ? rows.size() - tail_window : 0;
    for (std::size_t i = start; i < rows.size(); ++i)
      if (!rows[i].flagged || rows[i].flag == "low_confidence") out.push_back(&rows[i]);
    return out;
  }
};

using SweepFunctional = std::function<FunctionalValue(Scale eps, const QuadBudget& budget)>;

/// Evaluates fn on every eps of the grid (rows concurrently, each with its own
/// seed stream). Row failures are recorded and the sweep continues.
inline EpsilonSweepResult epsilon_sweep(const std::string& functional_id, const EpsilonGrid& grid,
                                        const SweepFunctional& fn, const QuadBudget& budget,
                                        std::optional<int> tail_window = std::nullopt) {
  grid.validate();
  budget.validate();
  const auto eps = grid.values();
  EpsilonSweepResult res;
  res.functional = functional_id;
  res.grid = grid.describe();
  res.rows.resize(eps.size());
  const int outer = std::min<int>(budget.threads, static_cast<int>(eps.size()));
  QuadBudget inner = budget;
  inner.threads = outer > 1 ? 1 : budget.threads;
  parallel_for(eps.size(), outer, [&](std::size_t i) {
    SweepRow& row = res.rows[i];
    row.log_epsilon = eps[i].log_value;
    row.epsilon = eps[i].value();
    try {
      const FunctionalValue v = fn(eps[i], inner.with_seed(derive_seed(budget.rng_seed, i)));
      row.value = v.value;
      row.error = v.error_estimate;
      row.provenance = v.provenance;
      if (!std::isfinite(v.value)) {
        row.flagged = true;
        row.flag = "non-finite value";
      } else if (v.low_confidence) {
        row.flagged = true;
        row.flag = "low_confidence";
      }
    } catch (const std::exception& e) {
      row.flagged = true;
      row.flag = e.what();
      row.value = std::numeric_limits<double>::quiet_NaN();
    }
  });
  bool any = false;
  for (const auto& r : res.rows) any = any || !r.flagged || r.flag == "low_confidence";
  if (!any) throw Error("epsilon_sweep(" + functional_id + "): every row failed; first error: " + res.rows.front().flag);
  const int n = static_cast<int>(res.rows.size());
  res.tail_window = tail_window ? std::clamp(*tail_window, 1, n) : (n + 2) / 3;
  for (const SweepRow* r : res.tail_rows()) {
    res.tail_min = std::isnan(res.tail_min) ? r->value : std::min(res.tail_min, r->value);
    res.tail_max = std::isnan(res.tail_max) ? r->value : std::max(res.tail_max, r->value);
  }
  return res;
}

/// Limit estimate from the tail window.
inline Extrapolation extrapolate(const EpsilonSweepResult& sw, ExtrapolationModel model, double power = 1.0) {
  const auto rows = sw.tail_rows();
  if (rows.size() < 3) throw FitError("extrapolate: needs at least 3 valid tail rows, have " + std::to_string(rows.size()));
  Extrapolation ex;
  ex.model = model;
  ex.power = power;
  ex.rows_used = static_cast<int>(rows.size());
  const std::size_t n = rows.size();
  if (model == ExtrapolationModel::ConstantTail) {
    double wsum = 0, vsum = 0, esum = 0, lo = rows[0]->value, hi = rows[0]->value;
    bool weighted = true;
    for (const auto* r : rows) weighted = weighted && r->error > 0.0;
    for (const auto* r : rows) {
      const double w = weighted ? 1.0 / (r->error * r->error) : 1.0;
      wsum += w;
      vsum += w * r->value;
      esum += r->error;
      lo = std::min(lo, r->value);
      hi = std::max(hi, r->value);
    }
    ex.limit = vsum / wsum;
    ex.uncertainty = (hi - lo) + esum / n;
    return ex;
  }
  if (model == ExtrapolationModel::AffinePower && !(power > 0.0)) throw FitError("extrapolate: power must be positive");
  std::vector<double> x(n), y(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double L = -rows[i]->log_epsilon;
    x[i] = model == ExtrapolationModel::AffineInverseLog ? 1.0 / L : std::exp(power * rows[i]->log_epsilon);
    y[i] = rows[i]->value;
    e[i] = rows[i]->error;
  }
  // least squares y = a + b x
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  double xscale = 0;
  for (double v : x) xscale = std::max(xscale, std::abs(v));
  if (!(std::abs(det) > 1e-12 * n * n * xscale * xscale) || !std::isfinite(det))
    throw FitError("extrapolate: degenerate fit (abscissae coincide)");
  const double b = (n * sxy - sx * sy) / det;
  const double a = (sy - b * sx) / n;
  // a = sum c_i y_i
  double prop = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (sxx - sx * x[i]) / det;
    prop += std::abs(c) * e[i];
    const double r = y[i] - a - b * x[i];
    rss += r * r;
  }
  const double s2 = n > 2 ? rss / (n - 2) : 0.0;
  ex.limit = a;
  ex.uncertainty = 2.0 * std::sqrt(s2 * sxx / det) + prop;
  return ex;
}

enum class ChainKind { Sandwich, KernelEquivalence, JumpChain };

inline std::string to_string(ChainKind k) {
  switch (k) {
    case ChainKind::Sandwich: return "sandwich";
    case ChainKind::KernelEquivalence: return "kernel-equivalence";
    case ChainKind::JumpChain: return "jump-chain";
  }
  return "?";
}

struct ChainTerm {
  std::string name;
  double value = 0;
  double error = 0;
  std::string provenance;
};

struct ChainVerdict {
  ChainKind kind = ChainKind::JumpChain;
  std::string id;
  std::vector<ChainTerm> terms;
  double rel_tolerance = 0;
  double tolerance = 0;  // absolute
  bool pass = false;
  double worst_violation = 0;
};

/// Absolute tolerance rel_tol * max(1, max |term|). Sandwich terms must be
/// named lower, mid, upper; the other chains compare all terms pairwise.
inline ChainVerdict chain_check(ChainKind kind, const std::vector<ChainTerm>& terms, double rel_tol,
                                std::string id = {}) {
  if (!(rel_tol >= 0.0)) throw InputError("chain_check: tolerance must be nonnegative");
  ChainVerdict v;
  v.kind = kind;
  v.id = id.empty() ? to_string(kind) : std::move(id);
  v.terms = terms;
  v.rel_tolerance = rel_tol;
  double scale = 1.0;
  for (const auto& t : terms) {
    if (!std::isfinite(t.value)) throw InputError("chain_check: term '" + t.name + "' is not finite");
    scale = std::max(scale, std::abs(t.value));
  }
  v.tolerance = rel_tol * scale;
  if (kind == ChainKind::Sandwich) {
    auto find = [&](const std::string& n) {
      for (const auto& t : terms)
        if (t.name == n) return t.value;
      throw InputError("chain_check: sandwich needs term '" + n + "'");
    };
    const double lo = find("lower"), mid = find("mid"), hi = find("upper");
    v.worst_violation = std::max({0.0, lo - mid, mid - hi});
  } else {
    if (terms.size() < 2) throw InputError("chain_check: needs at least two terms");
    double mn = terms[0].value, mx = terms[0].value;
    for (const auto& t : terms) {
      mn = std::min(mn, t.value);
      mx = std::max(mx, t.value);
    }
    v.worst_violation = mx - mn;
  }
  v.pass = v.worst_violation <= v.tolerance;
  return v;
}

}  // namespace besov
