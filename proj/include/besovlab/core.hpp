#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace besov {

template <int N>
using Vec = std::array<double, N>;

template <int D>
using Value = std::array<double, D>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: out-of-range parameters, non-finite coordinates.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The request is valid but not supported by the shipped geometry/kernels.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A singular integral was detected to be infinite (or above the overflow guard).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A grid path was asked to resolve features finer than its source data.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Least-squares extrapolation without enough independent rows.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Config validation failure; `path` names the offending key (e.g. "params.r").
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)), what_(what) {}
  const std::string& path() const { return path_; }
  const std::string& what_only() const { return what_; }

 private:
  std::string path_;
  std::string what_;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kOverflowGuard = 1e12;

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

template <std::size_t K>
double dot(const std::array<double, K>& a, const std::array<double, K>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < K; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t K>
double norm(const std::array<double, K>& a) {
  return std::sqrt(dot(a, a));
}

template <std::size_t K>
std::array<double, K> operator+(std::array<double, K> a, const std::array<double, K>& b) {
  for (std::size_t i = 0; i < K; ++i) a[i] += b[i];
  return a;
}

template <std::size_t K>
std::array<double, K> operator-(std::array<double, K> a, const std::array<double, K>& b) {
  for (std::size_t i = 0; i < K; ++i) a[i] -= b[i];
  return a;
}

template <std::size_t K>
std::array<double, K> operator*(double s, std::array<double, K> a) {
  for (auto& v : a) v *= s;
  return a;
}

template <std::size_t K>
bool all_finite(const std::array<double, K>& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

template <int N>
Vec<N> unit_vector(int axis) {
  Vec<N> e{};
  e[axis] = 1.0;
  return e;
}

// |a - b|^q for value vectors.
template <int D>
double diff_pow(const Value<D>& a, const Value<D>& b, double q) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  if (s == 0.0) return 0.0;
  if (q == 2.0) return s;
  return std::pow(s, 0.5 * q);
}

template <int D>
double abs_pow(const Value<D>& a, double q) {
  return diff_pow<D>(a, Value<D>{}, q);
}

// ---------------------------------------------------------------------------
// Sphere measures
// ---------------------------------------------------------------------------

/// H^{N-1}(S^{N-1}) with the unnormalized convention: 2, 2*pi, 4*pi.
inline double sphere_measure(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: throw CapabilityError("sphere_measure: dimension " + std::to_string(dim) + " unsupported (1..3)");
  }
}

/// L^N(B_1(0)) = H^{N-1}(S^{N-1}) / N.
inline double unit_ball_volume(int dim) { return sphere_measure(dim) / dim; }

// ---------------------------------------------------------------------------
// Scale: a positive number carried by its logarithm, so that kernels can be
// parameterized far below the double range (e.g. eps = e^{-5000}).
// ---------------------------------------------------------------------------

struct Scale {
  double log_value = 0.0;

  static Scale of(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("scale must be positive and finite");
    return Scale{std::log(v)};
  }
  static Scale from_log(double lv) {
    if (!std::isfinite(lv)) throw InputError("log-scale must be finite");
    return Scale{lv};
  }
  double value() const { return std::exp(log_value); }
  bool representable() const { return log_value > -700.0 && log_value < 700.0; }
};

// ---------------------------------------------------------------------------
// Deterministic randomness: every stratum owns its own stream, derived from
// (seed, stratum id) by a SplitMix64 finalizer. Results never depend on the
// order in which strata are visited.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

class StratumRng {
 public:
  StratumRng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}
  // Uniform in [0, 1) with 53 random bits; identical on every platform.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// parallel_for: static partition of [0, n) over `threads` workers. Callers
// write into per-index slots and reduce serially, so output is independent of
// the thread count.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1], expanded from boost's half-rules.
// ---------------------------------------------------------------------------

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned Points>
const GaussRule& gauss_legendre() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, Points>;
    GaussRule r;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        r.nodes.push_back(0.0);
        r.weights.push_back(w[i]);
      } else {
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
        r.nodes.push_back(x[i]);
        r.weights.push_back(w[i]);
      }
    }
    return r;
  }();
  return rule;
}

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <unsigned Points = 8, typename F>
double gauss_composite(F&& f, double a, double b, int panels = 1) {
  const auto& g = gauss_legendre<Points>();
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double half = 0.5 * width;
    const double mid = lo + half;
    double s = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(mid + half * g.nodes[i]);
    total += half * s;
  }
  return total;
}

}  // namespace besov
