#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "besovlab/core.hpp"
#include "besovlab/fields.hpp"
#include "besovlab/kernels.hpp"
#include "besovlab/limits.hpp"
#include "besovlab/mollifiers.hpp"
#include "besovlab/quadrature.hpp"
#include "besovlab/region.hpp"
#include "besovlab/seminorms.hpp"

namespace besov::config {

using json = nlohmann::ordered_json;

/// A view into the config tree that remembers where it is, so every
/// validation error names the offending field path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }

  Node at(const std::string& key) const {
    if (!has(key)) throw ValidationError(child_path(key), "required field is missing");
    return Node((*j_)[key], child_path(key));
  }
  std::optional<Node> opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return Node((*j_)[key], child_path(key));
  }
  Node index(std::size_t i) const { return Node((*j_)[i], path_ + "[" + std::to_string(i) + "]"); }

  std::vector<Node> items() const {
    if (!j_->is_array()) throw ValidationError(path_, "expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); ++i) out.push_back(index(i));
    return out;
  }

  double as_number() const {
    if (!j_->is_number()) throw ValidationError(path_, "expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) throw ValidationError(path_, "must be finite");
    return v;
  }
  std::string as_string() const {
    if (!j_->is_string()) throw ValidationError(path_, "expected a string");
    return j_->get<std::string>();
  }
  bool as_bool() const {
    if (!j_->is_boolean()) throw ValidationError(path_, "expected true or false");
    return j_->get<bool>();
  }
  long long as_int() const {
    if (!j_->is_number_integer() && !j_->is_number_unsigned()) throw ValidationError(path_, "expected an integer");
    return j_->get<long long>();
  }
  std::uint64_t as_u64() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    if (j_->is_number_integer() && j_->get<long long>() >= 0) return static_cast<std::uint64_t>(j_->get<long long>());
    throw ValidationError(path_, "expected a nonnegative integer");
  }

  double number(const std::string& key, double def) const { return has(key) ? at(key).as_number() : def; }
  double number(const std::string& key) const { return at(key).as_number(); }
  long long integer(const std::string& key, long long def) const { return has(key) ? at(key).as_int() : def; }
  std::string string(const std::string& key, const std::string& def) const {
    return has(key) ? at(key).as_string() : def;
  }
  std::string string(const std::string& key) const { return at(key).as_string(); }
  bool boolean(const std::string& key, bool def) const { return has(key) ? at(key).as_bool() : def; }

  template <int N>
  Vec<N> vec() const {
    Vec<N> v{};
    if (N == 1 && j_->is_number()) {
      v[0] = as_number();
      return v;
    }
    if (!j_->is_array() || j_->size() != static_cast<std::size_t>(N))
      throw ValidationError(path_, "expected an array of " + std::to_string(N) + " numbers");
    for (int i = 0; i < N; ++i) v[i] = index(i).as_number();
    return v;
  }
  template <int D>
  Value<D> value() const {
    if (j_->is_number()) {
      Value<D> v{};
      if (D != 1) throw ValidationError(path_, "expected an array of " + std::to_string(D) + " components");
      v[0] = as_number();
      return v;
    }
    return vec<D>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& n : items()) out.push_back(n.as_number());
    return out;
  }

  void fail(const std::string& what) const { throw ValidationError(path_, what); }

 private:
  const json* j_;
  std::string path_;
};

template <int N>
Region<N> parse_region(const Node& n) {
  const std::string type = n.string("type");
  try {
    if (type == "interval") {
      if (N != 1) n.at("type").fail("interval regions need dimension 1 (use box)");
      Vec<N> lo{}, hi{};
      lo[0] = n.number("lo");
      hi[0] = n.number("hi");
      return Region<N>::box(lo, hi);
    }
    if (type == "box") return Region<N>::box(n.at("lo").template vec<N>(), n.at("hi").template vec<N>());
    if (type == "ball") return Region<N>::ball(n.at("center").template vec<N>(), n.number("radius"));
    if (type == "half_space") return Region<N>::half_space(n.at("normal").template vec<N>(), n.number("offset", 0.0));
    if (type == "complement") return Region<N>::complement_of(parse_region<N>(n.at("of")));
    if (type == "union") {
      std::vector<Region<N>> parts;
      for (const auto& c : n.at("parts").items()) parts.push_back(parse_region<N>(c));
      return Region<N>::union_of(std::move(parts));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(n.path(), e.what());
  }
  n.at("type").fail("unknown region type '" + type + "'");
  return {};
}

template <int N, int D>
Field<N, D> parse_field(const Node& n) {
  const std::string type = n.string("type");
  try {
    if (type == "indicator") {
      const Value<D> amp = n.has("amplitude") ? n.at("amplitude").template value<D>() : splat<N, D>(1.0);
      return indicator<N, D>(parse_region<N>(n.at("region")), amp);
    }
    if (type == "piecewise") {
      std::vector<typename PiecewiseField<N, D>::Piece> pieces;
      for (const auto& p : n.at("pieces").items())
        pieces.push_back({parse_region<N>(p.at("region")), p.at("amplitude").template value<D>()});
      const Value<D> bg = n.has("background") ? n.at("background").template value<D>() : Value<D>{};
      return piecewise<N, D>(std::move(pieces), bg);
    }
    if (type == "constant") return constant<N, D>(n.at("value").template value<D>());
    if (type == "gaussian_bump") {
      const Value<D> amp = n.has("amplitude") ? n.at("amplitude").template value<D>() : splat<N, D>(1.0);
      return gaussian_bump<N, D>(n.at("center").template vec<N>(), n.number("width"), amp, n.number("cut", 6.0));
    }
    if (type == "cos2_bump") {
      const Value<D> amp = n.has("amplitude") ? n.at("amplitude").template value<D>() : splat<N, D>(1.0);
      return cos2_bump<N, D>(n.at("center").template vec<N>(), n.number("radius"), amp);
    }
    if (type == "rotated_step") {
      if constexpr (N == 1 && D == 2) {
        return rotated_step(n.number("angle"));
      } else {
        n.at("type").fail("rotated_step needs dimension 1 and components 2");
      }
    }
    if (type == "scaled") return scale(parse_field<N, D>(n.at("field")), n.number("factor"));
    if (type == "sum") {
      const auto parts = n.at("fields").items();
      if (parts.empty()) n.at("fields").fail("need at least one field");
      Field<N, D> acc = parse_field<N, D>(parts.front());
      for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parse_field<N, D>(parts[i]));
      return acc;
    }
    if (type == "truncate") return truncate(parse_field<N, D>(n.at("field")), n.number("level"));
    if (type == "sample") {
      GridSpec<N> g;
      g.origin = n.at("origin").template vec<N>();
      g.spacing = n.at("spacing").template vec<N>();
      const Vec<N> ext = n.at("extent").template vec<N>();
      for (int i = 0; i < N; ++i) g.extent[i] = static_cast<int>(ext[i]);
      return sample(parse_field<N, D>(n.at("field")), g);
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(n.path(), e.what());
  }
  n.at("type").fail("unknown field type '" + type + "'");
  return constant<N, D>(Value<D>{});
}

inline MollifierKind parse_mollifier_kind(const Node& n) {
  const std::string k = n.as_string();
  if (k == "tent") return MollifierKind::Tent;
  if (k == "truncated_gaussian") return MollifierKind::TruncatedGaussian;
  if (k == "smooth_bump") return MollifierKind::SmoothBump;
  if (k == "signed_test") return MollifierKind::SignedTest;
  n.fail("unknown mollifier kind '" + k + "'");
  return MollifierKind::Tent;
}

template <int N>
MollifierSpec<N> mollifier_of(MollifierKind k) {
  switch (k) {
    case MollifierKind::Tent: return MollifierSpec<N>::tent();
    case MollifierKind::TruncatedGaussian: return MollifierSpec<N>::truncated_gaussian();
    case MollifierKind::SmoothBump: return MollifierSpec<N>::smooth_bump();
    case MollifierKind::SignedTest: return MollifierSpec<N>::signed_test();
  }
  return MollifierSpec<N>::tent();
}

/// {"kind": "tent"} or {"terms": [{"kind": ..., "weight": ...}, ...]}.
template <int N>
MollifierSpec<N> parse_mollifier(const Node& n) {
  try {
    if (n.has("terms")) {
      std::optional<MollifierSpec<N>> acc;
      for (const auto& t : n.at("terms").items()) {
        const auto m = mollifier_of<N>(parse_mollifier_kind(t.at("kind"))).scaled(t.number("weight", 1.0));
        acc = acc ? acc->plus(m) : m;
      }
      if (!acc) n.at("terms").fail("need at least one term");
      return *acc;
    }
    return mollifier_of<N>(parse_mollifier_kind(n.at("kind"))).scaled(n.number("weight", 1.0));
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(n.path(), e.what());
  }
}

struct KernelEntry {
  KernelFamily family;
  ExtrapolationModel model = ExtrapolationModel::AffinePower;
  double power = 1.0;
};

inline ExtrapolationModel parse_model(const Node& n) {
  const std::string m = n.as_string();
  if (m == "constant-tail") return ExtrapolationModel::ConstantTail;
  if (m == "affine-in-inverse-log") return ExtrapolationModel::AffineInverseLog;
  if (m == "affine-in-power") return ExtrapolationModel::AffinePower;
  n.fail("unknown extrapolation model '" + m + "'");
  return ExtrapolationModel::ConstantTail;
}

struct ModelChoice {
  ExtrapolationModel model;
  double power = 1.0;
};

inline ModelChoice parse_model_choice(const std::optional<Node>& n, ModelChoice def) {
  if (!n) return def;
  ModelChoice c = def;
  if (n->has("model")) c.model = parse_model(n->at("model"));
  c.power = n->number("power", def.power);
  if (c.model == ExtrapolationModel::AffinePower && !(c.power > 0.0)) n->at("power").fail("power must be positive");
  return c;
}

inline KernelFamily parse_kernel_family(const Node& n, int dim, std::optional<double> omega_override = std::nullopt) {
  const std::string k = n.string("kind");
  try {
    if (k == "trivial") return KernelFamily::trivial(dim);
    if (k == "logarithmic") return KernelFamily::logarithmic(dim, omega_override ? *omega_override : n.number("omega", 0.5));
    if (k == "sigma_approx") return KernelFamily::sigma_approx(dim, n.number("sigma_ratio", 0.5));
  } catch (const Error& e) {
    throw ValidationError(n.path(), e.what());
  }
  n.at("kind").fail("unknown kernel kind '" + k + "'");
  return KernelFamily::trivial(dim);
}

inline KernelEntry parse_kernel(const Node& n, int dim) {
  KernelEntry e;
  e.family = parse_kernel_family(n, dim);
  const auto c = parse_model_choice(n, {ExtrapolationModel::AffinePower, 1.0});
  e.model = c.model;
  e.power = c.power;
  return e;
}

inline EpsilonGrid parse_grid(const Node& n) {
  const std::string type = n.string("type");
  auto rethrow = [&](const ValidationError& e) -> ValidationError {
    // "grid.count" -> "<path>.count"
    std::string p = e.path();
    const auto dot = p.find('.');
    return ValidationError(n.child_path(dot == std::string::npos ? p : p.substr(dot + 1)), e.what_only());
  };
  try {
    if (type == "geometric")
      return EpsilonGrid::geometric(n.number("eps0", 0.2), n.number("ratio", 0.5), static_cast<int>(n.integer("count", 10)));
    if (type == "log_uniform")
      return EpsilonGrid::log_uniform(n.number("ln_lo", 2.0), n.number("ln_hi", 9.0), static_cast<int>(n.integer("count", 8)));
    if (type == "log_log")
      return EpsilonGrid::log_log(n.number("ln_lo", 2.0), n.number("ln_hi", 1e4), static_cast<int>(n.integer("count", 10)));
    if (type == "explicit") {
      if (n.has("log_values")) return EpsilonGrid::explicit_logs(n.at("log_values").numbers());
      return EpsilonGrid::explicit_list(n.at("values").numbers());
    }
  } catch (const ValidationError& e) {
    throw rethrow(e);
  } catch (const Error& e) {
    throw ValidationError(n.path(), e.what());
  }
  n.at("type").fail("unknown grid type '" + type + "'");
  return {};
}

inline QuadBudget parse_budget(const std::optional<Node>& n, QuadBudget def) {
  QuadBudget b = def;
  if (!n) return b;
  if (n->has("max_evaluations")) {
    b.max_evaluations = n->at("max_evaluations").as_u64();
    if (b.max_evaluations < 1) n->at("max_evaluations").fail("must be >= 1");
  }
  if (n->has("target_rel_error")) {
    b.target_rel_error = n->number("target_rel_error");
    if (!(b.target_rel_error > 0.0 && b.target_rel_error < 1.0)) n->at("target_rel_error").fail("must lie in (0,1)");
  }
  return b;
}

template <int N>
FunctionalParams<N> parse_params(const Node& root) {
  FunctionalParams<N> P;
  if (auto p = root.opt("params")) {
    P.r = p->number("r", 0.5);
    P.q = p->number("q", 2.0);
    if (p->has("p")) P.p = p->number("p");
  }
  P.validate();
  if (auto e = root.opt("region")) P.E = Domain<N>::of(parse_region<N>(*e));
  return P;
}

}  // namespace besov::config
