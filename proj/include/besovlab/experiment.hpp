#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "besovlab/config.hpp"
#include "besovlab/jumps.hpp"
#include "besovlab/kernels.hpp"
#include "besovlab/limits.hpp"
#include "besovlab/mollifiers.hpp"
#include "besovlab/seminorms.hpp"

namespace besov {

using json = nlohmann::ordered_json;

namespace report {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// {value, error, provenance}
inline json quantity(double v, double err, const std::string& prov) {
  json j;
  j["value"] = jnum(v);
  j["error"] = jnum(err);
  j["provenance"] = prov;
  return j;
}

inline std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (ok)
      out += c;
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline std::string epsilon_text(const SweepRow& r) {
  return r.epsilon > 0.0 ? num(r.epsilon) : "exp(" + num(r.log_epsilon) + ")";
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline json sweep_json(const EpsilonSweepResult& sw) {
  json j;
  j["functional"] = sw.functional;
  j["grid"] = sw.grid;
  j["tail_window"] = sw.tail_window;
  j["tail_min"] = jnum(sw.tail_min);
  j["tail_max"] = jnum(sw.tail_max);
  if (sw.extrapolated) {
    json e;
    e["model"] = sw.extrapolated->describe();
    e["limit"] = jnum(sw.extrapolated->limit);
    e["uncertainty"] = jnum(sw.extrapolated->uncertainty);
    e["rows_used"] = sw.extrapolated->rows_used;
    j["extrapolated"] = e;
  } else {
    j["extrapolated"] = nullptr;
  }
  json rows = json::array();
  for (const auto& r : sw.rows) {
    json row;
    row["log_epsilon"] = jnum(r.log_epsilon);
    row["epsilon"] = jnum(r.epsilon);
    row["value"] = jnum(r.value);
    row["error"] = jnum(r.error);
    row["flag"] = r.flag;
    row["provenance"] = r.provenance;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

inline std::string sweep_csv(const EpsilonSweepResult& sw) {
  std::string s = "epsilon,value,error,flag\n";
  for (const auto& r : sw.rows)
    s += csv_field(epsilon_text(r)) + "," + num(r.value) + "," + num(r.error) + "," + csv_field(r.flag) + "\n";
  return s;
}

inline json verdict_json(const ChainVerdict& v) {
  json j;
  j["chain"] = to_string(v.kind);
  j["id"] = v.id;
  json terms = json::array();
  for (const auto& t : v.terms) {
    json tj = quantity(t.value, t.error, t.provenance);
    tj = json{{"name", t.name}, {"value", tj["value"]}, {"error", tj["error"]}, {"provenance", t.provenance}};
    terms.push_back(tj);
  }
  j["terms"] = terms;
  j["rel_tolerance"] = jnum(v.rel_tolerance);
  j["tolerance"] = jnum(v.tolerance);
  j["worst_violation"] = jnum(v.worst_violation);
  j["pass"] = v.pass;
  return j;
}

}  // namespace report

struct RunOptions {
  std::string out_dir;  // empty: nothing is written
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

struct ExperimentReport {
  json summary;
  bool pass = false;
  std::vector<std::string> files;                               // paths written
  std::vector<std::pair<std::string, std::string>> contents;  // name -> bytes
};

/// Collects sweeps, terms, verdicts and checks; writes the CSV/JSON files.
class ReportWriter {
 public:
  ReportWriter(const std::string& kind, const RunOptions& opt) : opt_(opt) {
    summary_["kind"] = kind;
    summary_["config"] = json::object();
    summary_["sweeps"] = json::object();
    summary_["terms"] = json::object();
    summary_["tables"] = json::object();
    summary_["verdicts"] = json::array();
    summary_["checks"] = json::array();
    summary_["errors"] = json::array();
  }

  json& summary() { return summary_; }
  void set_config(const json& c) { summary_["config"] = c; }

  void term(const std::string& name, double v, double err, const std::string& prov) {
    summary_["terms"][name] = report::quantity(v, err, prov);
  }

  void sweep(const std::string& name, const EpsilonSweepResult& sw, const std::string& figure = "convergence") {
    summary_["sweeps"][name] = report::sweep_json(sw);
    files_.emplace_back("sweep_" + report::slug(name) + ".csv", report::sweep_csv(sw));
    for (const auto& r : sw.rows)
      if (!r.flagged || r.flag == "low_confidence") plot(figure, -r.log_epsilon, r.value, name);
  }

  void plot(const std::string& figure, double x, double y, const std::string& label) {
    auto& rows = plots_[figure];
    rows += report::num(x) + "," + report::num(y) + "," + report::csv_field(label) + "\n";
  }
  void plot_axis(const std::string& figure, const std::string& x_meaning) { plot_axes_[figure] = x_meaning; }

  void verdict(const ChainVerdict& v) {
    summary_["verdicts"].push_back(report::verdict_json(v));
    pass_ = pass_ && v.pass;
  }
  /// A chain that could not be formed (a term failed) counts as failing.
  void failed_verdict(ChainKind kind, const std::string& id, const std::string& why) {
    json j;
    j["chain"] = to_string(kind);
    j["id"] = id;
    j["terms"] = json::array();
    j["pass"] = false;
    j["error"] = why;
    summary_["verdicts"].push_back(j);
    pass_ = false;
  }

  void check(const std::string& id, bool pass, const json& lhs, const json& rhs, double tolerance,
             const std::string& relation, const std::string& prov) {
    json j;
    j["id"] = id;
    j["relation"] = relation;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["tolerance"] = report::jnum(tolerance);
    j["pass"] = pass;
    j["provenance"] = prov;
    summary_["checks"].push_back(j);
    pass_ = pass_ && pass;
  }
  void check(const std::string& id, const CheckPair& c, const std::string& relation = "lhs <= rhs + tolerance") {
    check(id, c.pass, report::quantity(c.lhs, c.lhs_error, c.provenance), report::quantity(c.rhs, c.rhs_error, c.provenance),
          c.tolerance, relation, c.provenance);
  }

  void error(const std::string& where, const std::string& what) {
    summary_["errors"].push_back(json{{"where", where}, {"error", what}});
  }

  void table(const std::string& name, const json& t) { summary_["tables"][name] = t; }
  void add_file(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  ExperimentReport finish() {
    summary_["pass"] = pass_;
    ExperimentReport rep;
    rep.summary = summary_;
    rep.pass = pass_;
    for (const auto& [fig, rows] : plots_) {
      files_.emplace_back("plot_" + report::slug(fig) + ".csv", "x,y,label\n" + rows);
    }
    if (!plot_axes_.empty()) {
      json axes = json::object();
      for (const auto& [fig, x] : plot_axes_) axes[fig] = x;
      rep.summary["plot_x_axis"] = axes;
    }
    files_.emplace_back("summary.json", rep.summary.dump(2) + "\n");
    rep.contents = files_;
    if (!opt_.out_dir.empty()) {
      std::filesystem::create_directories(opt_.out_dir);
      for (const auto& [name, content] : files_) {
        const auto path = std::filesystem::path(opt_.out_dir) / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error("cannot write " + path.string());
        os << content;
        rep.files.push_back(path.string());
      }
    }
    return rep;
  }

 private:
  RunOptions opt_;
  json summary_;
  bool pass_ = true;
  std::vector<std::pair<std::string, std::string>> files_;
  std::map<std::string, std::string> plots_;
  std::map<std::string, std::string> plot_axes_;
};

// ---------------------------------------------------------------------------
// Defaults
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"kernel_audit", "constants",           "sandwich",
                                             "kernel_equivalence", "jump_chain", "interpolation",
                                             "truncation_convergence", "bounds_audit"};
  return k;
}

namespace defaults {

inline json step_field(double amp = 1.0) {
  return json{{"type", "indicator"}, {"region", {{"type", "interval"}, {"lo", 0.0}, {"hi", 1.0}}}, {"amplitude", amp}};
}
inline json budget() { return json{{"max_evaluations", 20000}, {"target_rel_error", 2e-3}}; }
inline json variation_grid() { return json{{"type", "geometric"}, {"eps0", 0.2}, {"ratio", 0.5}, {"count", 10}}; }
inline json gagliardo_grid() { return json{{"type", "log_uniform"}, {"ln_lo", 2.0}, {"ln_hi", 9.0}, {"count", 8}}; }
inline json functional() {
  return json{{"name", "spherical_variation"},
              {"epsilon", 0.01},
              {"direction", nullptr},
              {"kernel", {{"kind", "trivial"}}},
              {"grid", variation_grid()},
              {"tail_window", nullptr},
              {"model", nullptr}};
}

inline json base(const std::string& kind) {
  json j;
  j["kind"] = kind;
  j["dimension"] = 1;
  j["components"] = 1;
  j["seed"] = 24301;
  j["field"] = step_field();
  j["region"] = nullptr;
  j["params"] = json{{"r", 0.5}, {"q", 2.0}};
  j["mollifier"] = json{{"kind", "tent"}};
  j["budget"] = budget();
  j["output"] = json{{"dir", nullptr}};
  j["functional"] = functional();
  return j;
}

inline json chain_common(json j) {
  j["kernels"] = json::array({json{{"kind", "trivial"}, {"model", "affine-in-power"}, {"power", 1.0}},
                              json{{"kind", "logarithmic"}, {"omega", 0.5}, {"model", "affine-in-power"}, {"power", 1.0}}});
  j["grids"] = json{{"variation", variation_grid()}, {"gagliardo", gagliardo_grid()}};
  j["tail_window"] = json{{"variation", 4}, {"gagliardo", 5}};
  j["models"] = json{{"spherical_variation", {{"model", "affine-in-power"}, {"power", 1.0}}},
                     {"gagliardo", {{"model", "affine-in-inverse-log"}}}};
  j["tolerance"] = json{{"variation", 0.05}, {"gagliardo", 0.10}};
  j["gagliardo_budget"] = budget();
  j["sphere_rule_nodes"] = 32;
  return j;
}

}  // namespace defaults

/// The full default config of an experiment kind (every recognised key).
inline json default_config(const std::string& kind) {
  using namespace defaults;
  if (kind == "kernel_audit") {
    json j;
    j["kind"] = kind;
    j["seed"] = 24301;
    j["families"] = json::array({json{{"kind", "trivial"}}, json{{"kind", "logarithmic"}, {"omega", {0.3, 0.5, 0.9}}},
                                 json{{"kind", "sigma_approx"}, {"sigma_ratio", 0.5}}});
    j["dimensions"] = {1, 2, 3};
    j["grids"] = json{{"standard", variation_grid()},
                      {"logarithmic", {{"type", "log_log"}, {"ln_lo", 2.0}, {"ln_hi", 1e4}, {"count", 10}}}};
    j["alphas"] = {0.5, 1.0};
    j["delta"] = 0.1;
    j["tail_window"] = 4;
    j["tolerance"] = json{{"mass", 1e-9}, {"moment", 1e-8}};
    j["output"] = json{{"dir", nullptr}};
    return j;
  }
  if (kind == "constants") {
    json j;
    j["kind"] = kind;
    j["dimensions"] = {1, 2, 3};
    j["q_list"] = {1.0, 2.0};
    j["tolerance"] = json{{"moment1", 1e-9}, {"nc_residual_2d", 1e-8}, {"nc_residual_3d", 1e-6}};
    j["output"] = json{{"dir", nullptr}};
    return j;
  }
  if (kind == "jump_chain") {
    json j = chain_common(base(kind));
    j["directions"] = json::array();
    j["directional_epsilon"] = 1e-3;
    return j;
  }
  if (kind == "kernel_equivalence") {
    json j = chain_common(base(kind));
    j["include_gagliardo"] = true;
    return j;
  }
  if (kind == "sandwich") {
    json j = base(kind);
    j["grids"] = json{{"variation", variation_grid()}, {"gagliardo", gagliardo_grid()}};
    j["tail_window"] = json{{"variation", 4}, {"gagliardo", 5}};
    j["models"] = json{{"gagliardo", {{"model", "affine-in-inverse-log"}}}};
    j["tolerance"] = json{{"sandwich", 0.10}};
    j["gagliardo_budget"] = budget();
    j["sphere_rule_nodes"] = 32;
    j["expect_mid_below"] = nullptr;
    return j;
  }
  if (kind == "interpolation") {
    json j = base(kind);
    j["params"] = json{{"r", 0.5}, {"q", 2.0}, {"p", 3.0}};
    j["mollifier"] = nullptr;
    j["expect_equality"] = false;
    j["tolerance"] = json{{"closed_form", 1e-6}};
    return j;
  }
  if (kind == "truncation_convergence") {
    json j = base(kind);
    j["field"] = step_field(3.0);
    j["levels"] = {0.5, 1.0, 2.0, 3.0, 4.0};
    j["epsilon"] = 0.01;
    j["gagliardo_epsilon"] = std::exp(-4.0);
    j["kernels"] = json::array({json{{"kind", "trivial"}}});
    j["tolerance"] = json{{"exact", 1e-9}};
    j["sphere_rule_nodes"] = 32;
    return j;
  }
  if (kind == "bounds_audit") {
    json j = base(kind);
    j["splits"] = json::array({json{{"epsilon", 0.05}, {"beta", 0.01}, {"gamma", 0.5}},
                               json{{"epsilon", 0.02}, {"beta", 0.005}, {"gamma", 1.0}},
                               json{{"epsilon", 0.1}, {"beta", 0.05}, {"gamma", 2.0}},
                               json{{"epsilon", 0.01}, {"beta", 0.002}, {"gamma", 0.2}},
                               json{{"epsilon", 0.05}, {"beta", 0.05}, {"gamma", 5.0}}});
    j["grids"] = json{{"gagliardo", gagliardo_grid()}};
    j["shifts"] = {0.05, 0.5, 4.0};
    j["interpolation"] = json{{"q", 2.0}, {"p", 3.0}, {"expect_equality", true}};
    j["tolerance"] = json{{"closed_form", 1e-6}, {"error_multiple", 3.0}};
    return j;
  }
  throw ValidationError("kind", "unknown experiment kind '" + kind + "'");
}

/// Defaults overlaid with the user's config. Top-level keys replace, the
/// listed sections merge one level deep. Unknown keys are rejected.
inline json effective_config(const json& user) {
  if (!user.is_object()) throw ValidationError("", "config must be a JSON object");
  if (!user.contains("kind") || !user["kind"].is_string()) throw ValidationError("kind", "required field is missing");
  const std::string kind = user["kind"].get<std::string>();
  json eff = default_config(kind);
  static const std::set<std::string> merged = {"tolerance", "budget", "gagliardo_budget", "grids",
                                               "tail_window", "models", "output", "functional"};
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string& key = it.key();
    if (!eff.contains(key) && !(kind == "constants" && key == "dimension"))
      throw ValidationError(key, "unknown key for kind '" + kind + "'");
    if (merged.count(key) && it.value().is_object() && eff[key].is_object()) {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) eff[key][jt.key()] = jt.value();
    } else {
      eff[key] = it.value();
    }
  }
  return eff;
}

// ---------------------------------------------------------------------------
// Shared setup for the field-based experiments
// ---------------------------------------------------------------------------

namespace detail {

template <int N, int D>
struct Setup {
  Field<N, D> field;
  FunctionalParams<N> P;
  std::optional<MollifierSpec<N>> eta;
  std::uint64_t seed = 0;
  int threads = 1;
  QuadBudget budget, gag_budget;
  SphereRule rule = SphereRule::for_dim(N, 8);

  QuadBudget budget_for(const std::string& name, bool gagliardo = false) const {
    QuadBudget b = gagliardo ? gag_budget : budget;
    b.threads = threads;
    return b.with_seed(derive_seed(seed, report::fnv1a(name)));
  }
  double eta_q() const { return eta ? std::pow(std::abs(eta->total()), P.q) : 1.0; }
};

template <int N, int D>
Setup<N, D> make_setup(const config::Node& root, const RunOptions& opt) {
  Setup<N, D> s{config::parse_field<N, D>(root.at("field")), config::parse_params<N>(root)};
  if (root.has("mollifier")) s.eta = config::parse_mollifier<N>(root.at("mollifier"));
  s.seed = root.has("seed") ? root.at("seed").as_u64() : 24301;
  s.threads = opt.threads;
  s.budget = config::parse_budget(root.opt("budget"), QuadBudget{});
  s.gag_budget = config::parse_budget(root.opt("gagliardo_budget"), s.budget);
  const int nodes = static_cast<int>(root.integer("sphere_rule_nodes", N == 2 ? 32 : 8));
  if (nodes < 2) root.at("sphere_rule_nodes").fail("need at least 2 nodes");
  s.rule = SphereRule::for_dim(N, nodes);
  return s;
}

inline std::optional<int> tail_of(const config::Node& root, const std::string& which) {
  if (auto t = root.opt("tail_window"))
    if (t->has(which)) {
      const long long w = t->at(which).as_int();
      if (w < 3) t->at(which).fail("tail window must be >= 3");
      return static_cast<int>(w);
    }
  return std::nullopt;
}

inline EpsilonGrid grid_of(const config::Node& root, const std::string& which, const EpsilonGrid& def) {
  if (auto g = root.opt("grids"))
    if (g->has(which)) return config::parse_grid(g->at(which));
  return def;
}

inline config::ModelChoice model_of(const config::Node& root, const std::string& which, config::ModelChoice def) {
  if (auto m = root.opt("models")) return config::parse_model_choice(m->opt(which), def);
  return def;
}

inline double tol_of(const config::Node& root, const std::string& which, double def) {
  if (auto t = root.opt("tolerance")) {
    const double v = t->number(which, def);
    if (!(v >= 0.0)) t->at(which).fail("tolerance must be nonnegative");
    return v;
  }
  return def;
}

/// Runs a sweep, extrapolates, records it and returns the limit (value, error).
struct Limit {
  double value = std::numeric_limits<double>::quiet_NaN();
  double error = 0;
  std::string provenance;
  bool ok = false;
  std::string failure;
};

inline Limit sweep_and_extrapolate(ReportWriter& w, const std::string& name, const EpsilonGrid& grid,
                                   const SweepFunctional& fn, const QuadBudget& budget, std::optional<int> tail,
                                   config::ModelChoice model) {
  Limit out;
  try {
    EpsilonSweepResult sw = epsilon_sweep(name, grid, fn, budget, tail);
    for (const auto& r : sw.rows)
      if (r.flagged && r.flag != "low_confidence") w.error(name + " at log_epsilon=" + report::num(r.log_epsilon), r.flag);
    try {
      sw.extrapolated = extrapolate(sw, model.model, model.power);
      out.value = sw.extrapolated->limit;
      out.error = sw.extrapolated->uncertainty;
      out.ok = true;
      out.provenance = "extrapolate(" + name + ",model=" + sw.extrapolated->describe() + ",rows=" +
                       std::to_string(sw.extrapolated->rows_used) + ",grid=" + sw.grid + ")";
    } catch (const Error& e) {
      out.failure = e.what();
      w.error(name + " extrapolation", e.what());
    }
    w.sweep(name, sw);
  } catch (const Error& e) {
    out.failure = e.what();
    w.error(name, e.what());
  }
  return out;
}

template <int N, int D>
SweepFunctional spherical_fn(const Setup<N, D>& s) {
  return [&s](Scale e, const QuadBudget&) { return spherical_variation(s.field, s.P, e.value(), s.rule); };
}
template <int N, int D>
SweepFunctional besov_constant_fn(const Setup<N, D>& s, const KernelFamily& k) {
  return [&s, k](Scale e, const QuadBudget& b) { return besov_constant_at(s.field, s.P, k, e, b); };
}
template <int N, int D>
SweepFunctional gagliardo_fn(const Setup<N, D>& s) {
  return [&s](Scale e, const QuadBudget& b) {
    if (!e.representable()) throw CapabilityError("gagliardo_constant_at: eps below the double range");
    return gagliardo_constant_at(s.field, *s.eta, s.P, e.value(), b);
  };
}

template <int N>
Vec<N> direction_of(const config::Node& n) {
  const Vec<N> v = n.template vec<N>();
  if (!all_finite(v)) n.fail("direction must be finite");
  return v;
}

/// Terms of the kernel-equivalence / jump chains.
template <int N, int D>
std::vector<ChainTerm> equivalence_terms(ReportWriter& w, const config::Node& root, const Setup<N, D>& s,
                                         bool with_gagliardo, std::vector<std::string>& missing,
                                         std::vector<ChainTerm>& besov_terms) {
  std::vector<ChainTerm> terms;
  const double eq = s.eta_q();
  const double S = sphere_measure(N);
  const std::string eta_name = s.eta ? s.eta->name() : "none";
  const EpsilonGrid vgrid = grid_of(root, "variation", EpsilonGrid::default_variation());
  const auto vtail = tail_of(root, "variation");

  if (with_gagliardo) {
    if (!s.eta) root.at("mollifier").fail("the Gagliardo constant needs a mollifier");
    const auto m = model_of(root, "gagliardo", {ExtrapolationModel::AffineInverseLog, 1.0});
    const Limit g = sweep_and_extrapolate(w, "gagliardo_constant", grid_of(root, "gagliardo", EpsilonGrid::default_gagliardo()),
                                          gagliardo_fn(s), s.budget_for("gagliardo_constant", true),
                                          tail_of(root, "gagliardo"), m);
    if (g.ok) {
      terms.push_back({"gagliardo_constant", g.value, g.error, g.provenance});
      w.term("gagliardo_constant", g.value, g.error, g.provenance);
    } else {
      missing.push_back("gagliardo_constant: " + g.failure);
    }
  }

  for (const auto& kn : root.at("kernels").items()) {
    const config::KernelEntry k = config::parse_kernel(kn, N);
    const std::string name = "besov_constant[" + k.family.name() + "]";
    const Limit b = sweep_and_extrapolate(w, name, vgrid, besov_constant_fn(s, k.family), s.budget_for(name), vtail,
                                          {k.model, k.power});
    if (b.ok) {
      w.term(name, b.value, b.error, b.provenance);
      const std::string tn = "sphere_measure*eta_q*" + name;
      const ChainTerm t{tn, eq * S * b.value, eq * S * b.error,
                        "|int eta|^q=" + report::num(eq) + " (eta=" + eta_name + ") * H^{N-1}(S^{N-1})=" +
                            report::num(S) + " * " + b.provenance};
      terms.push_back(t);
      besov_terms.push_back(t);
      w.term(tn, t.value, t.error, t.provenance);
    } else {
      missing.push_back(name + ": " + b.failure);
    }
  }

  {
    const auto m = model_of(root, "spherical_variation", {ExtrapolationModel::AffinePower, 1.0});
    const Limit v = sweep_and_extrapolate(w, "spherical_variation", vgrid, spherical_fn(s),
                                          s.budget_for("spherical_variation"), vtail, m);
    if (v.ok) {
      w.term("spherical_variation", v.value, v.error, v.provenance);
      const ChainTerm t{"eta_q*spherical_variation", eq * v.value, eq * v.error,
                        "|int eta|^q=" + report::num(eq) + " (eta=" + eta_name + ") * " + v.provenance};
      terms.push_back(t);
      w.term(t.name, t.value, t.error, t.provenance);
    } else {
      missing.push_back("spherical_variation: " + v.failure);
    }
  }
  return terms;
}

template <int N, int D>
void emit_chain(ReportWriter& w, ChainKind kind, const std::string& id, const std::vector<ChainTerm>& terms,
                const std::vector<std::string>& missing, double tol) {
  if (!missing.empty()) {
    std::string why = "missing terms:";
    for (const auto& m : missing) why += " [" + m + "]";
    w.failed_verdict(kind, id, why);
    return;
  }
  if (terms.size() < 2) {
    w.failed_verdict(kind, id, "fewer than two terms");
    return;
  }
  w.verdict(chain_check(kind, terms, tol, id));
}

// ---------------------------------------------------------------------------
// Field-based experiment kinds
// ---------------------------------------------------------------------------

template <int N, int D>
void run_jump_chain(ReportWriter& w, const config::Node& root, const Setup<N, D>& s, bool jump) {
  if (jump && !s.P.jump_regime())
    root.at("params").at("r").fail("jump_chain requires r = 1/q (have r*q = " + report::num(s.P.rq()) + ")");
  const bool with_g = jump ? true : root.boolean("include_gagliardo", true);
  if (with_g && !s.eta) root.at("mollifier").fail("required for the Gagliardo constant");
  const double tol_var = tol_of(root, "variation", 0.05);
  const double tol_gag = tol_of(root, "gagliardo", 0.10);

  std::vector<std::string> missing;
  std::vector<ChainTerm> besov_terms;
  std::vector<ChainTerm> terms = equivalence_terms(w, root, s, with_g, missing, besov_terms);

  // variation-level chain: Besov constants (every kernel) and the spherical variation
  std::vector<ChainTerm> var_terms;
  for (const auto& t : terms)
    if (t.name != "gagliardo_constant") var_terms.push_back(t);

  std::optional<JumpSetSpec<N, D>> js;
  if (jump) {
    const Domain<N> E = domain_for(s.field, s.P);
    try {
      js = jump_set_of(s.field);
      const double jv = jump_variation(*js, s.P.q, E);
      const double eq = s.eta_q();
      const double m1 = moment1(N);
      const std::string prov = "jump_variation(field=" + s.field.describe() + ",q=" + report::num(s.P.q) +
                               ",S=" + E.describe() + ",closed_form)";
      w.term("jump_variation", jv, 0.0, prov);
      const ChainTerm t{"eta_q*moment1*jump_variation", eq * m1 * jv, 0.0,
                        "|int eta|^q=" + report::num(eq) + " * moment1(N=" + std::to_string(N) + ")=" +
                            report::num(m1) + " * " + prov};
      w.term(t.name, t.value, t.error, t.provenance);
      terms.push_back(t);
      var_terms.push_back(t);
    } catch (const Error& e) {
      missing.push_back(std::string("jump_variation: ") + e.what());
      w.error("jump_variation", e.what());
    }
  }

  std::vector<std::string> var_missing;
  for (const auto& m : missing)
    if (m.rfind("gagliardo_constant", 0) != 0) var_missing.push_back(m);
  emit_chain<N, D>(w, ChainKind::KernelEquivalence, jump ? "variation-chain" : "kernel-equivalence", var_terms,
                   var_missing, tol_var);
  if (besov_terms.size() >= 2) emit_chain<N, D>(w, ChainKind::KernelEquivalence, "kernel-pair", besov_terms, {}, tol_var);
  if (with_g)
    emit_chain<N, D>(w, jump ? ChainKind::JumpChain : ChainKind::KernelEquivalence,
                     jump ? "jump-chain" : "kernel-equivalence-with-gagliardo", terms, missing, tol_gag);

  // directional formula
  if (jump && js) {
    const auto dirs = root.at("directions").items();
    const double eps = root.number("directional_epsilon", 1e-3);
    if (!(eps > 0.0)) root.at("directional_epsilon").fail("must be positive");
    const Domain<N> E = domain_for(s.field, s.P);
    for (const auto& dn : dirs) {
      const Vec<N> n = direction_of<N>(dn);
      const std::string id = "directional n=" + detail::fmt_vec<N>(n);
      try {
        const FunctionalValue dv = directional_variation(s.field, s.P, n, eps);
        const double djv = directional_jump_variation(*js, s.P.q, n, E);
        const std::string dprov = "directional_jump_variation(field=" + s.field.describe() + ",n=" +
                                  detail::fmt_vec<N>(n) + ",closed_form)";
        const double tol = tol_var * std::max(1e-300, std::abs(djv));
        const bool pass = std::abs(dv.value - djv) <= tol;
        w.check(id, pass, report::quantity(dv.value, dv.error_estimate, dv.provenance),
                report::quantity(djv, 0.0, dprov), tol, "|lhs - rhs| <= tolerance (relative to rhs)", dv.provenance);
        w.plot("directional", norm(n), dv.value, "measured");
        w.plot("directional", norm(n), djv, "closed_form");
      } catch (const Error& e) {
        w.check(id, false, json{{"error", e.what()}}, json(nullptr), 0.0, "evaluation failed", "");
      }
    }
    if (!dirs.empty()) w.plot_axis("directional", "|n|");
  }
  w.plot_axis("convergence", "|ln eps|");
}

template <int N, int D>
void run_sandwich(ReportWriter& w, const config::Node& root, const Setup<N, D>& s) {
  if (!s.eta) root.at("mollifier").fail("required for the sandwich");
  const double tol = tol_of(root, "sandwich", 0.10);
  const double eq = s.eta_q();
  std::vector<ChainTerm> terms;
  std::vector<std::string> missing;

  const EpsilonGrid vgrid = grid_of(root, "variation", EpsilonGrid::default_variation());
  try {
    EpsilonSweepResult sw =
        epsilon_sweep("spherical_variation", vgrid, spherical_fn(s), s.budget_for("spherical_variation"),
                      tail_of(root, "variation"));
    for (const auto& r : sw.rows)
      if (r.flagged && r.flag != "low_confidence") w.error("spherical_variation", r.flag);
    w.sweep("spherical_variation", sw);
    const std::string base = "|int eta|^q=" + report::num(eq) + " (eta=" + s.eta->name() + ") * ";
    double err = 0;
    for (const auto* r : sw.tail_rows()) err = std::max(err, r->error);
    const std::string window = "(spherical_variation over the last " + std::to_string(sw.tail_window) + " rows of " + sw.grid + ")";
    terms.push_back({"lower", eq * sw.tail_min, eq * err, base + "tail_min" + window});
    terms.push_back({"upper", eq * sw.tail_max, eq * err, base + "tail_max" + window});
    w.term("lower", eq * sw.tail_min, eq * err, base + "tail_min" + window);
    w.term("upper", eq * sw.tail_max, eq * err, base + "tail_max" + window);
  } catch (const Error& e) {
    missing.push_back(std::string("spherical_variation: ") + e.what());
    w.error("spherical_variation", e.what());
  }

  const auto m = model_of(root, "gagliardo", {ExtrapolationModel::AffineInverseLog, 1.0});
  const Limit g = sweep_and_extrapolate(w, "gagliardo_constant", grid_of(root, "gagliardo", EpsilonGrid::default_gagliardo()),
                                        gagliardo_fn(s), s.budget_for("gagliardo_constant", true),
                                        tail_of(root, "gagliardo"), m);
  if (g.ok) {
    terms.push_back({"mid", g.value, g.error, g.provenance});
    w.term("mid", g.value, g.error, g.provenance);
  } else {
    missing.push_back("gagliardo_constant: " + g.failure);
  }
  emit_chain<N, D>(w, ChainKind::Sandwich, "sandwich", terms, missing, tol);

  if (root.has("expect_mid_below")) {
    const double bound = root.number("expect_mid_below");
    if (g.ok)
      w.check("mid below " + report::num(bound), g.value < bound, report::quantity(g.value, g.error, g.provenance),
              report::quantity(bound, 0.0, "config.expect_mid_below"), 0.0, "lhs < rhs", g.provenance);
    else
      w.check("mid below " + report::num(bound), false, json{{"error", g.failure}}, json(bound), 0.0, "lhs < rhs", "");
  }
  w.plot_axis("convergence", "|ln eps|");
}

template <int N, int D>
void run_interpolation(ReportWriter& w, const config::Node& root, const Setup<N, D>& s) {
  if (!s.P.p) root.at("params").at("p").fail("interpolation needs p");
  if (!(*s.P.p > s.P.q)) root.at("params").at("p").fail("interpolation needs q < p");
  const double tol = tol_of(root, "closed_form", 1e-6);
  const CheckPair c = interpolation_check(s.field, s.P.q, *s.P.p, tol);
  w.check("interpolation", c);
  w.term("besov_q", c.lhs, c.lhs_error, c.provenance);
  w.term("interpolation_rhs", c.rhs, c.rhs_error, c.provenance);
  if (root.boolean("expect_equality", false)) {
    const double t = tol * std::max(1.0, std::abs(c.rhs));
    w.check("interpolation equality", std::abs(c.lhs - c.rhs) <= t,
            report::quantity(c.lhs, c.lhs_error, c.provenance), report::quantity(c.rhs, c.rhs_error, c.provenance), t,
            "|lhs - rhs| <= tolerance", c.provenance);
  }
}

template <int N, int D>
void run_truncation(ReportWriter& w, const config::Node& root, const Setup<N, D>& s) {
  std::vector<double> levels = root.at("levels").numbers();
  if (levels.empty()) root.at("levels").fail("need at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] >= 0.0)) root.at("levels").index(i).fail("levels must be nonnegative");
    if (i > 0 && !(levels[i] > levels[i - 1])) root.at("levels").index(i).fail("levels must be increasing");
  }
  const double eps = root.number("epsilon", 0.01);
  if (!(eps > 0.0)) root.at("epsilon").fail("must be positive");
  const double tol = tol_of(root, "exact", 1e-9);
  std::optional<double> geps;
  if (s.eta && root.has("gagliardo_epsilon")) {
    geps = root.number("gagliardo_epsilon");
    if (!(*geps > 0.0 && *geps < std::exp(-1.0))) root.at("gagliardo_epsilon").fail("must lie in (0, 1/e)");
  }
  std::vector<KernelFamily> kernels;
  if (root.has("kernels"))
    for (const auto& k : root.at("kernels").items()) kernels.push_back(config::parse_kernel_family(k, N));

  // term name -> value per level (last entry: untruncated)
  struct Series {
    std::string name;
    std::vector<double> v, e;
    std::vector<std::string> prov;
  };
  std::vector<Series> series;
  auto add = [&](std::size_t idx, const std::string& name, const FunctionalValue& fv) {
    if (series.size() <= idx) series.push_back({name, {}, {}, {}});
    series[idx].v.push_back(fv.value);
    series[idx].e.push_back(fv.error_estimate);
    series[idx].prov.push_back(fv.provenance);
  };
  auto evaluate = [&](const Field<N, D>& f) {
    std::size_t idx = 0;
    FunctionalValue jv;
    {
      const Domain<N> E = domain_for(s.field, s.P);
      jv.value = moment1(N) * jump_variation(jump_set_of(f), s.P.q, E);
      jv.provenance = "moment1*jump_variation(field=" + f.describe() + ",q=" + report::num(s.P.q) + ")";
    }
    add(idx++, "moment1*jump_variation", jv);
    FunctionalParams<N> P = s.P;
    P.E = domain_for(s.field, s.P);
    add(idx++, "spherical_variation(eps=" + report::num(eps) + ")", spherical_variation(f, P, eps, s.rule));
    for (const auto& k : kernels) {
      const std::string nm = "besov_constant[" + k.name() + "](eps=" + report::num(eps) + ")";
      add(idx++, nm, besov_constant_at(f, P, k, eps, s.budget_for(nm)));
    }
    if (geps) {
      const std::string nm = "gagliardo_constant(eps=" + report::num(*geps) + ")";
      add(idx++, nm, gagliardo_constant_at(f, *s.eta, P, *geps, s.budget_for(nm, true)));
    }
  };
  for (double l : levels) evaluate(truncate(s.field, l));
  evaluate(s.field);

  double sup = 0;
  if (const auto* pw = s.field.template as<PiecewiseField<N, D>>()) {
    for (const auto& p : pw->pieces())
      for (int c = 0; c < D; ++c) sup = std::max(sup, std::abs(p.amplitude[c]));
    for (int c = 0; c < D; ++c) sup = std::max(sup, std::abs(pw->raw_background()[c]));
  } else {
    sup = kInf;
  }

  json table = json::array();
  for (const auto& se : series) {
    const std::size_t n = levels.size();
    const double untr = se.v[n];
    const double scale = std::max(1.0, std::abs(untr));
    bool mono = true;
    double worst_drop = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const double drop = se.v[i - 1] - se.v[i];
      worst_drop = std::max(worst_drop, drop);
      mono = mono && drop <= tol * scale;
    }
    w.check("nondecreasing in l: " + se.name, mono, report::quantity(worst_drop, 0.0, "max over consecutive levels of value(l_i) - value(l_{i+1})"),
            report::quantity(0.0, 0.0, "monotonicity"), tol * scale, "lhs <= tolerance", se.prov[n]);
    for (std::size_t i = 0; i < n; ++i) {
      json row;
      row["term"] = se.name;
      row["level"] = levels[i];
      row["value"] = report::quantity(se.v[i], se.e[i], se.prov[i]);
      table.push_back(row);
      w.plot("truncation", levels[i], se.v[i], se.name);
      if (levels[i] >= sup) {
        const double diff = std::abs(se.v[i] - untr);
        w.check("exact at l=" + report::num(levels[i]) + ": " + se.name, diff <= tol * scale,
                report::quantity(se.v[i], se.e[i], se.prov[i]), report::quantity(untr, se.e[n], se.prov[n]), tol * scale,
                "|lhs - rhs| <= tolerance", se.prov[i]);
      }
    }
    json row;
    row["term"] = se.name;
    row["level"] = "untruncated";
    row["value"] = report::quantity(untr, se.e[n], se.prov[n]);
    table.push_back(row);
    w.term(se.name, untr, se.e[n], se.prov[n]);
  }
  w.table("truncation", table);
  w.plot_axis("truncation", "level l");
}

template <int N, int D>
void run_bounds_audit(ReportWriter& w, const config::Node& root, const Setup<N, D>& s) {
  if (!s.eta) root.at("mollifier").fail("required for the bounds audit");
  const double mult = tol_of(root, "error_multiple", 3.0);
  const double tol_closed = tol_of(root, "closed_form", 1e-6);

  // three-region split
  const auto splits = root.at("splits").items();
  json split_table = json::array();
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& sp = splits[i];
    const double eps = sp.number("epsilon"), beta = sp.number("beta"), gamma = sp.number("gamma");
    if (!(eps > 0.0)) sp.at("epsilon").fail("must be positive");
    if (!(beta > 0.0 && gamma > beta)) sp.fail("need 0 < beta < gamma");
    const std::string tag = "split[" + std::to_string(i) + "] eps=" + report::num(eps) + " beta=" + report::num(beta) +
                            " gamma=" + report::num(gamma);
    try {
      const SplitBounds b = gagliardo_split_bounds(s.field, *s.eta, s.P, eps, beta, gamma);
      const SplitMeasured m = gagliardo_split_measured(s.field, *s.eta, s.P, eps, beta, gamma, s.budget_for(tag));
      auto one = [&](const std::string& region, const FunctionalValue& meas, double bound) {
        const double slack = mult * meas.error_estimate;
        w.check(tag + " " + region, meas.value <= bound + slack,
                report::quantity(meas.value, meas.error_estimate, meas.provenance),
                report::quantity(bound, 0.0, b.provenance + "." + region), slack,
                "lhs <= rhs + " + report::num(mult) + " * lhs.error", meas.provenance);
      };
      one("tail", m.tail, b.tail);
      one("annulus", m.annulus, b.annulus);
      one("core", m.core, b.core);
      json row;
      row["epsilon"] = eps;
      row["beta"] = beta;
      row["gamma"] = gamma;
      row["tail"] = {{"measured", report::quantity(m.tail.value, m.tail.error_estimate, m.tail.provenance)},
                     {"bound", report::jnum(b.tail)}};
      row["annulus"] = {{"measured", report::quantity(m.annulus.value, m.annulus.error_estimate, m.annulus.provenance)},
                        {"bound", report::jnum(b.annulus)}};
      row["core"] = {{"measured", report::quantity(m.core.value, m.core.error_estimate, m.core.provenance)},
                     {"bound", report::jnum(b.core)},
                     {"alternative_bound", report::jnum(b.core_alt)}};
      row["lq_norm_q"] = report::jnum(b.lq_norm_q);
      row["besov_q"] = report::jnum(b.besov_q);
      row["provenance"] = b.provenance;
      split_table.push_back(row);
    } catch (const Error& e) {
      w.check(tag, false, json{{"error", e.what()}}, json(nullptr), 0.0, "evaluation failed", "");
    }
  }
  w.table("split", split_table);

  // uniform bound at every Gagliardo sweep row
  if (root.has("grids") && root.at("grids").has("gagliardo")) {
    try {
      const double U = gagliardo_uniform_bound(s.field, *s.eta, s.P);
      const std::string uprov = "gagliardo_uniform_bound(field=" + s.field.describe() + ",eta=" + s.eta->name() +
                                ",r=" + report::num(s.P.r) + ",q=" + report::num(s.P.q) + ")";
      w.term("uniform_bound", U, 0.0, uprov);
      const EpsilonSweepResult sw =
          epsilon_sweep("gagliardo_constant", config::parse_grid(root.at("grids").at("gagliardo")), gagliardo_fn(s),
                        s.budget_for("gagliardo_constant", true), tail_of(root, "gagliardo"));
      w.sweep("gagliardo_constant", sw);
      for (const auto& r : sw.rows) {
        const std::string id = "uniform bound at log_epsilon=" + report::num(r.log_epsilon);
        if (r.flagged && r.flag != "low_confidence") {
          w.check(id, false, json{{"error", r.flag}}, report::quantity(U, 0.0, uprov), 0.0, "evaluation failed", "");
          continue;
        }
        const double slack = mult * r.error;
        w.check(id, r.value <= U + slack, report::quantity(r.value, r.error, r.provenance),
                report::quantity(U, 0.0, uprov), slack, "lhs <= rhs + " + report::num(mult) + " * lhs.error",
                r.provenance);
        w.plot("uniform_bound", -r.log_epsilon, U, "bound");
      }
      w.plot_axis("uniform_bound", "|ln eps|");
      w.plot_axis("convergence", "|ln eps|");
    } catch (const Error& e) {
      w.check("uniform bound", false, json{{"error", e.what()}}, json(nullptr), 0.0, "evaluation failed", "");
    }
  }

  // variation inequality
  if (root.has("shifts")) {
    for (const auto& hn : root.at("shifts").items()) {
      Vec<N> h{};
      if (hn.raw().is_number())
        h[0] = hn.as_number();
      else
        h = hn.template vec<N>();
      try {
        const CheckPair c = variation_inequality_check(s.field, h);
        w.check("variation inequality h=" + detail::fmt_vec<N>(h), c);
      } catch (const Error& e) {
        w.check("variation inequality h=" + detail::fmt_vec<N>(h), false, json{{"error", e.what()}}, json(nullptr), 0.0,
                "evaluation failed", "");
      }
    }
  }

  // interpolation
  if (auto in = root.opt("interpolation")) {
    const double q = in->number("q", 2.0), p = in->number("p", 3.0);
    if (!(p > q)) in->at("p").fail("need q < p");
    const CheckPair c = interpolation_check(s.field, q, p, tol_closed);
    w.check("interpolation q=" + report::num(q) + " p=" + report::num(p), c);
    if (in->boolean("expect_equality", false)) {
      const double t = tol_closed * std::max(1.0, std::abs(c.rhs));
      w.check("interpolation equality q=" + report::num(q) + " p=" + report::num(p), std::abs(c.lhs - c.rhs) <= t,
              report::quantity(c.lhs, c.lhs_error, c.provenance), report::quantity(c.rhs, c.rhs_error, c.provenance), t,
              "|lhs - rhs| <= tolerance", c.provenance);
    }
  }
}

// ---------------------------------------------------------------------------
// Dimension-free kinds
// ---------------------------------------------------------------------------

inline void run_kernel_audit(ReportWriter& w, const config::Node& root) {
  const double mass_tol = tol_of(root, "mass", 1e-9);
  const double moment_tol = tol_of(root, "moment", 1e-8);
  const double delta = root.number("delta", 0.1);
  if (!(delta > 0.0)) root.at("delta").fail("must be positive");
  const std::vector<double> alphas = root.at("alphas").numbers();
  for (std::size_t i = 0; i < alphas.size(); ++i)
    if (!(alphas[i] > 0.0)) root.at("alphas").index(i).fail("alpha must be positive");
  std::vector<int> dims;
  for (const auto& d : root.at("dimensions").items()) {
    const long long v = d.as_int();
    if (v < 1 || v > 3) d.fail("dimension must be 1, 2 or 3");
    dims.push_back(static_cast<int>(v));
  }
  const long long tail = root.integer("tail_window", 4);
  if (tail < 2) root.at("tail_window").fail("need at least 2 rows");
  const EpsilonGrid std_grid = grid_of(root, "standard", EpsilonGrid::default_variation());
  const EpsilonGrid log_grid = grid_of(root, "logarithmic", EpsilonGrid::log_log(2.0, 1e4, 10));

  std::string csv = "family,dim,log_epsilon,epsilon,mass,mass_err,mass_numeric,support_tail,alpha,moment_closed,moment_quadrature\n";
  json table = json::array();
  for (const auto& fam : root.at("families").items()) {
    std::vector<std::optional<double>> omegas;
    const std::string kind = fam.string("kind");
    if (kind == "logarithmic" && fam.has("omega") && fam.at("omega").raw().is_array()) {
      for (double o : fam.at("omega").numbers()) omegas.push_back(o);
    } else {
      omegas.push_back(std::nullopt);
    }
    for (const auto& om : omegas) {
      for (int dim : dims) {
        const KernelFamily k = config::parse_kernel_family(fam, dim, om);
        const bool is_log = k.kind == KernelKind::Logarithmic;
        const auto eps = (is_log ? log_grid : std_grid).values();
        const std::string tag = k.name() + " N=" + std::to_string(dim);
        double worst_mass = 0, worst_moment = 0;
        double last_tail = std::numeric_limits<double>::quiet_NaN();
        std::map<double, std::vector<double>> moments;  // alpha -> rows
        for (const Scale& e : eps) {
          const QuadResult m = kernel_mass(k, e);
          worst_mass = std::max(worst_mass, std::abs(m.value - 1.0));
          std::string mnum = "";
          if (e.log_value > -700.0) {
            try {
              const QuadResult mn = kernel_mass_numeric(k, e.value());
              mnum = report::num(mn.value);
            } catch (const Error&) {
              mnum = "";
            }
          }
          last_tail = support_tail(k, e, delta);
          const std::string base = report::csv_field(k.name()) + "," + std::to_string(dim) + "," + report::num(e.log_value) +
                                   "," + report::num(e.value()) + "," + report::num(m.value) + "," +
                                   report::num(m.error_estimate) + "," + mnum + "," +
                                   report::num(last_tail);
          w.plot("kernel_mass", -e.log_value, m.value - 1.0, tag);
          if (is_log) {
            for (double a : alphas) {
              const double c = log_kernel_moment(e, k.omega, a, dim);
              const QuadResult qd = log_kernel_moment_quadrature(e, k.omega, a, dim);
              worst_moment = std::max(worst_moment, std::abs(c - qd.value));
              moments[a].push_back(c);
              csv += base + "," + report::num(a) + "," + report::num(c) + "," + report::num(qd.value) + "\n";
              w.plot("log_kernel_moment", -e.log_value, c, tag + " alpha=" + report::num(a));
            }
          } else {
            csv += base + ",,,\n";
          }
        }
        const std::string prov = "kernel audit(" + tag + ",grid=" + (is_log ? log_grid : std_grid).describe() + ")";
        w.check(tag + " mass", worst_mass <= mass_tol, report::quantity(worst_mass, 0.0, "max |mass - 1| over rows, analytic path"),
                report::quantity(0.0, 0.0, "unit mass"), mass_tol, "lhs <= tolerance", prov);
        w.check(tag + " support_tail(delta=" + report::num(delta) + ") at the last row", last_tail == 0.0,
                report::quantity(last_tail, 0.0, "support_tail at the smallest eps"), report::quantity(0.0, 0.0, "exact zero"),
                0.0, "lhs == 0", prov);
        if (is_log) {
          w.check(tag + " log moment closed form vs quadrature", worst_moment <= moment_tol,
                  report::quantity(worst_moment, 0.0, "max |closed - quadrature| over rows and alphas"),
                  report::quantity(0.0, 0.0, "agreement"), moment_tol, "lhs <= tolerance", prov);
          for (const auto& [a, rows] : moments) {
            bool dec = true;
            const std::size_t start = rows.size() > static_cast<std::size_t>(tail) ? rows.size() - tail : 0;
            for (std::size_t i = start + 1; i < rows.size(); ++i) dec = dec && rows[i] < rows[i - 1];
            w.check(tag + " log moment alpha=" + report::num(a) + " decreasing over the tail", dec,
                    report::quantity(rows.back(), 0.0, "log_kernel_moment at the smallest eps"),
                    report::quantity(rows[start], 0.0, "log_kernel_moment at the start of the tail"), 0.0,
                    "strictly decreasing over the last " + std::to_string(rows.size() - start) + " rows", prov);
          }
        }
        json row;
        row["family"] = k.name();
        row["dim"] = dim;
        row["worst_mass_error"] = report::jnum(worst_mass);
        row["final_support_tail"] = report::jnum(last_tail);
        if (is_log) row["worst_moment_mismatch"] = report::jnum(worst_moment);
        table.push_back(row);
      }
    }
  }
  w.add_file("kernel_audit.csv", csv);
  w.table("kernel_audit", table);
  w.plot_axis("kernel_mass", "|ln eps|");
  w.plot_axis("log_kernel_moment", "|ln eps|");
}

inline void run_constants(ReportWriter& w, const config::Node& root) {
  std::vector<int> dims;
  if (root.has("dimension")) {
    const long long v = root.at("dimension").as_int();
    if (v < 1 || v > 3) root.at("dimension").fail("dimension must be 1, 2 or 3");
    dims.push_back(static_cast<int>(v));
  } else {
    for (const auto& d : root.at("dimensions").items()) {
      const long long v = d.as_int();
      if (v < 1 || v > 3) d.fail("dimension must be 1, 2 or 3");
      dims.push_back(static_cast<int>(v));
    }
  }
  const std::vector<double> qs = root.at("q_list").numbers();
  const double tol_m = tol_of(root, "moment1", 1e-9);
  const double tol_2 = tol_of(root, "nc_residual_2d", 1e-8);
  const double tol_3 = tol_of(root, "nc_residual_3d", 1e-6);
  json tables = json::array();
  for (int d : dims) {
    const ConstantsTable t = dimensional_constants(d, qs);
    const std::string pv = "dimensional_constants(N=" + std::to_string(d) + ")";
    json j;
    j["dim"] = d;
    j["sphere_measure"] = report::quantity(t.sphere_measure, 0.0, pv + ".sphere_measure,closed_form");
    j["moment1"] = report::quantity(t.moment1, 0.0, pv + ".moment1,closed_form");
    j["moment1_averaged"] = report::quantity(t.moment1_averaged, 0.0, pv + ".moment1/sphere_measure");
    j["C_N"] = report::quantity(t.C_N, 0.0, pv + ".moment1/N");
    if (d >= 2) {
      j["nc_integral"] = report::quantity(t.nc_integral, t.nc_error, pv + ".nc_integral,gauss_kronrod_61");
      j["nc_residual"] = report::quantity(t.nc_residual, t.nc_error, pv + ".|nc_integral - moment1|");
    }
    json ms = json::array();
    for (const auto& m : t.moments)
      ms.push_back(json{{"q", m.q},
                        {"moment", report::quantity(m.moment, 0.0, pv + ".sphere_moment(q),lgamma")},
                        {"hatC", report::quantity(m.hatC, 0.0, pv + ".sphere_moment(q)/sphere_measure")}});
    j["moments"] = ms;
    tables.push_back(j);

    const double expect = d == 1 ? 2.0 : d == 2 ? 4.0 : 2.0 * kPi;
    const double tol = d == 3 ? tol_m : 0.0;
    w.check("moment1 N=" + std::to_string(d), std::abs(t.moment1 - expect) <= tol,
            report::quantity(t.moment1, 0.0, pv + ".moment1"), report::quantity(expect, 0.0, "closed form"), tol,
            "|lhs - rhs| <= tolerance", pv);
    if (d >= 2) {
      const double tn = d == 2 ? tol_2 : tol_3;
      w.check("nc_residual N=" + std::to_string(d), t.nc_residual <= tn,
              report::quantity(t.nc_residual, t.nc_error, pv + ".nc_residual"), report::quantity(0.0, 0.0, "zero"), tn,
              "lhs <= tolerance", pv);
    }
    for (const auto& m : t.moments) {
      // an independent evaluation of int |z_1|^q over the sphere
      double num = 0.0;
      if (d == 1) {
        num = 2.0;
      } else if (d == 2) {
        num = integrate_1d([&](double th) { return std::pow(std::abs(std::cos(th)), m.q); }, 0.0, 2.0 * kPi, 1e-13);
      } else {
        num = 2.0 * kPi * integrate_1d([&](double c) { return std::pow(std::abs(c), m.q); }, -1.0, 1.0, 1e-13);
      }
      const double tq = 1e-9 * std::max(1.0, std::abs(num));
      w.check("sphere_moment q=" + report::num(m.q) + " N=" + std::to_string(d), std::abs(m.moment - num) <= tq,
              report::quantity(m.moment, 0.0, pv + ".sphere_moment"), report::quantity(num, 0.0, "adaptive quadrature"),
              tq, "|lhs - rhs| <= tolerance", pv);
    }
  }
  w.table("constants", tables);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

template <int N, int D>
void run_field_kind(ReportWriter& w, const std::string& kind, const config::Node& root, const RunOptions& opt) {
  const Setup<N, D> s = make_setup<N, D>(root, opt);
  if (kind == "jump_chain")
    run_jump_chain(w, root, s, true);
  else if (kind == "kernel_equivalence")
    run_jump_chain(w, root, s, false);
  else if (kind == "sandwich")
    run_sandwich(w, root, s);
  else if (kind == "interpolation")
    run_interpolation(w, root, s);
  else if (kind == "truncation_convergence")
    run_truncation(w, root, s);
  else if (kind == "bounds_audit")
    run_bounds_audit(w, root, s);
  else
    throw ValidationError("kind", "unknown experiment kind '" + kind + "'");
}

/// Calls fn.template operator()<N, D>() for the supported (dimension, components) pairs.
template <class F>
decltype(auto) dispatch_dims(const config::Node& root, F&& fn) {
  const long long n = root.integer("dimension", 1);
  const long long d = root.integer("components", 1);
  if (n == 1 && d == 1) return fn.template operator()<1, 1>();
  if (n == 2 && d == 1) return fn.template operator()<2, 1>();
  if (n == 3 && d == 1) return fn.template operator()<3, 1>();
  if (n == 1 && d == 2) return fn.template operator()<1, 2>();
  if (n < 1 || n > 3) root.at("dimension").fail("dimension must be 1, 2 or 3");
  root.at("components").fail("supported (dimension, components): (1,1), (2,1), (3,1), (1,2)");
  return fn.template operator()<1, 1>();
}

inline json echo_config(json eff) {
  eff.erase("output");
  return eff;
}

inline json effective_config_with_seed(const json& user, const RunOptions& opt) {
  json eff = effective_config(user);
  if (opt.seed && eff.contains("seed")) eff["seed"] = *opt.seed;
  return eff;
}

/// One functional from the config's "functional" section, as a sweep closure.
template <int N, int D>
SweepFunctional functional_closure(const config::Node& root, const Setup<N, D>& s, std::string& id) {
  const config::Node fn = root.at("functional");
  const std::string name = fn.string("name");
  id = name;
  if (name == "spherical_variation") return spherical_fn(s);
  if (name == "directional_variation") {
    const Vec<N> n = direction_of<N>(fn.at("direction"));
    id += "(n=" + fmt_vec<N>(n) + ")";
    return [&s, n](Scale e, const QuadBudget&) { return directional_variation(s.field, s.P, n, e.value()); };
  }
  if (name == "brq_double_integral")
    return [&s](Scale e, const QuadBudget& b) { return brq_double_integral(s.field, s.P, e.value(), b); };
  if (name == "besov_constant") {
    const KernelFamily k = config::parse_kernel_family(fn.at("kernel"), N);
    id += "[" + k.name() + "]";
    return besov_constant_fn(s, k);
  }
  if (name == "gagliardo_constant") {
    if (!s.eta) root.at("mollifier").fail("required for gagliardo_constant");
    return gagliardo_fn(s);
  }
  if (name == "gagliardo_seminorm")
    return [&s](Scale, const QuadBudget& b) { return gagliardo_seminorm_q(s.field, s.P, b); };
  if (name == "besov_seminorm") return [&s](Scale, const QuadBudget&) { return besov_seminorm_q(s.field, s.P); };
  if (name == "lq_norm")
    return [&s](Scale, const QuadBudget&) { return lq_norm_q(s.field, s.P.q, domain_for(s.field, s.P)); };
  if (name == "total_variation") return [&s](Scale, const QuadBudget&) { return total_variation(s.field); };
  fn.at("name").fail("unknown functional '" + name + "'");
  return {};
}

}  // namespace detail

/// Evaluates the config's functional at its "epsilon".
inline json evaluate_functional(const json& user_config, RunOptions opt) {
  json eff = detail::effective_config_with_seed(user_config, opt);
  const config::Node root(eff, "");
  if (!eff.contains("functional")) throw ValidationError("functional", "this kind has no functional section");
  const double eps = root.at("functional").number("epsilon", 0.01);
  if (!(eps > 0.0)) root.at("functional").at("epsilon").fail("must be positive");
  return detail::dispatch_dims(root, [&]<int N, int D>() {
    const detail::Setup<N, D> s = detail::make_setup<N, D>(root, opt);
    std::string id;
    const SweepFunctional fn = detail::functional_closure<N, D>(root, s, id);
    const FunctionalValue v = fn(Scale::of(eps), s.budget_for(id));
    json j;
    j["functional"] = id;
    j["params"] = eff.contains("params") ? eff["params"] : json::object();
    j["epsilon"] = eps;
    j["value"] = report::jnum(v.value);
    j["error"] = report::jnum(v.error_estimate);
    j["low_confidence"] = v.low_confidence;
    j["evaluations"] = v.evaluations;
    j["provenance"] = v.provenance;
    return j;
  });
}

/// Sweeps the config's functional over its grid (and extrapolates if a model is given).
inline EpsilonSweepResult sweep_functional(const json& user_config, RunOptions opt) {
  json eff = detail::effective_config_with_seed(user_config, opt);
  const config::Node root(eff, "");
  if (!eff.contains("functional")) throw ValidationError("functional", "this kind has no functional section");
  const config::Node fnode = root.at("functional");
  const EpsilonGrid grid = fnode.has("grid") ? config::parse_grid(fnode.at("grid")) : EpsilonGrid::default_variation();
  std::optional<int> tail;
  if (fnode.has("tail_window")) {
    const long long t = fnode.at("tail_window").as_int();
    if (t < 1) fnode.at("tail_window").fail("must be >= 1");
    tail = static_cast<int>(t);
  }
  return detail::dispatch_dims(root, [&]<int N, int D>() {
    const detail::Setup<N, D> s = detail::make_setup<N, D>(root, opt);
    std::string id;
    const SweepFunctional fn = detail::functional_closure<N, D>(root, s, id);
    EpsilonSweepResult sw = epsilon_sweep(id, grid, fn, s.budget_for(id), tail);
    if (fnode.has("model")) {
      const auto m = config::parse_model_choice(fnode.opt("model"), {ExtrapolationModel::ConstantTail, 1.0});
      sw.extrapolated = extrapolate(sw, m.model, m.power);
    }
    return sw;
  });
}

/// Validates, runs and reports one experiment. Validation problems throw
/// ValidationError; per-row failures end up in the report.
inline ExperimentReport run_experiment(const json& user_config, RunOptions opt) {
  json eff = detail::effective_config_with_seed(user_config, opt);
  const std::string kind = eff["kind"].get<std::string>();
  const config::Node root(eff, "");
  if (opt.out_dir.empty() && root.has("output") && root.at("output").has("dir"))
    opt.out_dir = root.at("output").string("dir");
  if (opt.threads < 1) throw ValidationError("threads", "must be >= 1");
  ReportWriter w(kind, opt);
  w.set_config(detail::echo_config(eff));
  if (kind == "kernel_audit") {
    detail::run_kernel_audit(w, root);
  } else if (kind == "constants") {
    detail::run_constants(w, root);
  } else {
    detail::dispatch_dims(root, [&]<int N, int D>() { detail::run_field_kind<N, D>(w, kind, root, opt); });
  }
  return w.finish();
}

}  // namespace besov
