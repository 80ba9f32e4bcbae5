#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "besovlab/besovlab.hpp"

namespace {

using besov::json;

enum Exit { kPass = 0, kFail = 1, kInvalid = 2, kRuntime = 3 };

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", c.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "override the config seed");
}

json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw besov::ValidationError("--config", "cannot open " + path);
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw besov::ValidationError("--config", std::string("not valid JSON: ") + e.what());
  }
}

besov::RunOptions options_of(const Common& c) {
  besov::RunOptions o;
  o.out_dir = c.out;
  o.threads = c.threads;
  o.seed = c.seed;
  return o;
}

void print_verdicts(const besov::ExperimentReport& rep) {
  const json& s = rep.summary;
  for (const auto& v : s["verdicts"]) {
    std::cout << (v["pass"].get<bool>() ? "PASS " : "FAIL ") << v["chain"].get<std::string>() << " "
              << v["id"].get<std::string>();
    if (v.contains("worst_violation"))
      std::cout << " worst_violation=" << besov::report::num(v["worst_violation"].is_null() ? NAN : v["worst_violation"].get<double>())
                << " tolerance=" << besov::report::num(v["tolerance"].is_null() ? NAN : v["tolerance"].get<double>());
    if (v.contains("error")) std::cout << " error=" << v["error"].get<std::string>();
    std::cout << "\n";
  }
  std::size_t passed = 0;
  for (const auto& c : s["checks"]) {
    if (c["pass"].get<bool>())
      ++passed;
    else
      std::cout << "FAIL check " << c["id"].get<std::string>() << "\n";
  }
  if (!s["checks"].empty()) std::cout << "checks: " << passed << "/" << s["checks"].size() << " passed\n";
  for (const auto& e : s["errors"])
    std::cerr << "row error: " << e["where"].get<std::string>() << ": " << e["error"].get<std::string>() << "\n";
  for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
  std::cout << (rep.pass ? "overall: PASS" : "overall: FAIL") << "\n";
}

double value_of(const json& q) { return q["value"].is_null() ? NAN : q["value"].get<double>(); }

// aligned text view of the constants table
std::string constants_text(const json& tables) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-3s %-18s %-22s %s\n", "N", "quantity", "value", "convention");
  os << line;
  auto row = [&](int n, const std::string& name, double v, const char* conv) {
    std::snprintf(line, sizeof line, "%-3d %-18s %-22.15g %s\n", n, name.c_str(), v, conv);
    os << line;
  };
  for (const auto& t : tables) {
    const int n = t["dim"].get<int>();
    row(n, "sphere_measure", value_of(t["sphere_measure"]), "unnormalized H^{N-1}");
    row(n, "moment1", value_of(t["moment1"]), "unnormalized int |z1| dH");
    row(n, "moment1_averaged", value_of(t["moment1_averaged"]), "averaged over the sphere");
    row(n, "C_N", value_of(t["C_N"]), "moment1 / N");
    if (t.contains("nc_residual")) {
      row(n, "nc_integral", value_of(t["nc_integral"]), "int 2(1+|v|^2)^{-(N+1)/2} dv");
      row(n, "nc_residual", value_of(t["nc_residual"]), "|nc_integral - moment1|");
    }
    for (const auto& m : t["moments"]) {
      const std::string q = besov::report::num(m["q"].get<double>());
      row(n, "moment(q=" + q + ")", value_of(m["moment"]), "unnormalized int |z1|^q dH");
      row(n, "hatC(q=" + q + ")", value_of(m["hatC"]), "averaged");
    }
  }
  return os.str();
}

const std::string* find_content(const besov::ExperimentReport& rep, const std::string& name) {
  for (const auto& [n, c] : rep.contents)
    if (n == name) return &c;
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"besovlab: nonlocal seminorms, epsilon sweeps and jump-detection limit checks"};
  app.require_subcommand(1);

  Common kc, cc, sc, wc, ec;
  std::string kind;
  int dim = 0;

  auto* kernel_check = app.add_subcommand("kernel-check", "audit kernel masses, support tails and log moments (CSV)");
  add_common(kernel_check, kc, false);
  auto* constants = app.add_subcommand("constants", "dimensional constants table (aligned text and JSON)");
  add_common(constants, cc, false);
  constants->add_option("--dim", dim, "only this dimension (1..3)")->check(CLI::Range(1, 3));
  bool json_only = false;
  constants->add_flag("--json", json_only, "print only the JSON table");
  auto* seminorm = app.add_subcommand("seminorm", "evaluate the config's functional once (JSON)");
  add_common(seminorm, sc, true);
  auto* sweep = app.add_subcommand("sweep", "sweep the config's functional over eps (CSV)");
  add_common(sweep, wc, true);
  auto* experiment = app.add_subcommand("experiment", "run an experiment; exit 0 iff every verdict passes");
  add_common(experiment, ec, true);
  auto* defaults = app.add_subcommand("print-defaults", "print the default config of a kind (or of all kinds)");
  defaults->add_option("--kind", kind, "experiment kind");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*defaults) {
      if (kind.empty()) {
        json all = json::object();
        for (const auto& k : besov::experiment_kinds()) all[k] = besov::default_config(k);
        std::cout << all.dump(2) << "\n";
      } else {
        std::cout << besov::default_config(kind).dump(2) << "\n";
      }
      return kPass;
    }

    if (*kernel_check || *constants) {
      Common& c = *kernel_check ? kc : cc;
      json cfg = c.config.empty() ? json{{"kind", *kernel_check ? "kernel_audit" : "constants"}} : load_config(c.config);
      const std::string expect = *kernel_check ? "kernel_audit" : "constants";
      if (cfg.value("kind", std::string()) != expect) throw besov::ValidationError("kind", "expected '" + expect + "'");
      if (*constants && dim > 0) {
        cfg["dimension"] = dim;
      }
      const auto rep = besov::run_experiment(cfg, options_of(c));
      if (c.out.empty()) {
        if (*kernel_check) {
          std::cout << *find_content(rep, "kernel_audit.csv");
        } else {
          if (!json_only) std::cout << constants_text(rep.summary["tables"]["constants"]) << "\n";
          std::cout << rep.summary["tables"]["constants"].dump(2) << "\n";
        }
        for (const auto& ch : rep.summary["checks"])
          if (!ch["pass"].get<bool>()) std::cerr << "FAIL check " << ch["id"].get<std::string>() << "\n";
      } else {
        print_verdicts(rep);
      }
      return rep.pass ? kPass : kFail;
    }

    if (*seminorm) {
      const json r = besov::evaluate_functional(load_config(sc.config), options_of(sc));
      const std::string text = r.dump(2) + "\n";
      if (!sc.out.empty()) {
        std::filesystem::create_directories(sc.out);
        std::ofstream(std::filesystem::path(sc.out) / "seminorm.json", std::ios::binary) << text;
      }
      std::cout << text;
      return kPass;
    }

    if (*sweep) {
      const besov::EpsilonSweepResult sw = besov::sweep_functional(load_config(wc.config), options_of(wc));
      const std::string csv = besov::report::sweep_csv(sw);
      if (wc.out.empty()) {
        std::cout << csv;
      } else {
        std::filesystem::create_directories(wc.out);
        std::ofstream(std::filesystem::path(wc.out) / "sweep.csv", std::ios::binary) << csv;
        std::ofstream(std::filesystem::path(wc.out) / "sweep.json", std::ios::binary)
            << besov::report::sweep_json(sw).dump(2) << "\n";
        std::cout << "wrote " << (std::filesystem::path(wc.out) / "sweep.csv").string() << "\n";
      }
      return kPass;
    }

    if (*experiment) {
      const auto rep = besov::run_experiment(load_config(ec.config), options_of(ec));
      print_verdicts(rep);
      return rep.pass ? kPass : kFail;
    }
  } catch (const besov::ValidationError& e) {
    std::cerr << "validation error at " << (e.path().empty() ? std::string("<root>") : e.path()) << ": "
              << e.what_only() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kInvalid;
}
