#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "lelab/cli.hpp"
#include "lelab/errors.hpp"

namespace lelab::cli {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

// Doubles as JSON numbers rounded to 12 significant digits, like the CSV.
json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return json::parse(fmt(x));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

bool is_config_error(const Error& e) {
  const std::string k = e.kind();
  return k == "ConfigError" || k == "InvalidDomain" || k == "NotStarShaped";
}

SweepOptions sweep_options(const RunConfig& cfg) {
  SweepOptions o;
  o.newton.tol = cfg.solver.newton_tol;
  o.newton.max_iterations = cfg.solver.max_iter;
  o.init.gradient_tol = cfg.solver.init_tol;
  o.continuation = cfg.solver.continuation;
  return o;
}

json versions() {
  return {{"lelab", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

json record_json(const SolveRecord& r) {
  json j = {{"status", r.status}, {"p", num(r.p)}, {"h", num(r.h)}, {"iterations", r.iterations}};
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.ok()) return j;
  j["M"] = num(r.M);
  j["peak_node"] = r.peak_node;
  j["x_max"] = {num(r.x_max.x), num(r.x_max.y)};
  j["clearance"] = num(r.clearance);
  j["residual_norm"] = num(r.residual_norm);
  json hist = json::array();
  for (double x : r.residual_history) hist.push_back(num(x));
  j["residual_history"] = hist;
  j["nodes"] = r.u.mesh ? r.u.mesh->num_nodes() : 0;
  j["triangles"] = r.u.mesh ? r.u.mesh->num_triangles() : 0;
  return j;
}

// Reason for an empty metric, taken from the bundle notes ("group: reason").
std::string reason(const DiagnosticsBundle& b, const std::string& group, const std::string& fallback) {
  for (const auto& n : b.notes)
    if (n.rfind(group + ": ", 0) == 0) return n.substr(group.size() + 2);
  return fallback;
}

json diagnostics_json(const DiagnosticsBundle& b) {
  json j = {{"M", num(b.M)},
            {"x_max", {num(b.x_max.x), num(b.x_max.y)}},
            {"clearance", num(b.clearance)},
            {"beta", num(b.beta)},
            {"p_int_u_p1", num(b.p_int_u_p1)},
            {"int_u_p", num(b.int_u_p)},
            {"energy_gap", num(b.energy_gap)},
            {"energy_gap_rel", num(b.energy_gap_rel)},
            {"pohozaev_lhs", num(b.pohozaev_lhs)},
            {"pohozaev_rhs", num(b.pohozaev_rhs)},
            {"pohozaev_abs", num(b.pohozaev_abs)},
            {"pohozaev_rel", num(b.pohozaev_rel)},
            {"flux", num(b.flux)},
            {"flux_rel", num(b.flux_rel)},
            {"eps_p", num(b.eps_p)},
            {"beta_pred", num(b.beta_pred)}};
  json reasons = json::object();
  auto optional = [&](const char* key, const std::optional<double>& v, const std::string& group,
                      const std::string& fallback) {
    if (v) {
      j[key] = num(*v);
    } else {
      j[key] = nullptr;
      reasons[key] = reason(b, group, fallback);
    }
  };
  optional("eigen_lambda", b.eigen_lambda, "eigen", "disabled");
  optional("eigen_lhs", b.eigen_lhs, "eigen", "disabled");
  optional("eigen_rhs", b.eigen_rhs, "eigen", "disabled");
  optional("eigen_rel", b.eigen_rel, "eigen", "disabled");
  optional("green_value", b.green_value, "green", "disabled");
  optional("green_rel", b.green_rel, "green", "disabled");
  optional("corrector_min", b.corrector_min, "green", "disabled");
  optional("corrector_max", b.corrector_max, "green", "disabled");
  optional("bubble_dist", b.bubble_dist, "bubble", "disabled");
  if (b.v_transform) {
    j["v_transform"] = {{"min_v", num(b.v_transform->min_v)},
                        {"v_at_peak", num(b.v_transform->v_at_peak)},
                        {"growth_ratio", num(b.v_transform->growth_ratio)},
                        {"radii_used", b.v_transform->radii_used}};
  } else {
    j["v_transform"] = nullptr;
    reasons["v_transform"] = "disabled";
  }
  json conc = json::array();
  for (const auto& c : b.concentrations)
    conc.push_back({{"x", {num(c.x.x), num(c.x.y)}}, {"m", num(c.m)}, {"node", c.node}});
  j["concentrations"] = conc;
  j["null_reasons"] = reasons;
  j["notes"] = b.notes;
  return j;
}

json record_with_diagnostics(const SolveRecord& r) {
  json j = {{"record", record_json(r)}};
  if (r.diagnostics) {
    j["diagnostics"] = diagnostics_json(*r.diagnostics);
  } else {
    j["diagnostics"] = nullptr;
    j["diagnostics_reason"] = r.ok() ? "not computed" : "solve failed: " + r.status;
  }
  return j;
}

void write_field(const std::string& path, const SolveRecord& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.u.values.size(); ++i) os << i << ' ' << fmt(r.u.values[i]) << '\n';
  write_file(path, os.str());
}

void write_mesh(const std::string& path, const Mesh& mesh) {
  std::ostringstream os;
  mesh.write_text(os);
  write_file(path, os.str());
}

// Exponents actually solved: a ramp from p = 2 is prepended when continuation
// is on, so that large exponents are reached from the least-energy start.
std::vector<double> solve_path(const RunConfig& cfg) {
  std::vector<double> path;
  if (cfg.solver.continuation && cfg.p_values.front() > 2.0) path.push_back(2.0);
  path.insert(path.end(), cfg.p_values.begin(), cfg.p_values.end());
  return path;
}

// Records for the requested exponents only.
std::vector<SolveRecord> select(std::vector<SolveRecord> all, const std::vector<double>& wanted) {
  std::vector<SolveRecord> out;
  for (auto& r : all)
    if (std::find(wanted.begin(), wanted.end(), r.p) != wanted.end()) out.push_back(std::move(r));
  return out;
}

struct Row {
  std::string identity;
  double lhs, rhs, gap, tol;
  bool pass;
};

void print_table(std::ostream& out, const std::vector<Row>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %20s %20s %14s %10s  %s\n", "identity", "lhs", "rhs",
                "rel_gap", "tol", "result");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %20.12g %20.12g %14.6e %10.3g  %s\n", r.identity.c_str(),
                  r.lhs + 0.0, r.rhs + 0.0, r.gap + 0.0, r.tol, r.pass ? "PASS" : "FAIL");
    out << buf;
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: ";
    if (e.kind() != "ConfigError") err << e.kind() << ": ";
    err << e.what() << '\n';
    return is_config_error(e) ? kExitConfig : kExitSolver;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace

std::string csv_header() {
  return "status,p,h,M,x_max_x,x_max_y,clearance,beta,p_int_u_p1,int_u_p,energy_gap_rel,"
         "pohozaev_rel,eigen_rel,flux_rel,green_rel,bubble_dist,m1,beta_pred,newton_iters\n";
}

std::string csv_row(const SolveRecord& r) {
  std::ostringstream os;
  os << r.status << ',' << fmt(r.p) << ',' << fmt(r.h);
  if (!r.ok()) {
    os << std::string(16, ',') << '\n';
    return os.str();
  }
  os << ',' << fmt(r.M) << ',' << fmt(r.x_max.x) << ',' << fmt(r.x_max.y) << ',' << fmt(r.clearance);
  if (r.diagnostics) {
    const auto& b = *r.diagnostics;
    os << ',' << fmt(b.beta) << ',' << fmt(b.p_int_u_p1) << ',' << fmt(b.int_u_p) << ','
       << fmt(b.energy_gap_rel) << ',' << fmt(b.pohozaev_rel) << ',' << fmt(b.eigen_rel) << ','
       << fmt(b.flux_rel) << ',' << fmt(b.green_rel) << ',' << fmt(b.bubble_dist) << ','
       << (b.concentrations.empty() ? std::string() : fmt(b.concentrations.front().m)) << ','
       << fmt(b.beta_pred);
  } else {
    os << std::string(11, ',');
  }
  os << ',' << r.iterations << '\n';
  return os.str();
}

std::string json_report(const RunConfig& cfg, const SolveRecord& rec) {
  json j = record_with_diagnostics(rec);
  j["config_echo"] = json::parse(cfg.echo);
  j["versions"] = versions();
  return j.dump(2) + "\n";
}

std::string json_sweep_report(const RunConfig& cfg, const std::vector<SolveRecord>& recs) {
  json list = json::array();
  for (const auto& r : recs) list.push_back(record_with_diagnostics(r));
  json j = {{"config_echo", json::parse(cfg.echo)}, {"records", list}, {"versions", versions()}};
  return j.dump(2) + "\n";
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.p_values.size() != 1) throw ConfigError("solve needs exactly one exponent");
    const auto mesh = build_mesh(cfg);
    const Problem problem(cfg.domain, mesh);
    std::vector<SolveRecord> recs = continuation_sweep(problem, solve_path(cfg), sweep_options(cfg));
    SolveRecord& rec = recs.back();
    if (!rec.ok()) {
      err << "error: p = " << fmt(rec.p) << ": " << rec.status << ": " << rec.message << '\n';
      return kExitSolver;
    }
    diagnose_records(problem, std::span(&rec, 1), cfg.diagnostics, thread_budget());
    const std::string report = json_report(cfg, rec);
    if (cfg.output.json.empty()) out << report;
    else write_file(cfg.output.json, report);
    if (!cfg.output.field.empty()) write_field(cfg.output.field, rec);
    if (!cfg.output.mesh.empty()) write_mesh(cfg.output.mesh, *mesh);
    return kExitOk;
  });
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.p_values.size() < 2) throw ConfigError("sweep needs at least two exponents");
    const auto mesh = build_mesh(cfg);
    const Problem problem(cfg.domain, mesh);
    std::vector<SolveRecord> recs = continuation_sweep(problem, cfg.p_values, sweep_options(cfg));
    diagnose_records(problem, recs, cfg.diagnostics, thread_budget());
    std::string csv = csv_header();
    for (const auto& r : recs) {
      csv += csv_row(r);
      if (!r.ok()) err << "warning: p = " << fmt(r.p) << ": " << r.status << ": " << r.message << '\n';
    }
    if (cfg.output.csv.empty()) out << csv;
    else write_file(cfg.output.csv, csv);
    if (!cfg.output.json.empty()) write_file(cfg.output.json, json_sweep_report(cfg, recs));
    if (!cfg.output.field.empty()) {
      for (auto it = recs.rbegin(); it != recs.rend(); ++it)
        if (it->ok()) {
          write_field(cfg.output.field, *it);
          break;
        }
    }
    if (!cfg.output.mesh.empty()) write_mesh(cfg.output.mesh, *mesh);
    return kExitOk;
  });
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto mesh = build_mesh(cfg);
    const Problem problem(cfg.domain, mesh);
    std::vector<SolveRecord> recs =
        select(continuation_sweep(problem, solve_path(cfg), sweep_options(cfg)), cfg.p_values);
    for (const auto& r : recs)
      if (!r.ok()) {
        err << "error: p = " << fmt(r.p) << ": " << r.status << ": " << r.message << '\n';
        return kExitSolver;
      }
    const double scale = cfg.verify.corrupt_scale;
    if (scale != 1.0) {
      for (auto& r : recs) {
        for (double& x : r.u.values) x *= scale;
        r.M *= scale;
      }
    }
    DiagnosticsOptions diag = cfg.diagnostics;
    diag.eigen = diag.green = true;
    diagnose_records(problem, recs, diag, thread_budget());

    const auto& t = cfg.verify;
    bool all = true;
    for (const auto& r : recs) {
      const auto& b = *r.diagnostics;
      char head[160];
      std::snprintf(head, sizeof head, "p = %.12g  h = %.12g  nodes = %zu  M = %.12g\n", r.p, r.h,
                    mesh->num_nodes(), r.M);
      out << head;
      std::vector<Row> rows;
      auto add = [&](const char* name, double lhs, double rhs, double gap, double tol) {
        rows.push_back({name, lhs, rhs, gap, tol, std::isfinite(gap) && gap <= tol});
      };
      add("energy", b.beta, b.p_int_u_p1, b.energy_gap_rel, t.energy_gap_rel);
      add("pohozaev", b.pohozaev_lhs, b.pohozaev_rhs, b.pohozaev_rel, t.pohozaev_rel);
      if (b.eigen_rel) add("eigen", *b.eigen_lhs, *b.eigen_rhs, *b.eigen_rel, t.eigen_rel);
      else add("eigen", NAN, NAN, NAN, t.eigen_rel);
      if (b.green_rel) {
        add("green", r.M, *b.green_value, *b.green_rel, t.green_rel);
        // Maximum principle: g is bounded below by its boundary data.
        double data_min = 0.0;
        for (std::size_t i = 0; i < mesh->num_nodes(); ++i)
          if (mesh->is_boundary(i))
            data_min = std::min(data_min, -std::log(norm(mesh->nodes()[i] - r.x_max)) /
                                              (2.0 * std::numbers::pi));
        add("corrector_min", *b.corrector_min, data_min,
            std::max(0.0, data_min - *b.corrector_min), 1e-3);
      } else {
        add("green", r.M, NAN, NAN, t.green_rel);
      }
      add("flux", b.int_u_p, b.flux, b.flux_rel, t.flux_rel);
      print_table(out, rows);
      for (const auto& n : b.notes) out << "note: " << n << '\n';
      for (const auto& row : rows) all = all && row.pass;
    }
    out << (all ? "verify: all identities PASS\n" : "verify: FAIL\n");
    return all ? kExitOk : kExitVerify;
  });
}

int cmd_oracle(double p, int points, std::ostream& out, std::ostream& err) {
  if (!(p > 1.0)) {
    err << "error: exponent must exceed 1\n";
    return kExitConfig;
  }
  if (points < 0) {
    err << "error: --points must be nonnegative\n";
    return kExitConfig;
  }
  return guarded(err, [&] {
    const RadialSolution s = radial_shoot(p);
    const double lhs = s.pohozaev_lhs(), rhs = s.pohozaev_rhs();
    out << "p " << fmt(p) << '\n'
        << "M " << fmt(s.M) << '\n'
        << "du_boundary " << fmt(s.du_boundary) << '\n'
        << "pohozaev_lhs " << fmt(lhs) << '\n'
        << "pohozaev_rhs " << fmt(rhs) << '\n'
        << "pohozaev_rel " << fmt(std::abs(lhs - rhs) / lhs) << '\n';
    if (points > 0) {
      out << "r u\n";
      for (int i = 0; i < points; ++i) {
        const double r = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        out << fmt(r) << ' ' << fmt(s.value_at(r)) << '\n';
      }
    }
    return kExitOk;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Lane-Emden numerical lab"};
  app.require_subcommand(1);
  std::string config_path;
  double p = 0.0;
  int points = 0;
  auto* solve = app.add_subcommand("solve", "solve one exponent and write the JSON report");
  auto* sweep = app.add_subcommand("sweep", "continuation sweep in p, one CSV row per exponent");
  auto* verify = app.add_subcommand("verify", "check the integral identities against tolerances");
  for (auto* sub : {solve, sweep, verify})
    sub->add_option("--config", config_path, "JSON configuration file")->required();
  auto* oracle = app.add_subcommand("oracle", "radial shooting solution on the unit disk");
  oracle->add_option("--p", p, "exponent")->required();
  oracle->add_option("--points", points, "number of profile samples");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (oracle->parsed()) return cmd_oracle(p, points, std::cout, std::cerr);
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (solve->parsed()) return cmd_solve(cfg, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(cfg, std::cout, std::cerr);
  return cmd_verify(cfg, std::cout, std::cerr);
}

}  // namespace lelab::cli
