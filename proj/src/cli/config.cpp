#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lelab/cli.hpp"
#include "lelab/errors.hpp"

namespace lelab::cli {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key))
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

double number(const json& j, const std::string& where, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path_of(where, key) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path_of(where, key) + ": must be finite");
  return x;
}

double positive(const json& j, const std::string& where, const char* key) {
  const double x = number(j, where, key);
  if (!(x > 0.0)) throw ConfigError(path_of(where, key) + ": must be positive");
  return x;
}

bool boolean(const json& j, const std::string& where, const char* key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path_of(where, key) + ": expected true or false");
  return v.get<bool>();
}

std::string text(const json& j, const std::string& where, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path_of(where, key) + ": expected a string");
  std::string s = v.get<std::string>();
  if (s.empty()) throw ConfigError(path_of(where, key) + ": path must be nonempty");
  return s;
}

std::vector<double> numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + ": expected a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(what + ": expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Domain parse_domain(const json& j) {
  require_object(j, "domain");
  if (!j.contains("kind")) throw ConfigError("domain.kind is required");
  const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  try {
    if (kind == "disk") {
      check_keys(j, "domain", {"kind", "radius"});
      return Domain::disk(j.contains("radius") ? positive(j, "domain", "radius") : 1.0);
    }
    if (kind == "ellipse") {
      check_keys(j, "domain", {"kind", "a", "b"});
      if (!j.contains("a") || !j.contains("b")) throw ConfigError("ellipse needs domain.a and domain.b");
      return Domain::ellipse(positive(j, "domain", "a"), positive(j, "domain", "b"));
    }
    if (kind == "fourier") {
      check_keys(j, "domain", {"kind", "cos", "sin"});
      return Domain::fourier(j.contains("cos") ? numbers(j.at("cos"), "domain.cos") : std::vector<double>{},
                             j.contains("sin") ? numbers(j.at("sin"), "domain.sin") : std::vector<double>{});
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
  throw ConfigError("domain.kind must be one of disk, ellipse, fourier");
}

std::vector<double> parse_sweep(const json& j) {
  require_object(j, "sweep");
  check_keys(j, "sweep", {"p", "start", "stop", "step"});
  std::vector<double> ps;
  if (j.contains("p")) {
    if (j.contains("start") || j.contains("stop") || j.contains("step"))
      throw ConfigError("sweep: give either p or start/stop/step, not both");
    const json& v = j.at("p");
    ps = v.is_number() ? std::vector<double>{v.get<double>()} : numbers(v, "sweep.p");
  } else {
    if (!j.contains("start") || !j.contains("stop"))
      throw ConfigError("sweep: needs p or start and stop");
    const double start = number(j, "sweep", "start"), stop = number(j, "sweep", "stop");
    const double step = j.contains("step") ? positive(j, "sweep", "step") : 1.0;
    for (long k = 0;; ++k) {
      const double p = start + static_cast<double>(k) * step;
      if (p > stop + 1e-9 * step) break;
      ps.push_back(p);
      if (k > 1000000) throw ConfigError("sweep: too many exponents");
    }
  }
  if (ps.empty()) throw ConfigError("sweep: no exponents");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(ps[i] > 1.0) || !std::isfinite(ps[i])) throw ConfigError("exponent must exceed 1");
    if (i > 0 && !(ps[i] > ps[i - 1])) throw ConfigError("sweep: exponents must be strictly ascending");
  }
  return ps;
}

}  // namespace

RunConfig parse_config(const std::string& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  require_object(doc, "config");
  check_keys(doc, "", {"domain", "mesh", "sweep", "solver", "diagnostics", "output", "verify", "seed"});
  RunConfig cfg;
  cfg.echo = doc.dump();

  if (!doc.contains("domain")) throw ConfigError("domain is required");
  cfg.domain = parse_domain(doc.at("domain"));

  if (doc.contains("mesh")) {
    const json& m = doc.at("mesh");
    require_object(m, "mesh");
    check_keys(m, "mesh", {"h", "refine"});
    if (m.contains("h")) cfg.h = positive(m, "mesh", "h");
    if (m.contains("refine")) {
      const json& r = m.at("refine");
      require_object(r, "mesh.refine");
      check_keys(r, "mesh.refine", {"enabled", "center", "radius", "min_size"});
      if (r.contains("enabled")) cfg.refine.enabled = boolean(r, "mesh.refine", "enabled");
      if (r.contains("center")) {
        const json& c = r.at("center");
        if (c.is_string() && c.get<std::string>() == "auto") {
          cfg.refine.auto_center = true;
        } else {
          const auto xy = numbers(c, "mesh.refine.center");
          if (xy.size() != 2) throw ConfigError("mesh.refine.center: expected [x, y] or \"auto\"");
          cfg.refine.center = {xy[0], xy[1]};
          if (!cfg.domain.contains(cfg.refine.center))
            throw ConfigError("mesh.refine.center lies outside the domain");
        }
      }
      if (r.contains("radius")) cfg.refine.radius = positive(r, "mesh.refine", "radius");
      if (r.contains("min_size")) cfg.refine.min_size = positive(r, "mesh.refine", "min_size");
    }
  }
  if (!(cfg.h < 0.5 * cfg.domain.min_radius()))
    throw ConfigError("mesh.h must be below half the smallest boundary radius");

  if (!doc.contains("sweep")) throw ConfigError("sweep is required");
  cfg.p_values = parse_sweep(doc.at("sweep"));

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    require_object(s, "solver");
    check_keys(s, "solver", {"newton_tol", "max_iter", "continuation", "init_tol"});
    if (s.contains("newton_tol")) cfg.solver.newton_tol = positive(s, "solver", "newton_tol");
    if (s.contains("max_iter")) {
      if (!s.at("max_iter").is_number_integer() || s.at("max_iter").get<long>() < 1)
        throw ConfigError("solver.max_iter: expected a positive integer");
      cfg.solver.max_iter = s.at("max_iter").get<int>();
    }
    if (s.contains("continuation")) cfg.solver.continuation = boolean(s, "solver", "continuation");
    if (s.contains("init_tol")) cfg.solver.init_tol = positive(s, "solver", "init_tol");
  }

  if (doc.contains("diagnostics")) {
    const json& d = doc.at("diagnostics");
    require_object(d, "diagnostics");
    check_keys(d, "diagnostics",
               {"eigen", "green", "bubble", "v_transform", "concentrations", "concentration_threshold"});
    auto& o = cfg.diagnostics;
    if (d.contains("eigen")) o.eigen = boolean(d, "diagnostics", "eigen");
    if (d.contains("green")) o.green = boolean(d, "diagnostics", "green");
    if (d.contains("bubble")) o.bubble = boolean(d, "diagnostics", "bubble");
    if (d.contains("v_transform")) o.v_transform = boolean(d, "diagnostics", "v_transform");
    if (d.contains("concentrations")) o.concentrations = boolean(d, "diagnostics", "concentrations");
    if (d.contains("concentration_threshold")) {
      o.concentration_threshold = number(d, "diagnostics", "concentration_threshold");
      if (!(o.concentration_threshold > 0.0 && o.concentration_threshold <= 1.0))
        throw ConfigError("diagnostics.concentration_threshold must lie in (0, 1]");
    }
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    require_object(o, "output");
    check_keys(o, "output", {"csv", "json", "field", "mesh"});
    if (o.contains("csv")) cfg.output.csv = text(o, "output", "csv");
    if (o.contains("json")) cfg.output.json = text(o, "output", "json");
    if (o.contains("field")) cfg.output.field = text(o, "output", "field");
    if (o.contains("mesh")) cfg.output.mesh = text(o, "output", "mesh");
  }

  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    require_object(v, "verify");
    check_keys(v, "verify",
               {"pohozaev_rel", "eigen_rel", "green_rel", "flux_rel", "energy_gap_rel", "corrupt_scale"});
    auto& t = cfg.verify;
    if (v.contains("pohozaev_rel")) t.pohozaev_rel = positive(v, "verify", "pohozaev_rel");
    if (v.contains("eigen_rel")) t.eigen_rel = positive(v, "verify", "eigen_rel");
    if (v.contains("green_rel")) t.green_rel = positive(v, "verify", "green_rel");
    if (v.contains("flux_rel")) t.flux_rel = positive(v, "verify", "flux_rel");
    if (v.contains("energy_gap_rel")) t.energy_gap_rel = positive(v, "verify", "energy_gap_rel");
    if (v.contains("corrupt_scale")) t.corrupt_scale = positive(v, "verify", "corrupt_scale");
  }

  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::shared_ptr<const Mesh> build_mesh(const RunConfig& cfg) {
  if (!cfg.refine.enabled) return std::make_shared<const Mesh>(generate_mesh(cfg.domain, cfg.h));
  Vec2 center = cfg.refine.center;
  if (cfg.refine.auto_center) {
    // Peak of the least-energy solution at the first exponent on a uniform mesh.
    const Problem coarse(cfg.domain, std::make_shared<const Mesh>(generate_mesh(cfg.domain, cfg.h)));
    const InitResult init = least_energy_init(*coarse.space, cfg.p_values.front(),
                                              {cfg.solver.init_tol, InitOptions{}.max_iterations});
    center = newton_refine(coarse, init.u.values, cfg.p_values.front()).x_max;
  }
  const double dist = cfg.domain.distance_to_boundary(center);
  Refinement r;
  r.center = center;
  r.radius = cfg.refine.radius.value_or(std::max(0.3 * dist, 2.0 * cfg.h));
  if (cfg.refine.min_size) {
    r.min_size = *cfg.refine.min_size;
  } else {
    // A twentieth of the bubble width at the largest exponent, estimated from
    // the radial solution on a disk of radius dist(center, boundary).
    const double p = cfg.p_values.back();
    const RadialSolution s = radial_shoot(p);
    r.min_size = 0.05 * dist * bubble_scale(p, s.M);
    r.min_size = std::max(r.min_size, 1e-13 * std::max(std::abs(center.x), std::abs(center.y)));
    r.min_size = std::min(r.min_size, cfg.h);
  }
  return std::make_shared<const Mesh>(generate_mesh(cfg.domain, cfg.h, r));
}

unsigned thread_budget() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LELAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return std::min(hw, static_cast<unsigned>(n));
  }
  return hw;
}

}  // namespace lelab::cli
