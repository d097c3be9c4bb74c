#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lelab/cli.hpp"
#include "lelab/errors.hpp"
#include "lelab/solver.hpp"

using namespace lelab;
using namespace lelab::cli;
using nlohmann::json;

namespace {
const char* kColumns =
    "status,p,h,M,x_max_x,x_max_y,clearance,beta,p_int_u_p1,int_u_p,energy_gap_rel,"
    "pohozaev_rel,eigen_rel,flux_rel,green_rel,bubble_dist,m1,beta_pred,newton_iters";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "lelab_test_cli";
  std::filesystem::create_directories(d);
  return d;
}

int run_args(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}
}  // namespace

TEST_CASE("strict config parsing") {
  const RunConfig cfg = parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": 3}})");
  CHECK(cfg.p_values == std::vector<double>{3.0});
  CHECK(cfg.h == 0.025);
  CHECK(cfg.refine.enabled);

  const RunConfig range = parse_config(
      R"({"domain": {"kind": "ellipse", "a": 1.5, "b": 1}, "sweep": {"start": 2, "stop": 5}})");
  CHECK(range.p_values == std::vector<double>{2, 3, 4, 5});
  CHECK(range.domain.semi_axis_a() == 1.5);

  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": 3}, "extra": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}, "mesh": {"hh": 0.1}, "sweep": {"p": 3}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "square"}, "sweep": {"p": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk", "radius": -1}, "sweep": {"p": 3}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": [3, 2]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": "3"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": 3}, "seed": -1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"domain": {"kind": "disk"}})"), ConfigError);

  try {
    parse_config("{\n  \"domain\": {\"kind\" \"disk\"}\n}");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("column") != std::string::npos);
  }
  try {
    parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": 0.5}})");
    FAIL("expected a validation error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("exponent must exceed 1") != std::string::npos);
  }
}

TEST_CASE("thread budget honours LELAB_THREADS") {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  setenv("LELAB_THREADS", "1", 1);
  CHECK(thread_budget() == 1);
  setenv("LELAB_THREADS", "100000", 1);
  CHECK(thread_budget() == hw);
  unsetenv("LELAB_THREADS");
  CHECK(thread_budget() == hw);
}

TEST_CASE("solve: JSON report") {
  const RunConfig cfg = parse_config(
      R"({"domain": {"kind": "disk"}, "mesh": {"h": 0.05}, "sweep": {"p": 3}, "seed": 11})");
  std::ostringstream out, err;
  REQUIRE(cmd_solve(cfg, out, err) == kExitOk);
  const json j = json::parse(out.str());
  for (const char* k : {"config_echo", "record", "diagnostics", "versions"}) CHECK(j.contains(k));
  CHECK(j.at("record").at("M").get<double>() == doctest::Approx(radial_shoot(3.0).M).epsilon(0.02));
  CHECK(j.at("config_echo").at("seed") == 11);
  // p = 3 has no bubble distance: null with a reason, never NaN.
  CHECK(j.at("diagnostics").at("bubble_dist").is_null());
  CHECK(j.at("diagnostics").at("null_reasons").contains("bubble_dist"));
  CHECK(out.str().find("NaN") == std::string::npos);
  CHECK(out.str().find("nan") == std::string::npos);

  std::ostringstream o2, e2;
  CHECK(cmd_solve(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": [3, 4]}})"), o2, e2) ==
        kExitConfig);
}

TEST_CASE("solve/verify via the command line: exit codes") {
  const auto dir = temp_dir();
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const std::string bad_json = write("bad.json", "{\n  \"domain\": {\"kind\" \"disk\"}\n}");
  const std::string bad_p = write("badp.json", R"({"domain": {"kind": "disk"}, "sweep": {"p": 0.5}})");
  CHECK(run_args({"lelab", "solve", "--config", bad_json}) == kExitConfig);
  CHECK(run_args({"lelab", "solve", "--config", bad_p}) == kExitConfig);
  CHECK(run_args({"lelab", "solve", "--config", (dir / "missing.json").string()}) == kExitConfig);
  CHECK(run_args({"lelab", "solve"}) == kExitConfig);
  CHECK(run_args({"lelab", "frobnicate"}) == kExitConfig);
  CHECK(run_args({"lelab", "oracle", "--p", "0.5"}) == kExitConfig);
  CHECK(run_args({"lelab", "oracle", "--p", "3"}) == kExitOk);
}

TEST_CASE("oracle command") {
  std::ostringstream out, err;
  REQUIRE(cmd_oracle(3.0, 0, out, err) == kExitOk);
  std::map<std::string, double> kv;
  std::istringstream is(out.str());
  std::string k;
  double v;
  while (is >> k >> v) kv[k] = v;
  CHECK(kv.size() == 6);  // scalars only, no profile rows
  CHECK(out.str().find("r u") == std::string::npos);
  CHECK(std::abs(kv["pohozaev_lhs"] - kv["pohozaev_rhs"]) <= 1e-8 * kv["pohozaev_lhs"]);

  std::ostringstream o100, e100;
  REQUIRE(cmd_oracle(100.0, 5, o100, e100) == kExitOk);
  const auto lines = split(o100.str(), '\n');
  CHECK(lines[1].rfind("M ", 0) == 0);
  const double m = std::stod(lines[1].substr(2));
  CHECK(m > 1.4);
  CHECK(m < 2.0);
  CHECK(lines[6] == "r u");
  CHECK(lines.size() == 6 + 1 + 5 + 1);
}

TEST_CASE("sweep: CSV contract and determinism") {
  const auto dir = temp_dir();
  const std::string csv_path = (dir / "sweep.csv").string();
  const RunConfig cfg = parse_config(
      R"({"domain": {"kind": "disk"}, "mesh": {"h": 0.05}, "sweep": {"start": 2, "stop": 30},
          "diagnostics": {"green": false}, "output": {"csv": ")" + csv_path + R"(", "json": ")" +
      (dir / "sweep.json").string() + R"("}})");
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(cfg, out, err) == kExitOk);
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  const std::string first = slurp(csv_path);
  const auto lines = split(first, '\n');
  REQUIRE(lines.size() == 1 + 29 + 1);  // header, rows, trailing newline
  CHECK(lines[0] == kColumns);
  CHECK(lines.back().empty());
  CHECK(first.find('\r') == std::string::npos);

  const json report = json::parse(slurp((dir / "sweep.json").string()));
  for (std::size_t i = 1; i <= 29; ++i) {
    const auto cells = split(lines[i], ',');
    REQUIRE(cells.size() == 19);
    CHECK(cells[0] == "ok");
    const double p = std::stod(cells[1]), M = std::stod(cells[3]);
    CHECK(p == double(i + 1));
    if (p >= 3) CHECK(M <= 4.0);
    // CSV and JSON scalars agree.
    const auto& rec = report.at("records").at(i - 1);
    CHECK(std::stod(cells[3]) == rec.at("record").at("M").get<double>());
    CHECK(std::stod(cells[7]) == rec.at("diagnostics").at("beta").get<double>());
    CHECK(cells[14].empty());  // green disabled
  }

  std::ostringstream out2, err2;
  REQUIRE(cmd_sweep(cfg, out2, err2) == kExitOk);
  CHECK(slurp(csv_path) == first);

  std::ostringstream o3, e3;
  CHECK(cmd_sweep(parse_config(R"({"domain": {"kind": "disk"}, "sweep": {"p": 3}})"), o3, e3) ==
        kExitConfig);
}

TEST_CASE("sweep: failures are recorded, all-fail exits 2") {
  const RunConfig cfg = parse_config(
      R"({"domain": {"kind": "disk"}, "mesh": {"h": 0.1}, "sweep": {"p": [2, 3]},
          "solver": {"newton_tol": 1e-30, "max_iter": 2}})");
  std::ostringstream out, err;
  CHECK(cmd_sweep(cfg, out, err) == kExitSolver);
  CHECK(err.str().find("SweepEmpty") != std::string::npos);

  SolveRecord failed;
  failed.status = "NotConverged";
  failed.p = 4.0;
  failed.h = 0.1;
  CHECK(csv_row(failed) == "NotConverged,4,0.1,,,,,,,,,,,,,,,,\n");
  CHECK(split(csv_header(), ',').size() == 19);
}

TEST_CASE("verify: identities, corruption and tolerance overrides") {
  const std::string base = R"({"domain": {"kind": "disk"}, "sweep": {"p": 5})";
  std::ostringstream out, err;
  CHECK(cmd_verify(parse_config(base + "}"), out, err) == kExitOk);
  CHECK(out.str().find("verify: all identities PASS") != std::string::npos);

  std::ostringstream o2, e2;
  CHECK(cmd_verify(parse_config(base + R"(, "verify": {"corrupt_scale": 1.1}})"), o2, e2) == kExitVerify);
  for (const char* row : {"pohozaev", "eigen"}) {
    const auto pos = o2.str().find(std::string("\n") + row);
    REQUIRE(pos != std::string::npos);
    const auto eol = o2.str().find('\n', pos + 1);
    CHECK(o2.str().substr(pos, eol - pos).find("FAIL") != std::string::npos);
  }

  std::ostringstream o3, e3;
  CHECK(cmd_verify(parse_config(base + R"(, "verify": {"pohozaev_rel": 1e-12}})"), o3, e3) == kExitVerify);
}
