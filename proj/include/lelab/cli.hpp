#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lelab/diagnostics.hpp"
#include "lelab/geometry.hpp"
#include "lelab/records.hpp"
#include "lelab/solver.hpp"

namespace lelab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerify = 3;

struct RefineSpec {
  bool enabled = true;
  bool auto_center = false;          // "center": "auto" -> peak of a coarse solve
  Vec2 center{0.0, 0.0};
  std::optional<double> radius;      // default 0.3 * dist(center, boundary)
  std::optional<double> min_size;    // default from the radial bubble scale at max p
};

struct SolverSpec {
  double newton_tol = 1e-9;
  int max_iter = 50;
  bool continuation = true;
  double init_tol = 1e-6;
};

struct OutputSpec {
  std::string csv, json, field, mesh;
};

struct VerifyTolerances {
  double pohozaev_rel = 0.05;
  double eigen_rel = 0.05;
  double green_rel = 0.05;
  double flux_rel = 0.1;
  double energy_gap_rel = 0.01;
  double corrupt_scale = 1.0;  // multiplies the converged field before verification
};

struct RunConfig {
  std::string echo;  // the parsed document, re-serialized
  Domain domain = Domain::disk(1.0);
  double h = 0.025;
  RefineSpec refine;
  std::vector<double> p_values;
  SolverSpec solver;
  DiagnosticsOptions diagnostics;
  OutputSpec output;
  VerifyTolerances verify;
  std::optional<std::uint64_t> seed;
};

/// Strict parser: unknown keys, wrong types and invalid values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Mesh for the configured domain, h and refinement.
std::shared_ptr<const Mesh> build_mesh(const RunConfig& cfg);

/// Worker count from LELAB_THREADS, else the hardware concurrency.
unsigned thread_budget();

std::string csv_header();
std::string csv_row(const SolveRecord& rec);
/// One solve as the JSON report (config_echo, record, diagnostics, versions).
std::string json_report(const RunConfig& cfg, const SolveRecord& rec);
std::string json_sweep_report(const RunConfig& cfg, const std::vector<SolveRecord>& recs);

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_oracle(double p, int points, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace lelab::cli
