#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lelab/fem.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

struct Concentration {
  Vec2 x;
  double m = 0.0;
  int node = -1;
};

struct VTransformReport {
  double min_v = 0.0;
  double v_at_peak = 0.0;
  /// max over r in [1/sqrt(p), 10/sqrt(p)] (rescaled units) of sup_{B_r} v / r^2
  double growth_ratio = 0.0;
  int radii_used = 0;
};

/// Every identity and asymptotic quantity measured on one solution. A metric
/// that could not be computed is empty and its reason is in `notes`.
struct DiagnosticsBundle {
  double M = 0.0;
  Vec2 x_max;
  double clearance = 0.0;

  double beta = 0.0;           // p * int |grad u|^2
  double p_int_u_p1 = 0.0;     // p * int u^(p+1)
  double int_u_p = 0.0;        // int u^p
  double energy_gap = 0.0;     // |beta - p_int_u_p1|
  double energy_gap_rel = 0.0;

  double pohozaev_lhs = 0.0;   // 4/(p+1) int u^(p+1)
  double pohozaev_rhs = 0.0;   // int (x, nu) u_nu^2
  double pohozaev_abs = 0.0;
  double pohozaev_rel = 0.0;

  double flux = 0.0;           // sum (-u_nu) |e|
  double flux_rel = 0.0;

  std::optional<double> eigen_lambda;
  std::optional<double> eigen_lhs;  // lambda int u phi
  std::optional<double> eigen_rhs;  // int u^p phi
  std::optional<double> eigen_rel;

  std::optional<double> green_value;  // int G u^p
  std::optional<double> green_rel;
  std::optional<double> corrector_min;
  std::optional<double> corrector_max;

  std::optional<double> bubble_dist;
  double eps_p = 0.0;                 // (p M^(p-1))^(-1/2)
  std::optional<VTransformReport> v_transform;

  std::vector<Concentration> concentrations;
  double beta_pred = 0.0;             // 8 pi sum m_j^2

  std::vector<std::string> notes;
};

struct SolveRecord {
  std::string status = "ok";  // "ok" or an error kind
  std::string message;
  double p = 0.0;
  Field u;
  double M = 0.0;
  int peak_node = -1;
  Vec2 x_max;
  double clearance = 0.0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;
  int iterations = 0;
  double h = 0.0;
  std::optional<DiagnosticsBundle> diagnostics;

  bool ok() const { return status == "ok"; }
};

}  // namespace lelab
