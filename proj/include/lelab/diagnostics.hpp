#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lelab/fem.hpp"
#include "lelab/geometry.hpp"
#include "lelab/numerics.hpp"
#include "lelab/records.hpp"
#include "lelab/solver.hpp"

namespace lelab {

struct EnergyQuantities {
  double beta = 0.0;        // p u^T K u
  double p_int_u_p1 = 0.0;  // p int u^(p+1), diagnostic rule
  double gap = 0.0;
  double gap_rel = 0.0;
};
EnergyQuantities energy_quantities(const FemSpace& space, const SolveRecord& rec);

struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs = 0.0;
  double rel = 0.0;  // abs / |lhs|, reported as 0 when both sides vanish
};

/// 4/(p+1) int u^(p+1) against sum over boundary edges of (x, nu) u_nu^2 |e|.
IdentityResidual pohozaev_residual(const FemSpace& space, const SolveRecord& rec,
                                   const Domain& domain);

/// Principal Dirichlet eigenpair of the space, L1-normalized with the hat
/// integrals.
EigenPair dirichlet_eigenpair(const FemSpace& space);

/// lambda (u, phi)_M against int u^p phi.
IdentityResidual eigen_identity_gap(const FemSpace& space, const SolveRecord& rec,
                                    const EigenPair& eig);

/// int u^p against sum (-u_nu) |e|.
IdentityResidual flux_gap(const FemSpace& space, const SolveRecord& rec);

struct GreenReport {
  double value = 0.0;              // int G u^p with the pole at x_max
  double log_part = 0.0;           // (1/2pi) int log(1/|y - x_max|) u^p
  double corrector_part = 0.0;     // int g u^p
  double gap = 0.0;                // |M - value| / M
  double corrector_min = 0.0;
  double corrector_max = 0.0;
  double harmonic_residual = 0.0;  // ||(K g) on interior rows|| / ||K lift||
  std::vector<double> corrector;
};

/// Green representation M = int G u^p, G = -(1/2pi) log|y - x_max| - g with g
/// the discrete harmonic extension of the log boundary data. Cells touching
/// the pole are integrated in collapsed (Duffy) coordinates. Throws
/// PoleTooCloseToBoundary when the clearance is below 5h.
GreenReport green_representation_gap(const FemSpace& space, const SolveRecord& rec,
                                     const Domain& domain);

/// v = 1 - u/M on x = M^((p-1)/2) (y - x_max).
VTransformReport v_transform_report(const Mesh& mesh, const SolveRecord& rec);

/// (p M^(p-1))^(-1/2), formed in log space.
double bubble_scale(double p, double M);

/// U(x) = -2 log(1 + |x|^2 / 8).
double liouville_profile(double r);

/// sup over mesh nodes with |x| <= 5 of |w_p(x) - U(x)|, w_p = p (u(x_max + eps_p x) - M) / M.
/// Throws InsufficientResolution with fewer than 50 nodes in the disk.
double bubble_distance(const Mesh& mesh, const SolveRecord& rec);

/// Local maxima >= threshold * M, merged within 10 eps_p, strongest first.
std::vector<Concentration> concentration_candidates(const Mesh& mesh, const SolveRecord& rec,
                                                    double threshold = 0.5);

/// int u^p (diagnostic rule).
double mass_bound(const Mesh& mesh, const SolveRecord& rec);

double peak_clearance(const SolveRecord& rec, const Domain& domain);

struct DiagnosticsOptions {
  bool eigen = true;
  bool green = true;
  bool bubble = true;
  bool v_transform = true;
  bool concentrations = true;
  double concentration_threshold = 0.5;
};

/// Fills the whole bundle. Metrics whose preconditions fail stay empty with a
/// note. `eig` may carry a precomputed eigenpair for the same mesh.
DiagnosticsBundle compute_diagnostics(const Problem& problem, const SolveRecord& rec,
                                      const DiagnosticsOptions& opts = {},
                                      const EigenPair* eig = nullptr);

/// Diagnoses every converged record in place, using up to `threads` workers.
void diagnose_records(const Problem& problem, std::span<SolveRecord> records,
                      const DiagnosticsOptions& opts, unsigned threads);

}  // namespace lelab
