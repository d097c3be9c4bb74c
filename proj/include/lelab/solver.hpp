#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lelab/fem.hpp"
#include "lelab/geometry.hpp"
#include "lelab/records.hpp"

namespace lelab {

/// Positive radial solution of u'' + u'/r + u^p = 0 on the disk of radius
/// `radius`, u'(0) = 0, u(radius) = 0.
class RadialSolution {
 public:
  double p = 0.0;
  double radius = 1.0;
  double M = 0.0;                 // u(0)
  double du_boundary = 0.0;       // u'(radius)
  double int_u_p1_rdr = 0.0;      // int_0^radius u^(p+1) r dr
  double int_u_p_rdr = 0.0;       // int_0^radius u^p r dr
  std::vector<double> r;          // profile grid, r[0] = 0, r.back() = radius
  std::vector<double> u;

  /// Profile value at 0 <= s <= radius.
  double value_at(double s) const;

  /// Pohozaev sides 4/(p+1) * 2 pi int u^(p+1) r dr and 2 pi radius^2 u'(R)^2.
  double pohozaev_lhs() const;
  double pohozaev_rhs() const;

  // Dense output in t = log r: (t, u, r u') at the integrator's steps; the
  // series expansion covers r below exp(t.front()).
  std::vector<double> t_knots, u_knots, s_knots;
  double series_c2 = 0.0, series_c4 = 0.0;
};

/// Shooting on a = u(0) in [0.1, 10] with an adaptive Dormand-Prince
/// integrator in t = log r. `tol` bounds the relative error of the zero.
RadialSolution radial_shoot(double p, double tol = 1e-12, double radius = 1.0);

/// Independent route: fixed-step RK4 on the same shot, Richardson-extrapolated
/// over steps dt and dt/2. Returns u(0).
double radial_shoot_fixed_step(double p, int steps = 20000, double radius = 1.0);

/// Domain, mesh and assembled operators of one discrete problem.
struct Problem {
  Domain domain;
  std::shared_ptr<const FemSpace> space;

  Problem(Domain d, std::shared_ptr<const Mesh> mesh);
  const Mesh& mesh() const { return space->mesh(); }
};

struct InitOptions {
  double gradient_tol = 1e-6;
  int max_iterations = 5000;
};

struct InitResult {
  Field u;
  double multiplier = 0.0;   // mu in -Lap v = mu v^p
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Constrained minimization of 1/2 v^T K v on {int |v|^(p+1) = 1} by
/// projected gradient descent in the stiffness metric, then u = mu^(1/(p-1)) v.
InitResult least_energy_init(const FemSpace& space, double p, const InitOptions& opts = {});

struct NewtonOptions {
  double tol = 1e-9;         // residual <= tol * (1 + ||K u||)
  int max_iterations = 50;
  int max_halvings = 30;
};

/// Damped Newton on the discrete Lane-Emden residual. Throws NotConverged,
/// CollapsedToZero or Overflow.
SolveRecord newton_refine(const Problem& problem, std::span<const double> u0, double p,
                          const NewtonOptions& opts = {});

struct SweepOptions {
  NewtonOptions newton;
  InitOptions init;
  bool continuation = true;     // warm start from the previous exponent
  int iteration_spike = 8;      // more Newton steps than this triggers a halved step
  int max_halvings = 6;
};

/// Ascending exponents; failures are recorded per exponent. Throws SweepEmpty
/// if nothing converges.
std::vector<SolveRecord> continuation_sweep(const Problem& problem, std::span<const double> p_values,
                                            const SweepOptions& opts = {});

/// Seed for exponent p_next from a solution at p with maximum M.
std::vector<double> continuation_seed(std::span<const double> u, double M, double p, double p_next);

}  // namespace lelab
