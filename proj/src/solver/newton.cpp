#include <algorithm>
#include <cmath>
#include <string>

#include "lelab/errors.hpp"
#include "lelab/solver.hpp"

namespace lelab {

namespace {

constexpr double kCollapse = 1e-6;

}  // namespace

Problem::Problem(Domain d, std::shared_ptr<const Mesh> mesh)
    : domain(std::move(d)), space(std::make_shared<const FemSpace>(std::move(mesh))) {}

SolveRecord newton_refine(const Problem& problem, std::span<const double> u0, double p,
                          const NewtonOptions& opts) {
  if (!(p > 1.0)) throw std::invalid_argument("exponent must exceed 1");
  const FemSpace& space = *problem.space;
  const Mesh& mesh = space.mesh();
  if (u0.size() != mesh.num_nodes())
    throw DimensionMismatch("initial guess has " + std::to_string(u0.size()) + " entries for " +
                            std::to_string(mesh.num_nodes()) + " nodes");

  std::vector<double> u(u0.begin(), u0.end());
  apply_dirichlet(mesh, u);
  auto scale_of = [&](std::span<const double> v) {
    std::vector<double> kv = space.stiffness().multiply(v);
    apply_dirichlet(mesh, kv);
    return 1.0 + norm2(kv);
  };

  SolveRecord rec;
  rec.p = p;
  rec.h = mesh.h();
  std::vector<double> r = space.residual(u, p);
  double rn = norm2(r);
  rec.residual_history.push_back(rn);
  int it = 0;
  while (rn > opts.tol * scale_of(u)) {
    if (it >= opts.max_iterations)
      throw NotConverged("Newton: residual " + std::to_string(rn) + " after " +
                         std::to_string(it) + " iterations");
    const std::vector<double> delta = symmetric_solve(space.jacobian(u, p), r);
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, lambda *= 0.5) {
      std::vector<double> trial(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - lambda * delta[i];
      try {
        std::vector<double> rt = space.residual(trial, p);
        const double rtn = norm2(rt);
        if (std::isfinite(rtn) && rtn < rn) {
          u = std::move(trial);
          r = std::move(rt);
          rn = rtn;
          accepted = true;
          break;
        }
      } catch (const Overflow&) {
        // overshoot; keep halving
      }
    }
    if (!accepted)
      throw NotConverged("Newton: no residual decrease after " + std::to_string(opts.max_halvings) +
                         " step halvings (residual " + std::to_string(rn) + ")");
    ++it;
    rec.residual_history.push_back(rn);
    if (*std::max_element(u.begin(), u.end()) < kCollapse)
      throw CollapsedToZero("Newton iterate collapsed to zero at p = " + std::to_string(p));
  }

  const auto peak = std::max_element(u.begin(), u.end());
  rec.M = *peak;
  if (rec.M < kCollapse) throw CollapsedToZero("solution is zero at p = " + std::to_string(p));
  rec.peak_node = static_cast<int>(peak - u.begin());
  rec.x_max = mesh.nodes()[rec.peak_node];
  rec.clearance = problem.domain.distance_to_boundary(rec.x_max);
  rec.residual_norm = rn;
  rec.iterations = it;
  rec.u = Field{space.mesh_ptr(), std::move(u)};
  return rec;
}

}  // namespace lelab
