#include <algorithm>
#include <cmath>
#include <string>

#include "lelab/errors.hpp"
#include "lelab/solver.hpp"

namespace lelab {

namespace {

// F_i = int (v_h)_+^p psi_i with the assembly rule, zero on boundary rows.
std::vector<double> load(const FemSpace& space, std::span<const double> v, double p) {
  std::vector<double> kv = space.stiffness().multiply(v);
  apply_dirichlet(space.mesh(), kv);
  const std::vector<double> r = space.residual(v, p);
  for (std::size_t i = 0; i < kv.size(); ++i) kv[i] -= r[i];
  return kv;
}

struct Normalized {
  std::vector<double> v, f;  // v with v^T F(v) = int (v_h)_+^(p+1) = 1, and F(v)
  double energy = 0.0;       // v^T K v
};

Normalized normalize(const FemSpace& space, std::vector<double> v, double p) {
  std::vector<double> f = load(space, v, p);
  const double n = dot(v, f);
  if (!(n > 0.0) || !std::isfinite(n)) throw LineSearchFailure("iterate lost positivity");
  const double c = std::pow(n, -1.0 / (p + 1.0));
  for (double& x : v) x *= c;
  const double cp = std::pow(c, p);
  for (double& x : f) x *= cp;
  const double e = dot(v, space.dirichlet_stiffness().multiply(v));
  return {std::move(v), std::move(f), e};
}

}  // namespace

InitResult least_energy_init(const FemSpace& space, double p, const InitOptions& opts) {
  if (!(p > 1.0)) throw std::invalid_argument("exponent must exceed 1");
  const SparseOperator& k = space.dirichlet_stiffness();
  const SpdSolver solver(k);

  // Torsion function: -Lap v = 1, v = 0 on the boundary.
  std::vector<double> rhs = space.hat_integrals();
  apply_dirichlet(space.mesh(), rhs);
  Normalized cur = normalize(space, solver.solve(rhs), p);

  InitResult result;
  double tau = 1.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    // Stiffness-metric gradient of 1/2 v^T K v projected on the tangent space
    // of {int v_+^(p+1) = 1}: w = K^-1 F(v) is the constraint gradient.
    const std::vector<double> w = solver.solve(cur.f);
    const double vw = dot(cur.v, cur.f), ww = dot(w, cur.f);
    std::vector<double> g(cur.v.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = cur.v[i] - vw / ww * w[i];
    const double g2 = std::max(0.0, dot(g, k.multiply(g)));
    result.iterations = it;
    result.gradient_norm = std::sqrt(g2 / cur.energy);
    if (result.gradient_norm < opts.gradient_tol) {
      const double mu = cur.energy / dot(cur.v, cur.f);
      result.multiplier = mu;
      const double scale = std::pow(mu, 1.0 / (p - 1.0));
      for (double& x : cur.v) x *= scale;
      result.u = Field{space.mesh_ptr(), std::move(cur.v)};
      return result;
    }
    for (;;) {
      if (tau < 1e-12)
        throw LineSearchFailure("no energy decrease along the projected gradient (|g| = " +
                                std::to_string(result.gradient_norm) + ")");
      std::vector<double> trial(cur.v.size());
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = std::max(cur.v[i] - tau * g[i], 0.0);
      Normalized next = normalize(space, std::move(trial), p);
      if (next.energy <= cur.energy - 1e-4 * tau * g2) {
        cur = std::move(next);
        tau = std::min(1.0, 2.0 * tau);
        break;
      }
      tau *= 0.5;
    }
  }
  throw NotConverged("least-energy initialization: gradient norm " +
                     std::to_string(result.gradient_norm) + " after " +
                     std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace lelab
