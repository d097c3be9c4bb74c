#include <cmath>

#include "lelab/errors.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

namespace {
constexpr double kRayleighTolerance = 1e-12;
constexpr double kResidualTolerance = 1e-8;
constexpr int kMaxIterations = 1000;
}  // namespace

EigenPair principal_eigenpair(const SparseOperator& stiffness, const SparseOperator& mass,
                              std::span<const double> l1_weights) {
  const std::size_t n = stiffness.size();
  if (mass.size() != n || l1_weights.size() != n)
    throw DimensionMismatch("stiffness, mass and weights must share one index set");

  const SpdSolver solver(stiffness);
  // Start from the indicator of the rows carrying mass (the free nodes).
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = (mass.at(i, i) != 0.0) ? 1.0 : 0.0;

  EigenPair out;
  double lambda_prev = 0.0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    std::vector<double> y = solver.solve(mass.multiply(x));
    const auto ky = stiffness.multiply(y);
    const auto my = mass.multiply(y);
    const double ymy = dot(y, my);
    if (!(ymy > 0.0)) throw NotConverged("inverse iteration lost the mass-carrying subspace");
    const double lambda = dot(y, ky) / ymy;
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) res2 += std::pow(ky[i] - lambda * my[i], 2);
    const double residual = std::sqrt(res2) / norm2(ky);

    const double scale = 1.0 / std::sqrt(ymy);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] * scale;

    out.iterations = it;
    out.residual = residual;
    out.lambda = lambda;
    if (std::abs(lambda - lambda_prev) <= kRayleighTolerance * std::abs(lambda) &&
        residual <= kResidualTolerance)
      break;
    if (it == kMaxIterations)
      throw NotConverged("inverse iteration stalled at residual " + std::to_string(residual));
    lambda_prev = lambda;
  }

  double signed_sum = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    signed_sum += l1_weights[i] * x[i];
    l1 += l1_weights[i] * std::abs(x[i]);
  }
  const double s = (signed_sum < 0.0 ? -1.0 : 1.0) / l1;
  for (auto& v : x) v *= s;
  out.phi = std::move(x);
  return out;
}

}  // namespace lelab
