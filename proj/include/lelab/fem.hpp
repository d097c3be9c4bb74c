#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "lelab/geometry.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

/// Nodal values of a P1 function on a mesh.
struct Field {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Outward normal derivative per boundary edge, aligned with
/// Mesh::boundary_edges().
struct BoundaryTrace {
  std::vector<double> normal_derivative;
  std::vector<double> length;
  std::vector<Vec2> midpoint;
  std::vector<Vec2> normal;

  std::size_t size() const { return normal_derivative.size(); }
  /// sum of u_nu * length
  double flux() const;
};

/// Barycentric points and weights (weights sum to one).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// 3-point rule, exact for quadratics; used inside the nonlinear solve.
const TriangleRule& assembly_rule();
/// 6-point rule, exact for quartics; used for reported integrals.
const TriangleRule& diagnostic_rule();

/// Per-triangle geometry and the assembled linear operators of the P1 space.
/// Immutable; share it between the solver and the diagnostics.
class FemSpace {
 public:
  explicit FemSpace(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  std::size_t size() const { return mesh_->num_nodes(); }

  const SparseOperator& stiffness() const { return stiffness_; }
  const SparseOperator& mass() const { return mass_; }
  /// Stiffness with Dirichlet rows/columns replaced by the identity.
  const SparseOperator& dirichlet_stiffness() const { return dirichlet_stiffness_; }
  /// integral of each hat function (row sums of the mass matrix).
  const std::vector<double>& hat_integrals() const { return hat_integrals_; }

  /// grad of barycentric coordinate `local` in triangle t.
  Vec2 basis_gradient(std::size_t t, int local) const { return gradients_[t][local]; }
  Vec2 gradient(std::size_t t, std::span<const double> u) const;

  /// K u - F(u) with F_i = int (u_h)_+^p psi_i (assembly rule); zero on boundary rows.
  std::vector<double> residual(std::span<const double> u, double p) const;
  /// int (u_h)_+^(p-1) psi_i psi_j (assembly rule), before elimination.
  SparseOperator weighted_mass(std::span<const double> u, double p) const;
  /// K - p W(u), Dirichlet-eliminated.
  SparseOperator jacobian(std::span<const double> u, double p) const;

  BoundaryTrace normal_derivative(std::span<const double> u) const;
  double dirichlet_energy(std::span<const double> u) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<std::array<Vec2, 3>> gradients_;
  SparseOperator stiffness_, mass_, dirichlet_stiffness_;
  std::vector<double> hat_integrals_;
};

SparseOperator assemble_stiffness(const Mesh& mesh);
SparseOperator assemble_mass(const Mesh& mesh);

std::vector<double> nonlinear_residual(const Mesh& mesh, std::span<const double> u, double p);
SparseOperator nonlinear_jacobian(const Mesh& mesh, std::span<const double> u, double p);
BoundaryTrace normal_derivative(const Mesh& mesh, std::span<const double> u);
double dirichlet_energy(const Mesh& mesh, std::span<const double> u);

/// int (u_h)_+^q with the diagnostic rule. Negative nodal values are clipped
/// to zero; their count is written to `clipped` when given.
double integrate_power(const Mesh& mesh, std::span<const double> u, double q,
                       std::size_t* clipped = nullptr);
/// int (u_h)_+^q w_h with the diagnostic rule.
double integrate_power_weighted(const Mesh& mesh, std::span<const double> u, double q,
                                std::span<const double> w);

/// Sets boundary entries to zero.
void apply_dirichlet(const Mesh& mesh, std::span<double> v);

}  // namespace lelab
