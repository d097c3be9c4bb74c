#include <algorithm>
#include <cmath>
#include <string>

#include "lelab/errors.hpp"
#include "lelab/fem.hpp"

namespace lelab {

namespace {

// Relative to the squared longest edge; absolute thresholds would reject
// the strongly graded meshes used at large exponents.
constexpr double kDegenerateShape = 1e-14;
const double kOverflowLog = std::log(1e300);

std::array<Vec2, 3> barycentric_gradients(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles()[t];
  const Vec2 p0 = mesh.nodes()[tri[0]], p1 = mesh.nodes()[tri[1]], p2 = mesh.nodes()[tri[2]];
  const double area = mesh.triangle_area(t);
  const double longest = std::max({norm(p1 - p0), norm(p2 - p1), norm(p0 - p2)});
  if (!(area > kDegenerateShape * longest * longest))
    throw DegenerateTriangle("triangle " + std::to_string(t) + " is degenerate");
  const double s = 1.0 / (2.0 * area);
  return {Vec2{s * (p1.y - p2.y), s * (p2.x - p1.x)}, Vec2{s * (p2.y - p0.y), s * (p0.x - p2.x)},
          Vec2{s * (p0.y - p1.y), s * (p1.x - p0.x)}};
}

double positive_power(double u, double q) { return u > 0.0 ? std::pow(u, q) : 0.0; }

void check_overflow(std::span<const double> u, double p) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] > 0.0 && p * std::log(u[i]) > kOverflowLog)
      throw Overflow("(u+)^p exceeds 1e300 at node " + std::to_string(i) +
                     " (u = " + std::to_string(u[i]) + ")");
}

void check_length(const Mesh& mesh, std::span<const double> u) {
  if (u.size() != mesh.num_nodes())
    throw DimensionMismatch("field length " + std::to_string(u.size()) +
                            " does not match node count " + std::to_string(mesh.num_nodes()));
}

double interpolate(const std::array<int, 3>& tri, std::span<const double> u,
                   const std::array<double, 3>& bary) {
  return bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]];
}

}  // namespace

double BoundaryTrace::flux() const {
  double s = 0.0;
  for (std::size_t e = 0; e < size(); ++e) s += normal_derivative[e] * length[e];
  return s;
}

const TriangleRule& assembly_rule() {
  static const TriangleRule rule{
      {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}},
      {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  return rule;
}

const TriangleRule& diagnostic_rule() {
  // Dunavant degree-4 rule.
  constexpr double a = 0.445948490915965, wa = 0.223381589678011;
  constexpr double b = 0.091576213509771, wb = 0.109951743655322;
  static const TriangleRule rule{{{1 - 2 * a, a, a},
                                  {a, 1 - 2 * a, a},
                                  {a, a, 1 - 2 * a},
                                  {1 - 2 * b, b, b},
                                  {b, 1 - 2 * b, b},
                                  {b, b, 1 - 2 * b}},
                                 {wa, wa, wa, wb, wb, wb}};
  return rule;
}

SparseOperator assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto g = barycentric_gradients(mesh, e);
    const auto& tri = mesh.triangles()[e];
    const double area = mesh.triangle_area(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], area * dot(g[i], g[j])});
  }
  return SparseOperator::from_triplets(mesh.num_nodes(), std::move(t), true);
}

SparseOperator assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    barycentric_gradients(mesh, e);  // degeneracy check
    const auto& tri = mesh.triangles()[e];
    const double area = mesh.triangle_area(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], area / 12.0 * (i == j ? 2 : 1)});
  }
  return SparseOperator::from_triplets(mesh.num_nodes(), std::move(t), true);
}

FemSpace::FemSpace(std::shared_ptr<const Mesh> mesh)
    : mesh_(std::move(mesh)),
      stiffness_(assemble_stiffness(*mesh_)),
      mass_(assemble_mass(*mesh_)),
      dirichlet_stiffness_(eliminate_dirichlet(stiffness_, mesh_->boundary_flags())),
      hat_integrals_(mass_.row_sums()) {
  gradients_.reserve(mesh_->num_triangles());
  for (std::size_t t = 0; t < mesh_->num_triangles(); ++t)
    gradients_.push_back(barycentric_gradients(*mesh_, t));
}

Vec2 FemSpace::gradient(std::size_t t, std::span<const double> u) const {
  const auto& tri = mesh_->triangles()[t];
  Vec2 g{};
  for (int i = 0; i < 3; ++i) g = g + u[tri[i]] * gradients_[t][i];
  return g;
}

std::vector<double> FemSpace::residual(std::span<const double> u, double p) const {
  check_length(*mesh_, u);
  check_overflow(u, p);
  std::vector<double> r = stiffness_.multiply(u);
  const auto& rule = assembly_rule();
  for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
    const auto& tri = mesh_->triangles()[t];
    const double area = mesh_->triangle_area(t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double f = area * rule.weights[q] * positive_power(interpolate(tri, u, rule.points[q]), p);
      for (int i = 0; i < 3; ++i) r[tri[i]] -= f * rule.points[q][i];
    }
  }
  apply_dirichlet(*mesh_, r);
  return r;
}

SparseOperator FemSpace::weighted_mass(std::span<const double> u, double p) const {
  check_length(*mesh_, u);
  check_overflow(u, p);
  const auto& rule = assembly_rule();
  std::vector<Triplet> t;
  t.reserve(9 * mesh_->num_triangles());
  for (std::size_t e = 0; e < mesh_->num_triangles(); ++e) {
    const auto& tri = mesh_->triangles()[e];
    const double area = mesh_->triangle_area(e);
    std::array<std::array<double, 3>, 3> local{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& bary = rule.points[q];
      const double w = area * rule.weights[q] * positive_power(interpolate(tri, u, bary), p - 1.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += w * bary[i] * bary[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], local[i][j]});
  }
  return SparseOperator::from_triplets(mesh_->num_nodes(), std::move(t), true);
}

SparseOperator FemSpace::jacobian(std::span<const double> u, double p) const {
  return eliminate_dirichlet(axpy(stiffness_, p, weighted_mass(u, p)), mesh_->boundary_flags());
}

BoundaryTrace FemSpace::normal_derivative(std::span<const double> u) const {
  check_length(*mesh_, u);
  BoundaryTrace trace;
  for (const auto& edge : mesh_->boundary_edges()) {
    trace.normal_derivative.push_back(dot(gradient(edge.triangle, u), edge.normal));
    trace.length.push_back(edge.length);
    trace.midpoint.push_back(edge.midpoint);
    trace.normal.push_back(edge.normal);
  }
  return trace;
}

double FemSpace::dirichlet_energy(std::span<const double> u) const {
  check_length(*mesh_, u);
  return dot(u, stiffness_.multiply(u));
}

std::vector<double> nonlinear_residual(const Mesh& mesh, std::span<const double> u, double p) {
  return FemSpace(std::make_shared<const Mesh>(mesh)).residual(u, p);
}

SparseOperator nonlinear_jacobian(const Mesh& mesh, std::span<const double> u, double p) {
  return FemSpace(std::make_shared<const Mesh>(mesh)).jacobian(u, p);
}

BoundaryTrace normal_derivative(const Mesh& mesh, std::span<const double> u) {
  return FemSpace(std::make_shared<const Mesh>(mesh)).normal_derivative(u);
}

double dirichlet_energy(const Mesh& mesh, std::span<const double> u) {
  check_length(mesh, u);
  return dot(u, assemble_stiffness(mesh).multiply(u));
}

double integrate_power(const Mesh& mesh, std::span<const double> u, double q,
                       std::size_t* clipped) {
  check_length(mesh, u);
  std::size_t negatives = 0;
  for (double v : u)
    if (v < 0.0) ++negatives;
  if (clipped) *clipped = negatives;
  const auto& rule = diagnostic_rule();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const std::array<double, 3> nodal{std::max(u[tri[0]], 0.0), std::max(u[tri[1]], 0.0),
                                      std::max(u[tri[2]], 0.0)};
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      const auto& b = rule.points[k];
      acc += rule.weights[k] * positive_power(b[0] * nodal[0] + b[1] * nodal[1] + b[2] * nodal[2], q);
    }
    total += mesh.triangle_area(t) * acc;
  }
  return total;
}

double integrate_power_weighted(const Mesh& mesh, std::span<const double> u, double q,
                                std::span<const double> w) {
  check_length(mesh, u);
  check_length(mesh, w);
  const auto& rule = diagnostic_rule();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      const auto& b = rule.points[k];
      acc += rule.weights[k] * positive_power(interpolate(tri, u, b), q) * interpolate(tri, w, b);
    }
    total += mesh.triangle_area(t) * acc;
  }
  return total;
}

void apply_dirichlet(const Mesh& mesh, std::span<double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mesh.is_boundary(i)) v[i] = 0.0;
}

}  // namespace lelab
