#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace lelab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Smooth planar domain described by a polar boundary radius rho(theta) about
/// the origin. Construction validates rho > 0 and strict star-shapedness, so a
/// Domain value is always usable. Immutable.
class Domain {
 public:
  enum class Kind { disk, ellipse, fourier };

  static Domain disk(double radius = 1.0);
  static Domain ellipse(double a, double b);
  /// rho(theta) = 1 + sum_k (cos_coeffs[k-1] cos k theta + sin_coeffs[k-1] sin k theta)
  static Domain fourier(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs = {});

  Kind kind() const { return kind_; }
  /// Copy of the domain dilated by `factor` about the origin.
  Domain scaled(double factor) const;

  double radius(double theta) const;
  double radius_derivative(double theta) const;

  Vec2 boundary_point(double theta) const;
  Vec2 tangent(double theta) const;  // d/dtheta of boundary_point, not normalized
  Vec2 outward_normal(double theta) const;

  /// min over the boundary of (x, nu); cached at construction.
  double star_shape_margin() const { return margin_; }
  double distance_to_boundary(Vec2 x) const;
  bool contains(Vec2 x) const;

  double area() const;
  double perimeter() const { return perimeter_; }
  double min_radius() const { return min_radius_; }
  double max_radius() const { return max_radius_; }

  // Parameters, for reporting.
  double disk_radius() const { return scale_ * disk_radius_; }
  double semi_axis_a() const { return scale_ * a_; }
  double semi_axis_b() const { return scale_ * b_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  double scale() const { return scale_; }

 private:
  Domain() = default;
  void validate();
  double unit_radius(double theta) const;
  double unit_radius_derivative(double theta) const;

  Kind kind_ = Kind::disk;
  double disk_radius_ = 1.0;
  double a_ = 1.0, b_ = 1.0;
  std::vector<double> cos_, sin_;
  double scale_ = 1.0;

  double margin_ = 0.0;
  double perimeter_ = 0.0;
  double min_radius_ = 0.0;
  double max_radius_ = 0.0;
};

/// Number of samples used for every dense boundary scan.
inline constexpr int kBoundarySamples = 4096;

struct BoundaryEdge {
  int a = -1;         // CCW order within the owning triangle
  int b = -1;
  int triangle = -1;
  Vec2 normal;        // outward unit normal of the chord
  Vec2 midpoint;
  double length = 0.0;
};

/// Conforming P1 triangulation. Triangles are counter-clockwise.
class Mesh {
 public:
  Mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles,
       std::vector<std::uint8_t> boundary_flags, double h);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<std::uint8_t>& boundary_flags() const { return boundary_; }
  bool is_boundary(std::size_t node) const { return boundary_[node] != 0; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  double h() const { return h_; }

  double triangle_area(std::size_t t) const { return areas_[t]; }
  double area() const;
  /// Smallest interior angle over all triangles, in degrees.
  double min_angle_degrees() const;
  /// Longest edge among the triangles touching `node`.
  double local_size(std::size_t node) const;
  /// Nodes sharing an edge with `node`.
  std::span<const int> neighbors(std::size_t node) const;
  /// Number of triangles sharing each edge is 1 (boundary) or 2 (interior).
  bool is_conforming() const;

  /// Copy with every coordinate multiplied by `factor`.
  Mesh scaled(double factor) const;

  /// "nodes N triangles T", then N lines "x y flag", then T lines "i j k".
  void write_text(std::ostream& os) const;

 private:
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::uint8_t> boundary_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<double> areas_;
  std::vector<int> adj_offsets_, adj_;
  double h_;
};

/// Graded refinement around `center`: local edge length grows linearly from
/// `min_size` at the center to h at distance `radius`.
struct Refinement {
  Vec2 center;
  double radius = 0.1;
  double min_size = 1e-3;
};

/// Layered triangulation: boundary copies shrunk toward the refinement center
/// (or the origin), sampled uniformly in arc length and zipped ring to ring.
Mesh generate_mesh(const Domain& domain, double h,
                   const std::optional<Refinement>& refinement = std::nullopt);

}  // namespace lelab
