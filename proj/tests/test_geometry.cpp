#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lelab/errors.hpp"
#include "lelab/geometry.hpp"

using namespace lelab;
using std::numbers::pi;

TEST_CASE("boundary points of the presets") {
  const Vec2 d = Domain::disk().boundary_point(0.0);
  CHECK(d.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.y == doctest::Approx(0.0));
  const Vec2 e = Domain::ellipse(2.0, 1.0).boundary_point(pi / 2);
  CHECK(std::abs(e.x) < 1e-14);
  CHECK(e.y == doctest::Approx(1.0).epsilon(1e-14));
  const Vec2 f = Domain::fourier({0.0, 0.0, 0.1}).boundary_point(0.0);
  CHECK(f.x == doctest::Approx(1.1).epsilon(1e-14));
  CHECK(std::abs(f.y) < 1e-14);
}

TEST_CASE("outward normals") {
  const Domain disk = Domain::disk();
  for (double t : {0.0, 0.4, 1.7, 3.0, 5.9}) {
    const Vec2 n = disk.outward_normal(t);
    CHECK(n.x == doctest::Approx(std::cos(t)).epsilon(1e-13));
    CHECK(n.y == doctest::Approx(std::sin(t)).epsilon(1e-13));
  }
  const Vec2 ne = Domain::ellipse(2.0, 1.0).outward_normal(0.0);
  CHECK(ne.x == doctest::Approx(1.0));
  CHECK(std::abs(ne.y) < 1e-14);

  // Central-difference tangent of the boundary curve rotated by -90 degrees.
  const Domain four = Domain::fourier({0.0, 0.0, 0.1});
  auto fd_normal = [&](const Domain& dom, double t) {
    const double dt = 1e-5;
    const Vec2 a = dom.boundary_point(t + dt), b = dom.boundary_point(t - dt);
    const Vec2 tan = (1.0 / (2 * dt)) * (a - b);
    const double n = norm(tan);
    return Vec2{tan.y / n, -tan.x / n};
  };
  const Vec2 fd = fd_normal(four, 0.3), an = four.outward_normal(0.3);
  CHECK(std::abs(fd.x - an.x) < 1e-8);
  CHECK(std::abs(fd.y - an.y) < 1e-8);

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> theta(0.0, 2 * pi);
  for (const Domain& dom : {Domain::ellipse(1.5, 1.0), four}) {
    for (int i = 0; i < 100; ++i) {
      const double t = theta(rng);
      const Vec2 a = fd_normal(dom, t), b = dom.outward_normal(t);
      CHECK(norm(b) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(norm(a - b) < 1e-8);
    }
  }
}

TEST_CASE("star-shape margin") {
  CHECK(Domain::disk().star_shape_margin() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(Domain::disk(2.5).star_shape_margin() == doctest::Approx(2.5).epsilon(1e-12));
  // Closed form min(a, b) for an ellipse.
  CHECK(Domain::ellipse(2.0, 1.0).star_shape_margin() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(Domain::fourier({0.0, 0.0, 0.1}).star_shape_margin() > 0.0);
}

TEST_CASE("distance to boundary") {
  CHECK(Domain::disk().distance_to_boundary({0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(Domain::disk().distance_to_boundary({0.5, 0.0}) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(Domain::ellipse(2.0, 1.0).distance_to_boundary({0.0, 0.0}) ==
        doctest::Approx(1.0).epsilon(1e-8));
  // Brute-force oracle on a dense boundary sample.
  const Domain four = Domain::fourier({0.0, 0.0, 0.1});
  for (Vec2 x : {Vec2{0.2, 0.1}, Vec2{-0.5, 0.3}, Vec2{0.0, -0.7}}) {
    double best = 1e300;
    for (int i = 0; i < 200000; ++i)
      best = std::min(best, norm(four.boundary_point(2 * pi * i / 200000.0) - x));
    CHECK(four.distance_to_boundary(x) == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("invalid domains") {
  CHECK_THROWS_AS(Domain::disk(0.0), InvalidDomain);
  CHECK_THROWS_AS(Domain::disk(-1.0), InvalidDomain);
  CHECK_THROWS_AS(Domain::ellipse(1.0, 0.0), InvalidDomain);
  CHECK_THROWS_AS(Domain::fourier({1.5}), InvalidDomain);  // rho(pi) = -0.5
  CHECK_THROWS_AS(Domain::disk(std::nan("")), InvalidDomain);
}

namespace {
void check_invariants(const Mesh& m) {
  CHECK(m.is_conforming());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const Vec2 a = m.nodes()[tri[0]], b = m.nodes()[tri[1]], c = m.nodes()[tri[2]];
    REQUIRE(cross(b - a, c - a) > 0.0);
  }
  std::size_t boundary_nodes = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) boundary_nodes += m.is_boundary(i);
  CHECK(boundary_nodes == m.boundary_edges().size());  // closed boundary polygon
  for (const auto& e : m.boundary_edges()) {
    CHECK(m.is_boundary(e.a));
    CHECK(m.is_boundary(e.b));
    CHECK(dot(e.normal, e.midpoint) > 0.0);  // outward for star-shaped domains
  }
}
}  // namespace

TEST_CASE("mesh invariants and area") {
  const Mesh disk = generate_mesh(Domain::disk(), 0.1);
  check_invariants(disk);
  CHECK(std::abs(disk.area() - pi) <= 2 * 0.1 * 0.1);
  CHECK(disk.min_angle_degrees() >= 20.0);

  const Mesh fine = generate_mesh(Domain::disk(), 0.05);
  CHECK(std::abs(fine.area() - pi) < std::abs(disk.area() - pi));

  const Mesh ell = generate_mesh(Domain::ellipse(2.0, 1.0), 0.1);
  check_invariants(ell);
  CHECK(std::abs(ell.area() - 2 * pi) <= 2 * 0.1 * 0.1);

  check_invariants(generate_mesh(Domain::fourier({0.0, 0.0, 0.1}), 0.1));
}

TEST_CASE("mesh area converges at order >= 1.8") {
  std::vector<double> err;
  for (double h : {0.2, 0.1, 0.05}) err.push_back(std::abs(generate_mesh(Domain::disk(), h).area() - pi));
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) >= 1.8);
}

TEST_CASE("graded refinement keeps quality") {
  const Mesh m = generate_mesh(Domain::disk(), 0.05, Refinement{{0.0, 0.0}, 0.3, 1e-4});
  check_invariants(m);
  CHECK(m.min_angle_degrees() >= 20.0);
  double smallest = 1e300;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) smallest = std::min(smallest, m.local_size(i));
  CHECK(smallest < 1e-3);
  CHECK(std::abs(m.area() - pi) <= 2 * 0.05 * 0.05);
}

TEST_CASE("mesh errors") {
  const Domain d = Domain::disk();
  CHECK_THROWS_AS(generate_mesh(d, 0.0), MeshFailure);
  CHECK_THROWS_AS(generate_mesh(d, -0.1), MeshFailure);
  CHECK_THROWS_AS(generate_mesh(d, 0.1, Refinement{{2.0, 0.0}, 0.3, 1e-3}), MeshFailure);
  CHECK_THROWS_AS(generate_mesh(d, 0.1, Refinement{{0.0, 0.0}, 0.3, 0.0}), MeshFailure);
}

TEST_CASE("scaling and text output") {
  const Mesh m = generate_mesh(Domain::disk(), 0.2);
  const Mesh s = m.scaled(2.0);
  CHECK(s.area() == doctest::Approx(4.0 * m.area()).epsilon(1e-12));
  CHECK(s.num_nodes() == m.num_nodes());

  std::ostringstream os;
  m.write_text(os);
  std::istringstream is(os.str());
  std::string w1, w2;
  std::size_t n = 0, t = 0;
  is >> w1 >> n >> w2 >> t;
  CHECK(w1 == "nodes");
  CHECK(w2 == "triangles");
  CHECK(n == m.num_nodes());
  CHECK(t == m.num_triangles());
  double x, y;
  int flag;
  is >> x >> y >> flag;
  CHECK(x == doctest::Approx(m.nodes()[0].x));
  CHECK(flag == int(m.boundary_flags()[0]));
}
