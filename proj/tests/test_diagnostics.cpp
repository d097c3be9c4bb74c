#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "lelab/diagnostics.hpp"
#include "lelab/errors.hpp"
#include "lelab/solver.hpp"
#include "oracles.hpp"

using namespace lelab;
using std::numbers::pi;

namespace {
const double kSqrtE = std::sqrt(std::exp(1.0));

std::shared_ptr<const Mesh> refined(const Domain& d, double h, double p_max) {
  const double width = bubble_scale(p_max, radial_shoot(p_max).M);
  const double dist = d.distance_to_boundary({0.0, 0.0});
  return std::make_shared<Mesh>(
      generate_mesh(d, h, Refinement{{0.0, 0.0}, 0.3 * dist, std::min(h, 0.05 * dist * width)}));
}

SolveRecord solve_at(const Problem& problem, double p) {
  const double ps[] = {p};
  return continuation_sweep(problem, ps).front();
}

/// One shared disk sweep on the refined mesh, h = 0.025.
struct DiskSweep {
  Problem problem{Domain::disk(), refined(Domain::disk(), 0.025, 100.0)};
  std::vector<SolveRecord> recs;
  DiskSweep() {
    const std::vector<double> ps{2, 3, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    recs = continuation_sweep(problem, ps);
    DiagnosticsOptions opts;
    opts.green = false;
    diagnose_records(problem, recs, opts, 1);
  }
  const SolveRecord& at(double p) const {
    return *std::find_if(recs.begin(), recs.end(), [&](const auto& r) { return r.p == p; });
  }
};

const DiskSweep& disk_sweep() {
  static const DiskSweep s;
  return s;
}

SolveRecord zero_record(const Problem& problem, double p) {
  SolveRecord rec;
  rec.p = p;
  rec.u = Field{problem.space->mesh_ptr(), std::vector<double>(problem.mesh().num_nodes(), 0.0)};
  rec.h = problem.mesh().h();
  return rec;
}

/// u~(x) = R^{2/(p-1)} u(R x) on the dilated mesh.
SolveRecord rescaled(const SolveRecord& rec, double R, const Domain& scaled_domain) {
  SolveRecord out = rec;
  const double f = std::pow(R, 2.0 / (rec.p - 1.0));
  out.u.mesh = std::make_shared<Mesh>(rec.u.mesh->scaled(1.0 / R));
  for (double& v : out.u.values) v *= f;
  out.M *= f;
  out.x_max = (1.0 / R) * rec.x_max;
  out.clearance = scaled_domain.distance_to_boundary(out.x_max);
  out.h = rec.h / R;
  out.diagnostics.reset();
  return out;
}
}  // namespace

TEST_CASE("energy quantities") {
  const Problem problem(Domain::disk(), refined(Domain::disk(), 0.025, 3.0));
  const SolveRecord rec = solve_at(problem, 3.0);
  const EnergyQuantities e = energy_quantities(*problem.space, rec);
  CHECK(e.gap / e.beta <= 1e-3);
  // Radial oracle: beta = p * 2 pi int u^(p+1) r dr.
  CHECK(e.beta == doctest::Approx(3.0 * 2 * pi * radial_shoot(3.0).int_u_p1_rdr).epsilon(0.01));

  const EnergyQuantities z = energy_quantities(*problem.space, zero_record(problem, 3.0));
  CHECK(z.beta == 0.0);
  CHECK(z.p_int_u_p1 == 0.0);
  CHECK(z.gap == 0.0);
  CHECK(z.gap_rel == 0.0);
}

TEST_CASE("pohozaev identity") {
  // Radial form 4/(p+1) int u^(p+1) = 2 pi u'(1)^2 on the oracle.
  for (double p : {3.0, 10.0}) {
    const RadialSolution rad = radial_shoot(p);
    const double lhs = 4.0 / (p + 1) * 2 * pi * rad.int_u_p1_rdr;
    const double rhs = 2 * pi * rad.du_boundary * rad.du_boundary;
    CHECK(std::abs(lhs - rhs) <= 1e-6 * lhs);
  }

  const Problem coarse(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), 0.05)));
  const auto z = pohozaev_residual(*coarse.space, zero_record(coarse, 5.0), coarse.domain);
  CHECK(z.abs == 0.0);
  CHECK(z.rel == 0.0);

  std::vector<double> rel;
  for (double h : {0.05, 0.025}) {
    const Problem problem(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), h)));
    rel.push_back(pohozaev_residual(*problem.space, solve_at(problem, 5.0), problem.domain).rel);
  }
  CHECK(rel[0] / rel[1] >= 1.7);
}

TEST_CASE("eigenfunction identity") {
  const Problem problem(Domain::disk(), refined(Domain::disk(), 0.025, 3.0));
  const EigenPair eig = dirichlet_eigenpair(*problem.space);
  CHECK(eigen_identity_gap(*problem.space, solve_at(problem, 3.0), eig).rel <= 1e-2);
  CHECK(eigen_identity_gap(*problem.space, zero_record(problem, 3.0), eig).rel == 0.0);

  std::vector<double> gaps;
  for (double h : {0.1, 0.05, 0.025}) {
    const Problem pr(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), h)));
    gaps.push_back(eigen_identity_gap(*pr.space, solve_at(pr, 3.0), dirichlet_eigenpair(*pr.space)).rel);
  }
  CHECK(std::log2(gaps[0] / gaps[2]) / 2.0 >= 1.5);
}

TEST_CASE("flux balance and mass bound") {
  const Problem problem(Domain::disk(), refined(Domain::disk(), 0.025, 3.0));
  const SolveRecord rec = solve_at(problem, 3.0);
  const IdentityResidual f = flux_gap(*problem.space, rec);
  CHECK(f.rel <= 0.1);
  CHECK(mass_bound(problem.mesh(), rec) == doctest::Approx(f.lhs));
  CHECK(std::abs(mass_bound(problem.mesh(), rec) - f.rhs) <= f.abs + 1e-12);
  // Oracle flux: int u^p = -2 pi u'(1).
  CHECK(f.lhs == doctest::Approx(-2 * pi * radial_shoot(3.0).du_boundary).epsilon(0.01));
  CHECK(mass_bound(problem.mesh(), zero_record(problem, 3.0)) == 0.0);
}

TEST_CASE("green representation on the disk") {
  const Problem problem(Domain::disk(), refined(Domain::disk(), 0.025, 3.0));
  const SolveRecord rec = solve_at(problem, 3.0);
  const GreenReport g = green_representation_gap(*problem.space, rec, problem.domain);
  CHECK(g.corrector_min >= -1e-3);
  CHECK(g.corrector_max <= 1e-3);
  CHECK(g.gap <= 0.02);
  CHECK(g.harmonic_residual <= 1e-9);

  // Radial quadrature of the explicit kernel: (1/2pi) int log(1/|y|) u^p = int_0^1 -log r u^p r dr.
  const RadialSolution rad = radial_shoot(3.0);
  double kernel = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) / n;
    kernel += -std::log(r) * std::pow(rad.value_at(r), 3.0) * r / n;
  }
  CHECK(kernel == doctest::Approx(rad.M).epsilon(1e-4));  // the identity itself on the oracle
  CHECK(g.value == doctest::Approx(kernel).epsilon(0.02));

  SolveRecord near = rec;
  near.x_max = {0.9, 0.0};
  near.clearance = 0.1;
  CHECK_THROWS_AS(green_representation_gap(*problem.space, near, problem.domain),
                  PoleTooCloseToBoundary);
}

TEST_CASE("green corrector obeys the maximum principle off the disk") {
  for (const Domain& d : {Domain::ellipse(1.5, 1.0), Domain::fourier({0.0, 0.0, 0.1})}) {
    const Problem problem(d, refined(d, 0.05, 5.0));
    const SolveRecord rec = solve_at(problem, 5.0);
    const GreenReport g = green_representation_gap(*problem.space, rec, d);
    double boundary_min = 0.0;
    for (std::size_t i = 0; i < problem.mesh().num_nodes(); ++i)
      if (problem.mesh().is_boundary(i))
        boundary_min = std::min(boundary_min,
                                -std::log(norm(problem.mesh().nodes()[i] - rec.x_max)) / (2 * pi));
    CHECK(g.corrector_min >= boundary_min - 1e-3);
    CHECK(g.gap <= 0.05);
  }
}

TEST_CASE("liouville profile") {
  CHECK(liouville_profile(0.0) == 0.0);
  for (double r : {0.3, 1.0, 2.5, 4.0}) {
    CHECK(liouville_profile(r) == doctest::Approx(oracle::liouville(r)).epsilon(1e-14));
    // -Lap U = e^U in radial form by central differences.
    const double d = 1e-4;
    const double upp = (oracle::liouville(r + d) - 2 * oracle::liouville(r) + oracle::liouville(r - d)) / (d * d);
    const double up = (oracle::liouville(r + d) - oracle::liouville(r - d)) / (2 * d);
    CHECK(-(upp + up / r) == doctest::Approx(std::exp(oracle::liouville(r))).epsilon(1e-6));
  }
  CHECK(oracle::liouville_mass() == doctest::Approx(8 * pi).epsilon(1e-8));
}

TEST_CASE("bubble scale") {
  CHECK(bubble_scale(20.0, 1.7) == doctest::Approx(1.0 / std::sqrt(20.0 * std::pow(1.7, 19))));
  CHECK(std::isfinite(bubble_scale(1000.0, 2.0)));
  CHECK(bubble_scale(1000.0, 2.0) > 0.0);
}

TEST_CASE("disk sweep: bubble convergence") {
  const auto& s = disk_sweep();
  const double d20 = bubble_distance(s.problem.mesh(), s.at(20));
  const double d80 = bubble_distance(s.problem.mesh(), s.at(80));
  CHECK(d80 < d20);
  CHECK(*s.at(80).diagnostics->bubble_dist == doctest::Approx(d80));
  CHECK_THROWS_AS(bubble_distance(s.problem.mesh(), s.at(5)), std::invalid_argument);

  const Problem coarse(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), 0.1)));
  CHECK_THROWS_AS(bubble_distance(coarse.mesh(), solve_at(coarse, 20.0)), InsufficientResolution);
}

TEST_CASE("disk sweep: v-transform") {
  const auto& s = disk_sweep();
  double qmin = 1e300, qmax = 0.0;
  for (const auto& r : s.recs) {
    REQUIRE(r.ok());
    const VTransformReport v = v_transform_report(s.problem.mesh(), r);
    CHECK(v.v_at_peak == 0.0);
    CHECK(v.min_v >= -1e-12);
    if (r.p >= 10) {
      CHECK(v.radii_used > 0);
      qmin = std::min(qmin, v.growth_ratio);
      qmax = std::max(qmax, v.growth_ratio);
    }
  }
  CHECK(qmax / qmin <= 5.0);
}

TEST_CASE("disk sweep: concentration, clearance and bounds") {
  const auto& s = disk_sweep();
  for (const auto& r : s.recs) {
    const auto c = concentration_candidates(s.problem.mesh(), r);
    REQUIRE(c.size() == 1);
    // Radial symmetry at desk scale; a narrow bubble may settle a few local
    // mesh sizes away from the origin on the graded mesh.
    CHECK(norm(c[0].x) <= 1e-4);
    CHECK(c[0].m == r.M);
    CHECK(peak_clearance(r, s.problem.domain) == doctest::Approx(1.0).epsilon(1e-4));
  }
  const auto& d100 = *s.at(100).diagnostics;
  CHECK(d100.concentrations.at(0).m >= kSqrtE - 0.2);
  CHECK(d100.beta_pred == doctest::Approx(d100.beta).epsilon(0.2));
  CHECK(d100.beta == doctest::Approx(8 * pi * std::exp(1.0)).epsilon(0.15));

  double mass_max = 0.0;
  for (const auto& r : s.recs) mass_max = std::max(mass_max, r.diagnostics->int_u_p);
  CHECK(mass_max <= 2.0 * s.at(2).diagnostics->int_u_p);
}

TEST_CASE("ellipse clearance") {
  const Domain d = Domain::ellipse(1.5, 1.0);
  const Problem problem(d, refined(d, 0.05, 100.0));
  const std::vector<double> ps{2, 5, 10, 20, 40, 60, 80, 100};
  for (const auto& r : continuation_sweep(problem, ps)) {
    REQUIRE(r.ok());
    CHECK(peak_clearance(r, d) >= 0.3);
    CHECK(peak_clearance(r, d) >= 2 * problem.mesh().h());
  }
}

TEST_CASE("scale covariance of the diagnostics") {
  const Problem problem(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), 0.05)));
  const double p = 5.0, R = 2.0;
  const SolveRecord rec = solve_at(problem, p);
  const Domain small = Domain::disk(1.0 / R);
  const SolveRecord big = rescaled(rec, R, small);
  const FemSpace space2(big.u.mesh);

  const double poh1 = pohozaev_residual(*problem.space, rec, problem.domain).rel;
  const double poh2 = pohozaev_residual(space2, big, small).rel;
  CHECK(poh2 == doctest::Approx(poh1).epsilon(1e-6));

  const double beta1 = energy_quantities(*problem.space, rec).beta;
  const double beta2 = energy_quantities(space2, big).beta;
  CHECK(beta2 / beta1 == doctest::Approx(std::pow(R, 4.0 / (p - 1))).epsilon(1e-9));

  const auto c1 = concentration_candidates(problem.mesh(), rec);
  const auto c2 = concentration_candidates(*big.u.mesh, big);
  CHECK(c2.at(0).m / c1.at(0).m == doctest::Approx(std::pow(R, 2.0 / (p - 1))).epsilon(1e-12));
}

TEST_CASE("compute_diagnostics notes missing metrics") {
  const Problem problem(Domain::disk(), std::make_shared<Mesh>(generate_mesh(Domain::disk(), 0.05)));
  const SolveRecord rec = solve_at(problem, 3.0);
  const DiagnosticsBundle b = compute_diagnostics(problem, rec);
  CHECK_FALSE(b.bubble_dist.has_value());
  CHECK(std::any_of(b.notes.begin(), b.notes.end(),
                    [](const std::string& n) { return n.rfind("bubble: ", 0) == 0; }));
  CHECK(b.eigen_rel.has_value());
  CHECK(b.green_rel.has_value());
  CHECK(b.M == rec.M);
  CHECK(b.energy_gap == doctest::Approx(std::abs(b.beta - b.p_int_u_p1)));
  CHECK(b.eps_p == doctest::Approx(bubble_scale(3.0, rec.M)));
}
