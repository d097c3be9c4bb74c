#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

#include "lelab/diagnostics.hpp"
#include "lelab/errors.hpp"

namespace lelab {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

double relative(double abs, double ref) { return ref != 0.0 ? abs / std::abs(ref) : 0.0; }

IdentityResidual make_residual(double lhs, double rhs) {
  const double abs = std::abs(lhs - rhs);
  return {lhs, rhs, abs, relative(abs, lhs)};
}

double positive_power(double u, double q) { return u > 0.0 ? std::pow(u, q) : 0.0; }

// Gauss-Legendre rule mapped to [0, 1].
template <unsigned N>
struct UnitGauss {
  std::vector<double> x, w;
  UnitGauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        x.push_back(0.5);
        w.push_back(0.5 * wt[i]);
        continue;
      }
      x.push_back(0.5 * (1.0 - a[i]));
      w.push_back(0.5 * wt[i]);
      x.push_back(0.5 * (1.0 + a[i]));
      w.push_back(0.5 * wt[i]);
    }
  }
};

// int over triangle (a, b, c) of log(1/|y - pole|) (u_h)_+^p in collapsed
// coordinates about vertex a: y = a + s^2 ((b - a) + t (c - b)). The s = sigma^2
// substitution smooths the s log s behaviour when the pole sits at a.
template <unsigned N>
double collapsed_log_integral(Vec2 a, Vec2 b, Vec2 c, double ua, double ub, double uc, Vec2 pole,
                              double p, double area) {
  static const UnitGauss<N> rule;
  double total = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double sigma = rule.x[i];
    const double s = sigma * sigma;
    for (std::size_t j = 0; j < rule.x.size(); ++j) {
      const double t = rule.x[j];
      const Vec2 y = a + s * ((b - a) + t * (c - b));
      const double u = (1.0 - s) * ua + s * (1.0 - t) * ub + s * t * uc;
      const double dist = norm(y - pole);
      if (!(dist > 0.0)) continue;
      // dy = 2 area s ds dt, ds = 2 sigma dsigma
      total += rule.w[i] * rule.w[j] * 4.0 * area * s * sigma * -std::log(dist) * positive_power(u, p);
    }
  }
  return total;
}

}  // namespace

EnergyQuantities energy_quantities(const FemSpace& space, const SolveRecord& rec) {
  const auto& u = rec.u.values;
  EnergyQuantities e;
  e.beta = rec.p * space.dirichlet_energy(u);
  e.p_int_u_p1 = rec.p * integrate_power(space.mesh(), u, rec.p + 1.0);
  e.gap = std::abs(e.beta - e.p_int_u_p1);
  e.gap_rel = relative(e.gap, e.beta);
  return e;
}

IdentityResidual pohozaev_residual(const FemSpace& space, const SolveRecord& rec,
                                   const Domain& domain) {
  if (!(domain.star_shape_margin() > 0.0)) throw NotStarShaped("domain is not star-shaped");
  const auto& u = rec.u.values;
  const double lhs = 4.0 / (rec.p + 1.0) * integrate_power(space.mesh(), u, rec.p + 1.0);
  const BoundaryTrace trace = space.normal_derivative(u);
  double rhs = 0.0;
  for (std::size_t e = 0; e < trace.size(); ++e)
    rhs += dot(trace.midpoint[e], trace.normal[e]) * trace.normal_derivative[e] *
           trace.normal_derivative[e] * trace.length[e];
  return make_residual(lhs, rhs);
}

EigenPair dirichlet_eigenpair(const FemSpace& space) {
  const SparseOperator mass = eliminate_dirichlet(space.mass(), space.mesh().boundary_flags(), 0.0);
  return principal_eigenpair(space.dirichlet_stiffness(), mass, space.hat_integrals());
}

IdentityResidual eigen_identity_gap(const FemSpace& space, const SolveRecord& rec,
                                    const EigenPair& eig) {
  const auto& u = rec.u.values;
  if (eig.phi.size() != u.size())
    throw DimensionMismatch("eigenfunction and solution live on different meshes");
  const double lhs = eig.lambda * dot_l2(space.mass(), u, eig.phi);
  const double rhs = integrate_power_weighted(space.mesh(), u, rec.p, eig.phi);
  return make_residual(lhs, rhs);
}

IdentityResidual flux_gap(const FemSpace& space, const SolveRecord& rec) {
  const double mass = integrate_power(space.mesh(), rec.u.values, rec.p);
  return make_residual(mass, -space.normal_derivative(rec.u.values).flux());
}

GreenReport green_representation_gap(const FemSpace& space, const SolveRecord& rec,
                                     const Domain& domain) {
  const Mesh& mesh = space.mesh();
  const Vec2 pole = rec.x_max;
  const double clearance = domain.distance_to_boundary(pole);
  if (clearance < 5.0 * mesh.h())
    throw PoleTooCloseToBoundary("peak clearance " + std::to_string(clearance) + " is below 5h = " +
                                 std::to_string(5.0 * mesh.h()));
  const auto& u = rec.u.values;

  // Corrector: discrete harmonic extension of -(1/2pi) log|y - pole|.
  std::vector<double> lift(mesh.num_nodes(), 0.0);
  for (std::size_t i = 0; i < lift.size(); ++i)
    if (mesh.is_boundary(i)) lift[i] = -kInvTwoPi * std::log(norm(mesh.nodes()[i] - pole));
  std::vector<double> rhs = space.stiffness().multiply(lift);
  const double lift_norm = norm2(rhs);
  for (double& x : rhs) x = -x;
  apply_dirichlet(mesh, rhs);
  std::vector<double> g = spd_solve(space.dirichlet_stiffness(), rhs);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (mesh.is_boundary(i)) g[i] = lift[i];

  GreenReport rep;
  std::vector<double> kg = space.stiffness().multiply(g);
  apply_dirichlet(mesh, kg);
  rep.harmonic_residual = lift_norm > 0.0 ? norm2(kg) / lift_norm : norm2(kg);
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  rep.corrector_min = *lo;
  rep.corrector_max = *hi;

  // Free-space part: collapsed coordinates near the pole, the diagnostic rule elsewhere.
  const auto& rule = diagnostic_rule();
  double log_integral = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const std::array<Vec2, 3> v{mesh.nodes()[tri[0]], mesh.nodes()[tri[1]], mesh.nodes()[tri[2]]};
    const double area = mesh.triangle_area(t);
    int nearest = 0;
    double dmin = norm(v[0] - pole);
    for (int k = 1; k < 3; ++k)
      if (norm(v[k] - pole) < dmin) dmin = norm(v[k] - pole), nearest = k;
    const double longest = std::max({norm(v[1] - v[0]), norm(v[2] - v[1]), norm(v[0] - v[2])});
    if (dmin < 3.0 * longest) {
      const int a = nearest, b = (nearest + 1) % 3, c = (nearest + 2) % 3;
      if (tri[a] == rec.peak_node)
        log_integral += collapsed_log_integral<20>(v[a], v[b], v[c], u[tri[a]], u[tri[b]],
                                                   u[tri[c]], pole, rec.p, area);
      else
        log_integral += collapsed_log_integral<10>(v[a], v[b], v[c], u[tri[a]], u[tri[b]],
                                                   u[tri[c]], pole, rec.p, area);
      continue;
    }
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& b = rule.points[q];
      const Vec2 y = b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
      const double uq = b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]];
      acc += rule.weights[q] * -std::log(norm(y - pole)) * positive_power(uq, rec.p);
    }
    log_integral += area * acc;
  }
  rep.log_part = kInvTwoPi * log_integral;
  rep.corrector_part = integrate_power_weighted(mesh, u, rec.p, g);
  rep.value = rep.log_part - rep.corrector_part;
  rep.gap = relative(std::abs(rec.M - rep.value), rec.M);
  rep.corrector = std::move(g);
  return rep;
}

double bubble_scale(double p, double M) {
  return std::exp(-0.5 * (std::log(p) + (p - 1.0) * std::log(M)));
}

double liouville_profile(double r) { return -2.0 * std::log1p(r * r / 8.0); }

VTransformReport v_transform_report(const Mesh& mesh, const SolveRecord& rec) {
  const auto& u = rec.u.values;
  const double M = rec.M;
  const double k = std::exp(0.5 * (rec.p - 1.0) * std::log(M));
  std::vector<double> v(u.size()), d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    v[i] = 1.0 - u[i] / M;
    d[i] = k * norm(mesh.nodes()[i] - rec.x_max);
  }
  VTransformReport rep;
  rep.min_v = *std::min_element(v.begin(), v.end());
  rep.v_at_peak = v[rec.peak_node];

  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  constexpr int kRadii = 21;
  const double r_lo = 1.0 / std::sqrt(rec.p), r_hi = 10.0 / std::sqrt(rec.p);
  std::size_t next = 0;
  double sup_v = -INFINITY;
  for (int j = 0; j < kRadii; ++j) {
    const double r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(j) / (kRadii - 1));
    while (next < order.size() && d[order[next]] <= r) sup_v = std::max(sup_v, v[order[next++]]);
    if (next < 2) continue;  // only the peak itself inside B_r
    rep.growth_ratio = std::max(rep.growth_ratio, sup_v / (r * r));
    ++rep.radii_used;
  }
  return rep;
}

double bubble_distance(const Mesh& mesh, const SolveRecord& rec) {
  if (rec.p < 10.0) throw std::invalid_argument("bubble rescaling needs p >= 10");
  const double eps = bubble_scale(rec.p, rec.M);
  const auto& u = rec.u.values;
  double sup = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = norm(mesh.nodes()[i] - rec.x_max) / eps;
    if (r > 5.0) continue;
    ++count;
    const double w = rec.p * (u[i] - rec.M) / rec.M;
    sup = std::max(sup, std::abs(w - liouville_profile(r)));
  }
  if (count < 50)
    throw InsufficientResolution(std::to_string(count) + " mesh nodes within 5 eps_p = " +
                                 std::to_string(5.0 * eps) + " of the peak (need 50)");
  return sup;
}

std::vector<Concentration> concentration_candidates(const Mesh& mesh, const SolveRecord& rec,
                                                    double threshold) {
  const auto& u = rec.u.values;
  std::vector<Concentration> maxima;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (mesh.is_boundary(i) || u[i] < threshold * rec.M) continue;
    bool is_max = true;
    for (int j : mesh.neighbors(i))
      if (u[j] > u[i]) {
        is_max = false;
        break;
      }
    if (is_max) maxima.push_back({mesh.nodes()[i], u[i], static_cast<int>(i)});
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [](const Concentration& a, const Concentration& b) { return a.m > b.m; });
  const double merge = 10.0 * bubble_scale(rec.p, rec.M);
  std::vector<Concentration> out;
  for (const auto& c : maxima) {
    const bool close = std::any_of(out.begin(), out.end(),
                                   [&](const Concentration& o) { return norm(o.x - c.x) <= merge; });
    if (!close) out.push_back(c);
  }
  return out;
}

double mass_bound(const Mesh& mesh, const SolveRecord& rec) {
  return integrate_power(mesh, rec.u.values, rec.p);
}

double peak_clearance(const SolveRecord& rec, const Domain& domain) {
  return domain.distance_to_boundary(rec.x_max);
}

DiagnosticsBundle compute_diagnostics(const Problem& problem, const SolveRecord& rec,
                                      const DiagnosticsOptions& opts, const EigenPair* eig) {
  const FemSpace& space = *problem.space;
  const Mesh& mesh = space.mesh();
  DiagnosticsBundle b;
  b.M = rec.M;
  b.x_max = rec.x_max;
  b.clearance = peak_clearance(rec, problem.domain);
  b.eps_p = bubble_scale(rec.p, rec.M);

  std::size_t clipped = 0;
  integrate_power(mesh, rec.u.values, 1.0, &clipped);
  if (clipped > 0)
    b.notes.push_back(std::to_string(clipped) + " negative nodal values clipped to zero");

  const EnergyQuantities e = energy_quantities(space, rec);
  b.beta = e.beta;
  b.p_int_u_p1 = e.p_int_u_p1;
  b.energy_gap = e.gap;
  b.energy_gap_rel = e.gap_rel;
  b.int_u_p = mass_bound(mesh, rec);

  const IdentityResidual poh = pohozaev_residual(space, rec, problem.domain);
  b.pohozaev_lhs = poh.lhs;
  b.pohozaev_rhs = poh.rhs;
  b.pohozaev_abs = poh.abs;
  b.pohozaev_rel = poh.rel;

  const IdentityResidual flux = flux_gap(space, rec);
  b.flux = flux.rhs;
  b.flux_rel = flux.rel;

  if (opts.eigen) {
    try {
      const EigenPair local = eig ? EigenPair{} : dirichlet_eigenpair(space);
      const EigenPair& pair = eig ? *eig : local;
      const IdentityResidual gap = eigen_identity_gap(space, rec, pair);
      b.eigen_lambda = pair.lambda;
      b.eigen_lhs = gap.lhs;
      b.eigen_rhs = gap.rhs;
      b.eigen_rel = gap.rel;
    } catch (const Error& err) {
      b.notes.push_back(std::string("eigen: ") + err.what());
    }
  }
  if (opts.green) {
    try {
      const GreenReport g = green_representation_gap(space, rec, problem.domain);
      b.green_value = g.value;
      b.green_rel = g.gap;
      b.corrector_min = g.corrector_min;
      b.corrector_max = g.corrector_max;
    } catch (const Error& err) {
      b.notes.push_back(std::string("green: ") + err.what());
    }
  }
  if (opts.bubble) {
    if (rec.p < 10.0) {
      b.notes.push_back("bubble: not computed for p < 10");
    } else {
      try {
        b.bubble_dist = bubble_distance(mesh, rec);
      } catch (const Error& err) {
        b.notes.push_back(std::string("bubble: ") + err.what());
      }
    }
  }
  if (opts.v_transform) b.v_transform = v_transform_report(mesh, rec);
  if (opts.concentrations) {
    b.concentrations = concentration_candidates(mesh, rec, opts.concentration_threshold);
    for (const auto& c : b.concentrations) b.beta_pred += 8.0 * std::numbers::pi * c.m * c.m;
  }
  return b;
}

void diagnose_records(const Problem& problem, std::span<SolveRecord> records,
                      const DiagnosticsOptions& opts, unsigned threads) {
  std::optional<EigenPair> eig;
  std::string eig_error;
  if (opts.eigen) {
    try {
      eig = dirichlet_eigenpair(*problem.space);
    } catch (const Error& err) {
      eig_error = std::string("eigen: ") + err.what();
    }
  }
  DiagnosticsOptions local = opts;
  if (!eig) local.eigen = false;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      SolveRecord& rec = records[i];
      if (!rec.ok()) continue;
      try {
        rec.diagnostics = compute_diagnostics(problem, rec, local, eig ? &*eig : nullptr);
        if (!eig_error.empty()) rec.diagnostics->notes.push_back(eig_error);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(records.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lelab
