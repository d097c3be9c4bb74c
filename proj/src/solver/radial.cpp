#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/solver.hpp"

namespace lelab {

namespace {

// State in t = log r: u, s = r u', int u^(p+1) r dr, int u^p r dr.
using State = std::array<double, 4>;

constexpr double kBracketLow = 0.1;
constexpr double kBracketHigh = 10.0;
constexpr double kIntegratorRtol = 1e-13;
constexpr double kMaxStep = 0.25;
constexpr double kSpan = 1e5;  // give up if no zero within this many units of t

State rhs(double t, const State& y, double p) {
  const double u = y[0];
  // r^2 u^p evaluated in log space.
  const double w = u > 0.0 ? std::exp(2.0 * t + p * std::log(u)) : 0.0;
  return {y[1], -w, w * std::max(u, 0.0), w};
}

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [c, k] : terms)
    for (std::size_t i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
  return out;
}

struct Step {
  State y;
  double error = 0.0;
};

// One Dormand-Prince 5(4) step.
Step dopri_step(double t, const State& y, double h, double p) {
  const State k1 = rhs(t, y, p);
  const State k2 = rhs(t + h / 5, axpy(y, h, {{1.0 / 5, &k1}}), p);
  const State k3 = rhs(t + 3 * h / 10, axpy(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}), p);
  const State k4 =
      rhs(t + 4 * h / 5, axpy(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}), p);
  const State k5 = rhs(t + 8 * h / 9,
                       axpy(y, h, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2},
                                   {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}}),
                       p);
  const State k6 = rhs(t + h,
                       axpy(y, h, {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3},
                                   {49.0 / 176, &k4}, {-5103.0 / 18656, &k5}}),
                       p);
  const State y5 = axpy(y, h, {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4},
                               {-2187.0 / 6784, &k5}, {11.0 / 84, &k6}});
  const State k7 = rhs(t + h, y5, p);
  const State y4 = axpy(y, h, {{5179.0 / 57600, &k1}, {7571.0 / 16695, &k3}, {393.0 / 640, &k4},
                               {-92097.0 / 339200, &k5}, {187.0 / 2100, &k6}, {1.0 / 40, &k7}});
  // u and s share one scale: s -> 0 as r -> 0 and u -> 0 at the zero.
  const double us = kIntegratorRtol * std::max({std::abs(y[0]), std::abs(y5[0]), std::abs(y[1]),
                                                std::abs(y5[1]), 1e-300});
  const double err = std::max({std::abs(y5[0] - y4[0]) / us, std::abs(y5[1] - y4[1]) / us,
                  std::abs(y5[2] - y4[2]) / (1e-300 + kIntegratorRtol * std::abs(y5[2])),
                  std::abs(y5[3] - y4[3]) / (1e-300 + kIntegratorRtol * std::abs(y5[3]))});
  return {y5, err};
}

struct SeriesStart {
  double t0, c2, c4;
  State y0;
};

// u = a + c2 r^2 + c4 r^4 near the origin, started where a^(p-1) r^2 is tiny.
SeriesStart series_start(double a, double p) {
  const double log_core = -0.5 * (p - 1.0) * std::log(a);
  const double t0 = std::log(1e-4) + std::min(0.0, log_core);
  // z = a^(p-1) r0^2, formed in log space so that large a^p never appears.
  const double z = std::exp((p - 1.0) * std::log(a) + 2.0 * t0);
  const double c2 = -std::pow(a, p) / 4.0;
  const double c4 = p * std::pow(a, 2.0 * p - 1.0) / 64.0;
  const double u0 = a - a * z / 4.0 + p * a * z * z / 64.0;
  const double s0 = -a * z / 2.0 + p * a * z * z / 16.0;
  return {t0, c2, c4, {u0, s0, a * a * z / 2.0, a * z / 2.0}};
}

struct Shot {
  double t_zero = 0.0;
  State at_zero{};
  std::vector<double> t, u, s;
};

// Integrate until the first zero of u.
Shot integrate_to_zero(double a, double p, bool keep_knots) {
  const SeriesStart start = series_start(a, p);
  double t = start.t0;
  State y = start.y0;
  double h = 1e-2;
  Shot shot;
  if (keep_knots) {
    shot.t.push_back(t);
    shot.u.push_back(y[0]);
    shot.s.push_back(y[1]);
  }
  const double t_end = start.t0 + kSpan;
  while (t < t_end) {
    const Step st = dopri_step(t, y, h, p);
    if (!std::isfinite(st.error)) {
      h *= 0.25;
      if (h < 1e-12) throw Overflow("radial integration left the finite range");
      continue;
    }
    if (st.error > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(st.error, -0.2));
      if (h < 1e-12) throw NotConverged("radial integration step size underflow");
      continue;
    }
    if (st.y[0] <= 0.0) {
      // Zero inside [t, t + h]: Newton on the crossing time, re-stepping from t.
      double dt = h * y[0] / (y[0] - st.y[0]);
      State yz = dopri_step(t, y, dt, p).y;
      for (int it = 0; it < 8; ++it) {
        const double corr = -yz[0] / yz[1];
        dt += corr;
        yz = dopri_step(t, y, dt, p).y;
        if (std::abs(corr) <= 1e-15 * std::max(1.0, std::abs(t + dt))) break;
      }
      shot.t_zero = t + dt;
      shot.at_zero = yz;
      if (keep_knots) {
        shot.t.push_back(shot.t_zero);
        shot.u.push_back(0.0);
        shot.s.push_back(yz[1]);
      }
      return shot;
    }
    t += h;
    y = st.y;
    if (keep_knots) {
      shot.t.push_back(t);
      shot.u.push_back(y[0]);
      shot.s.push_back(y[1]);
    }
    const double grow = st.error > 0.0 ? 0.9 * std::pow(st.error, -0.2) : 5.0;
    h = std::min(kMaxStep, h * std::clamp(grow, 0.2, 5.0));
  }
  throw NoBracket("no zero crossing found for u(0) = " + std::to_string(a));
}

// Root of f on [lo, hi] with f(lo) > 0 > f(hi), Illinois variant of regula falsi.
template <class F>
double illinois(F f, double lo, double hi, double f_lo, double f_hi, double tol) {
  int side = 0;
  double x = lo;
  for (int it = 0; it < 200; ++it) {
    x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    const double fx = f(x);
    if (std::abs(fx) <= tol || std::abs(hi - lo) <= 1e-15 * std::abs(x)) return x;
    if (fx > 0.0) {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  return x;
}

}  // namespace

double RadialSolution::value_at(double s) const {
  if (s <= 0.0) return M;
  if (s >= radius) return 0.0;
  const double t = std::log(s);
  if (t <= t_knots.front()) return M + series_c2 * s * s + series_c4 * std::pow(s, 4);
  const auto it = std::upper_bound(t_knots.begin(), t_knots.end(), t);
  if (it == t_knots.end()) return 0.0;
  const auto i = static_cast<std::size_t>(it - t_knots.begin());
  const double t0 = t_knots[i - 1], t1 = t_knots[i], h = t1 - t0;
  const double x = (t - t0) / h;
  const double h00 = 2 * x * x * x - 3 * x * x + 1, h10 = x * x * x - 2 * x * x + x;
  const double h01 = -2 * x * x * x + 3 * x * x, h11 = x * x * x - x * x;
  return h00 * u_knots[i - 1] + h10 * h * s_knots[i - 1] + h01 * u_knots[i] +
         h11 * h * s_knots[i];
}

double RadialSolution::pohozaev_lhs() const {
  return 4.0 / (p + 1.0) * 2.0 * std::numbers::pi * int_u_p1_rdr;
}

double RadialSolution::pohozaev_rhs() const {
  // (x, nu) = radius on the circle, ds = radius dtheta.
  return 2.0 * std::numbers::pi * radius * radius * du_boundary * du_boundary;
}

RadialSolution radial_shoot(double p, double tol, double radius) {
  if (!(p > 1.0)) throw std::invalid_argument("exponent must exceed 1");
  if (!(tol >= 1e-14 && tol <= 1e-6)) throw std::invalid_argument("tol must lie in [1e-14, 1e-6]");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");

  const double target = std::log(radius);
  auto f = [&](double log_a) { return integrate_to_zero(std::exp(log_a), p, false).t_zero - target; };
  const double lo = std::log(kBracketLow), hi = std::log(kBracketHigh);
  const double f_lo = f(lo), f_hi = f(hi);
  if (!(f_lo > 0.0 && f_hi < 0.0))
    throw NoBracket("u(0) in [0.1, 10] does not bracket the first zero at r = " +
                    std::to_string(radius) + " for p = " + std::to_string(p));
  const double a = std::exp(illinois(f, lo, hi, f_lo, f_hi, tol));

  Shot shot = integrate_to_zero(a, p, true);
  const SeriesStart start = series_start(a, p);
  RadialSolution sol;
  sol.p = p;
  sol.radius = radius;
  sol.M = a;
  const double r_zero = std::exp(shot.t_zero);
  sol.du_boundary = shot.at_zero[1] / r_zero;
  sol.int_u_p1_rdr = shot.at_zero[2];
  sol.int_u_p_rdr = shot.at_zero[3];
  sol.series_c2 = start.c2;
  sol.series_c4 = start.c4;
  // Pin the last knot to the nominal radius; the shot misses it by <= tol.
  shot.t.back() = target;
  sol.t_knots = std::move(shot.t);
  sol.u_knots = std::move(shot.u);
  sol.s_knots = std::move(shot.s);
  sol.r.push_back(0.0);
  sol.u.push_back(a);
  for (std::size_t i = 0; i < sol.t_knots.size(); ++i) {
    sol.r.push_back(std::exp(sol.t_knots[i]));
    sol.u.push_back(sol.u_knots[i]);
  }
  sol.r.back() = radius;
  return sol;
}

namespace {

// u(log radius) from the series start with `steps` classical RK4 steps.
double rk4_endpoint(double a, double p, double target, int steps) {
  const SeriesStart start = series_start(a, p);
  const double h = (target - start.t0) / steps;
  State y = start.y0;
  double t = start.t0;
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(t, y, p);
    const State k2 = rhs(t + h / 2, axpy(y, h, {{0.5, &k1}}), p);
    const State k3 = rhs(t + h / 2, axpy(y, h, {{0.5, &k2}}), p);
    const State k4 = rhs(t + h, axpy(y, h, {{1.0, &k3}}), p);
    y = axpy(y, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
    t = start.t0 + (i + 1) * h;
  }
  return y[0];
}

}  // namespace

double radial_shoot_fixed_step(double p, int steps, double radius) {
  if (!(p > 1.0)) throw std::invalid_argument("exponent must exceed 1");
  const double target = std::log(radius);
  auto g = [&](double log_a) {
    const double a = std::exp(log_a);
    const double coarse = rk4_endpoint(a, p, target, steps);
    const double fine = rk4_endpoint(a, p, target, 2 * steps);
    return (16.0 * fine - coarse) / 15.0;
  };
  const double lo = std::log(kBracketLow), hi = std::log(kBracketHigh);
  const double g_lo = g(lo), g_hi = g(hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) throw NoBracket("fixed-step shot does not bracket a root");
  return std::exp(illinois(g, lo, hi, g_lo, g_hi, 1e-15));
}

}  // namespace lelab
