#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "lelab/errors.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sample_angle(int i) { return kTwoPi * i / kBoundarySamples; }

// Minimize f over [lo, hi] to ~1e-10 in the argument.
template <class F>
std::pair<double, double> local_minimum(F f, double lo, double hi) {
  auto [arg, val] = boost::math::tools::brent_find_minima(f, lo, hi, 40);
  return {arg, val};
}

}  // namespace

Domain Domain::disk(double radius) {
  if (!(radius > 0.0)) throw InvalidDomain("disk radius must be positive");
  Domain d;
  d.kind_ = Kind::disk;
  d.disk_radius_ = radius;
  d.validate();
  return d;
}

Domain Domain::ellipse(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidDomain("ellipse semi-axes must be positive");
  Domain d;
  d.kind_ = Kind::ellipse;
  d.a_ = a;
  d.b_ = b;
  d.validate();
  return d;
}

Domain Domain::fourier(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
  Domain d;
  d.kind_ = Kind::fourier;
  d.cos_ = std::move(cos_coeffs);
  d.sin_ = std::move(sin_coeffs);
  for (double c : d.cos_)
    if (!std::isfinite(c)) throw InvalidDomain("non-finite Fourier coefficient");
  for (double c : d.sin_)
    if (!std::isfinite(c)) throw InvalidDomain("non-finite Fourier coefficient");
  d.validate();
  return d;
}

Domain Domain::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidDomain("scale factor must be positive");
  Domain d = *this;
  d.scale_ *= factor;
  d.validate();
  return d;
}

double Domain::unit_radius(double theta) const {
  switch (kind_) {
    case Kind::disk:
      return disk_radius_;
    case Kind::ellipse: {
      const double c = std::cos(theta), s = std::sin(theta);
      return a_ * b_ / std::sqrt(b_ * b_ * c * c + a_ * a_ * s * s);
    }
    case Kind::fourier: {
      double r = 1.0;
      for (std::size_t k = 0; k < cos_.size(); ++k) r += cos_[k] * std::cos((k + 1) * theta);
      for (std::size_t k = 0; k < sin_.size(); ++k) r += sin_[k] * std::sin((k + 1) * theta);
      return r;
    }
  }
  return 0.0;
}

double Domain::unit_radius_derivative(double theta) const {
  switch (kind_) {
    case Kind::disk:
      return 0.0;
    case Kind::ellipse: {
      const double c = std::cos(theta), s = std::sin(theta);
      const double q = b_ * b_ * c * c + a_ * a_ * s * s;
      return -a_ * b_ * (a_ * a_ - b_ * b_) * s * c / (q * std::sqrt(q));
    }
    case Kind::fourier: {
      double dr = 0.0;
      for (std::size_t k = 0; k < cos_.size(); ++k)
        dr -= (k + 1) * cos_[k] * std::sin((k + 1) * theta);
      for (std::size_t k = 0; k < sin_.size(); ++k)
        dr += (k + 1) * sin_[k] * std::cos((k + 1) * theta);
      return dr;
    }
  }
  return 0.0;
}

double Domain::radius(double theta) const { return scale_ * unit_radius(theta); }

double Domain::radius_derivative(double theta) const {
  return scale_ * unit_radius_derivative(theta);
}

Vec2 Domain::boundary_point(double theta) const {
  const double r = radius(theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

Vec2 Domain::tangent(double theta) const {
  const double r = radius(theta), dr = radius_derivative(theta);
  const double c = std::cos(theta), s = std::sin(theta);
  return {dr * c - r * s, dr * s + r * c};
}

Vec2 Domain::outward_normal(double theta) const {
  // CCW tangent rotated by -90 degrees.
  const Vec2 t = tangent(theta);
  const double len = norm(t);
  return {t.y / len, -t.x / len};
}

void Domain::validate() {
  min_radius_ = std::numeric_limits<double>::infinity();
  max_radius_ = 0.0;
  perimeter_ = 0.0;
  int argmin = 0;
  double min_support = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kBoundarySamples; ++i) {
    const double th = sample_angle(i);
    const double r = radius(th);
    if (!(r > 0.0))
      throw InvalidDomain("boundary radius must be positive (rho(" + std::to_string(th) +
                          ") = " + std::to_string(r) + ")");
    min_radius_ = std::min(min_radius_, r);
    max_radius_ = std::max(max_radius_, r);
    perimeter_ += norm(tangent(th));
    const double support = dot(boundary_point(th), outward_normal(th));
    if (support < min_support) {
      min_support = support;
      argmin = i;
    }
  }
  perimeter_ *= kTwoPi / kBoundarySamples;

  const double step = kTwoPi / kBoundarySamples;
  auto support = [this](double th) { return dot(boundary_point(th), outward_normal(th)); };
  const auto [arg, val] =
      local_minimum(support, sample_angle(argmin) - step, sample_angle(argmin) + step);
  (void)arg;
  margin_ = std::min(val, min_support);
  if (!(margin_ > 0.0))
    throw NotStarShaped("domain is not strictly star-shaped about the origin (margin " +
                        std::to_string(margin_) + ")");
}

double Domain::distance_to_boundary(Vec2 x) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kBoundarySamples; ++i) {
    const double d = norm(x - boundary_point(sample_angle(i)));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const double step = kTwoPi / kBoundarySamples;
  auto dist = [&](double th) { return norm(x - boundary_point(th)); };
  const auto [arg, val] =
      local_minimum(dist, sample_angle(best) - step, sample_angle(best) + step);
  (void)arg;
  return std::min(val, best_d);
}

bool Domain::contains(Vec2 x) const {
  const double r = norm(x);
  if (r == 0.0) return true;
  return r < radius(std::atan2(x.y, x.x));
}

double Domain::area() const {
  // Trapezoid rule is spectrally accurate for the periodic integrand.
  double sum = 0.0;
  for (int i = 0; i < kBoundarySamples; ++i) {
    const double r = radius(sample_angle(i));
    sum += r * r;
  }
  return 0.5 * sum * kTwoPi / kBoundarySamples;
}

}  // namespace lelab
