#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <unordered_map>

#include "lelab/errors.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinAngleDegrees = 20.0;
// Ring spacing relative to the tangential spacing (equilateral height).
const double kRowHeight = std::sqrt(3.0) / 2.0;

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

double min_angle(Vec2 a, Vec2 b, Vec2 c) {
  const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv);
  };
  return std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

// Inverse of the normalized arc-length map of the boundary curve.
class ArcLength {
 public:
  explicit ArcLength(const Domain& d) : theta_(kSamples + 1), frac_(kSamples + 1) {
    double acc = 0.0;
    double prev = norm(d.tangent(0.0));
    theta_[0] = 0.0;
    frac_[0] = 0.0;
    for (int i = 1; i <= kSamples; ++i) {
      const double th = kTwoPi * i / kSamples;
      const double cur = norm(d.tangent(th));
      acc += 0.5 * (prev + cur) * (kTwoPi / kSamples);
      prev = cur;
      theta_[i] = th;
      frac_[i] = acc;
    }
    for (double& f : frac_) f /= acc;
  }

  double theta(double tau) const {
    tau -= std::floor(tau);
    const auto it = std::upper_bound(frac_.begin(), frac_.end(), tau);
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        it - frac_.begin(), 1, static_cast<std::ptrdiff_t>(kSamples)));
    const double w = (tau - frac_[i - 1]) / (frac_[i] - frac_[i - 1]);
    return theta_[i - 1] + w * (theta_[i] - theta_[i - 1]);
  }

 private:
  static constexpr int kSamples = 4 * kBoundarySamples;
  std::vector<double> theta_, frac_;
};

struct Ring {
  std::vector<int> ids;
  std::vector<double> tau;  // arc-length fraction in [0, 1), ascending
};

class LayeredBuilder {
 public:
  LayeredBuilder(const Domain& domain, double h, const std::optional<Refinement>& ref)
      : domain_(domain), h_(h), ref_(ref), arc_(domain) {
    center_ = ref ? ref->center : Vec2{};
    for (int i = 0; i < kBoundarySamples; ++i) {
      const double th = kTwoPi * i / kBoundarySamples;
      const Vec2 b = domain.boundary_point(th);
      reach_ = std::max(reach_, norm(b - center_));
      if (dot(b - center_, domain.outward_normal(th)) <= 0.0)
        throw MeshFailure("domain is not star-shaped about the refinement center");
    }
  }

  Mesh build() {
    const std::vector<double> levels = ring_levels();
    nodes_.push_back(center_);
    boundary_.push_back(0);
    Ring inner;
    inner.ids = {0};
    inner.tau = {0.0};
    for (std::size_t k = 0; k < levels.size(); ++k) {
      Ring outer = make_ring(levels[k], k);
      if (k == 0)
        fan(inner.ids[0], outer);
      else
        zip(inner, outer);
      inner = std::move(outer);
    }
    smooth();
    Mesh mesh(nodes_, triangles_, boundary_, h_);
    const double worst = mesh.min_angle_degrees();
    if (worst < kMinAngleDegrees)
      throw MeshFailure("minimum angle " + std::to_string(worst) + " deg below " +
                        std::to_string(kMinAngleDegrees));
    return mesh;
  }

 private:
  double size_at(double r) const {
    if (!ref_) return h_;
    return std::clamp(h_ * r / ref_->radius, ref_->min_size, h_);
  }

  std::vector<double> ring_levels() const {
    std::vector<double> levels;
    const double uniform_step = kRowHeight * h_ / reach_;
    double s = 0.0;
    if (ref_) {
      for (;;) {
        const double size = size_at(s * reach_);
        if (size >= h_) break;
        const double next = s + kRowHeight * size / reach_;
        if (next + 0.5 * uniform_step >= 1.0) break;
        s = next;
        levels.push_back(s);
      }
    }
    const auto count = static_cast<int>(std::max(1.0, std::ceil((1.0 - s) / uniform_step)));
    const double step = (1.0 - s) / count;
    for (int i = 1; i < count; ++i) levels.push_back(s + i * step);
    levels.push_back(1.0);
    return levels;
  }

  Ring make_ring(double s, std::size_t k) {
    const bool on_boundary = (s == 1.0);
    const double length = s * domain_.perimeter();
    const double spacing = on_boundary ? h_ : size_at(s * reach_);
    const int n = std::max(6, static_cast<int>(on_boundary ? std::ceil(length / spacing)
                                                           : std::lround(length / spacing)));
    const double phase = (k % 2 == 0) ? 0.0 : 0.5;
    Ring ring;
    for (int j = 0; j < n; ++j) {
      const double tau = (j + phase) / n;
      const Vec2 b = domain_.boundary_point(arc_.theta(tau));
      ring.ids.push_back(static_cast<int>(nodes_.size()));
      ring.tau.push_back(tau);
      nodes_.push_back(on_boundary ? b : center_ + s * (b - center_));
      boundary_.push_back(on_boundary ? 1 : 0);
      graded_.resize(nodes_.size(), 0);
      graded_.back() = (!on_boundary && spacing < h_) ? 1 : 0;
    }
    return ring;
  }

  void fan(int hub, const Ring& ring) {
    const auto n = ring.ids.size();
    for (std::size_t j = 0; j < n; ++j)
      triangles_.push_back({hub, ring.ids[j], ring.ids[(j + 1) % n]});
  }

  // Triangulate the annulus between two nested rings by walking both in
  // arc-length order. Near-ties go to the triangle with the larger minimum
  // angle.
  void zip(const Ring& in, const Ring& out) {
    const auto m = in.ids.size(), n = out.ids.size();
    std::size_t j0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double d = std::abs(out.tau[j] - in.tau[0]);
      d = std::min(d, 1.0 - d);
      if (d < best) {
        best = d;
        j0 = j;
      }
    }
    auto a = [&](std::size_t i) { return in.ids[i % m]; };
    auto b = [&](std::size_t j) { return out.ids[(j0 + j) % n]; };
    // Unwrapped parameters; the outer start is shifted to within 1/2 of the inner start.
    double shift = 0.0;
    if (out.tau[j0] - in.tau[0] > 0.5) shift = -1.0;
    if (out.tau[j0] - in.tau[0] < -0.5) shift = 1.0;
    auto ta = [&](std::size_t i) { return in.tau[i % m] + static_cast<double>(i / m); };
    auto tb = [&](std::size_t j) {
      return out.tau[(j0 + j) % n] + static_cast<double>((j0 + j) / n) + shift;
    };
    const double tie = 0.25 / static_cast<double>(std::max(m, n));
    std::size_t i = 0, j = 0;
    while (i < m || j < n) {
      bool advance_inner;
      if (i == m) {
        advance_inner = false;
      } else if (j == n) {
        advance_inner = true;
      } else {
        const Vec2 pa = nodes_[a(i)], pa1 = nodes_[a(i + 1)];
        const Vec2 pb = nodes_[b(j)], pb1 = nodes_[b(j + 1)];
        const bool inner_ok = signed_area(pa, pb, pa1) > 0.0;
        const bool outer_ok = signed_area(pa, pb, pb1) > 0.0;
        const double lead = ta(i + 1) - tb(j + 1);
        if (inner_ok && outer_ok && std::abs(lead) < tie)
          advance_inner = min_angle(pa, pb, pa1) >= min_angle(pa, pb, pb1);
        else if (inner_ok != outer_ok)
          advance_inner = inner_ok;
        else
          advance_inner = lead < 0.0;
      }
      if (advance_inner) {
        triangles_.push_back({a(i), b(j), a(i + 1)});
        ++i;
      } else {
        triangles_.push_back({a(i), b(j), b(j + 1)});
        ++j;
      }
    }
  }

  // Quality-guarded Laplacian smoothing of interior nodes outside the graded
  // zone: a move is kept only if it does not lower the local minimum angle.
  void smooth() {
    const std::size_t nn = nodes_.size();
    std::vector<std::vector<int>> incident(nn);
    std::vector<std::vector<int>> nbrs(nn);
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      for (int v : triangles_[t]) incident[v].push_back(static_cast<int>(t));
    for (const auto& tri : triangles_)
      for (int e = 0; e < 3; ++e) {
        nbrs[tri[e]].push_back(tri[(e + 1) % 3]);
        nbrs[tri[(e + 1) % 3]].push_back(tri[e]);
      }
    for (auto& v : nbrs) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    auto local_quality = [&](std::size_t v) {
      double q = std::numeric_limits<double>::infinity();
      for (int t : incident[v]) {
        const auto& tri = triangles_[t];
        const Vec2 p0 = nodes_[tri[0]], p1 = nodes_[tri[1]], p2 = nodes_[tri[2]];
        if (signed_area(p0, p1, p2) <= 0.0) return -1.0;
        q = std::min(q, min_angle(p0, p1, p2));
      }
      return q;
    };
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (std::size_t v = 1; v < nn; ++v) {
        if (boundary_[v] || graded_[v]) continue;
        Vec2 avg{};
        for (int w : nbrs[v]) avg = avg + nodes_[w];
        avg = (1.0 / nbrs[v].size()) * avg;
        const Vec2 old = nodes_[v];
        const double before = local_quality(v);
        nodes_[v] = avg;
        if (local_quality(v) < before) nodes_[v] = old;
      }
    }
  }

  const Domain& domain_;
  double h_;
  std::optional<Refinement> ref_;
  ArcLength arc_;
  Vec2 center_;
  double reach_ = 0.0;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::uint8_t> boundary_;
  std::vector<std::uint8_t> graded_{0};
};

}  // namespace

Mesh::Mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles,
           std::vector<std::uint8_t> boundary_flags, double h)
    : nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary_flags)),
      h_(h) {
  if (boundary_.size() != nodes_.size())
    throw MeshFailure("boundary flag count does not match node count");
  if (!(h_ > 0.0)) throw MeshFailure("target edge length must be positive");
  const auto nn = static_cast<int>(nodes_.size());
  areas_.reserve(triangles_.size());
  for (const auto& tri : triangles_) {
    for (int v : tri)
      if (v < 0 || v >= nn) throw MeshFailure("triangle references a missing node");
    const double a = signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (!(a > 0.0)) throw MeshFailure("triangle with non-positive signed area");
    areas_.push_back(a);
  }

  // Directed edge (a,b) of triangle t; an edge seen once is on the boundary.
  std::unordered_map<std::uint64_t, std::pair<int, int>> edge_count;
  edge_count.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    for (int e = 0; e < 3; ++e) {
      auto& entry = edge_count[edge_key(triangles_[t][e], triangles_[t][(e + 1) % 3])];
      ++entry.first;
      entry.second = static_cast<int>(3 * t + e);
    }
  std::vector<std::uint64_t> keys;
  for (const auto& [key, val] : edge_count)
    if (val.first == 1) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  for (auto key : keys) {
    const int code = edge_count[key].second;
    const int t = code / 3, e = code % 3;
    BoundaryEdge be;
    be.a = triangles_[t][e];
    be.b = triangles_[t][(e + 1) % 3];
    be.triangle = t;
    const Vec2 d = nodes_[be.b] - nodes_[be.a];
    be.length = norm(d);
    be.normal = {d.y / be.length, -d.x / be.length};
    be.midpoint = 0.5 * (nodes_[be.a] + nodes_[be.b]);
    boundary_edges_.push_back(be);
  }

  std::vector<std::vector<int>> nbrs(nodes_.size());
  for (const auto& tri : triangles_)
    for (int e = 0; e < 3; ++e) {
      nbrs[tri[e]].push_back(tri[(e + 1) % 3]);
      nbrs[tri[(e + 1) % 3]].push_back(tri[e]);
    }
  adj_offsets_.assign(1, 0);
  for (auto& v : nbrs) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    adj_.insert(adj_.end(), v.begin(), v.end());
    adj_offsets_.push_back(static_cast<int>(adj_.size()));
  }
}

double Mesh::area() const {
  double a = 0.0;
  for (double t : areas_) a += t;
  return a;
}

double Mesh::min_angle_degrees() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& tri : triangles_)
    worst = std::min(worst, min_angle(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]));
  return worst * 180.0 / std::numbers::pi;
}

double Mesh::local_size(std::size_t node) const {
  double size = 0.0;
  for (int w : neighbors(node)) size = std::max(size, norm(nodes_[w] - nodes_[node]));
  return size;
}

std::span<const int> Mesh::neighbors(std::size_t node) const {
  return {adj_.data() + adj_offsets_[node],
          static_cast<std::size_t>(adj_offsets_[node + 1] - adj_offsets_[node])};
}

bool Mesh::is_conforming() const {
  std::map<std::uint64_t, int> count;
  for (const auto& tri : triangles_)
    for (int e = 0; e < 3; ++e) ++count[edge_key(tri[e], tri[(e + 1) % 3])];
  std::size_t boundary_edges = 0;
  for (const auto& [key, c] : count) {
    if (c > 2) return false;
    if (c == 1) {
      ++boundary_edges;
      const int a = static_cast<int>(key & 0xffffffffu), b = static_cast<int>(key >> 32);
      if (!is_boundary(a) || !is_boundary(b)) return false;
    }
  }
  return boundary_edges == boundary_edges_.size();
}

Mesh Mesh::scaled(double factor) const {
  std::vector<Vec2> nodes = nodes_;
  for (auto& p : nodes) p = factor * p;
  return Mesh(std::move(nodes), triangles_, boundary_, h_ * factor);
}

void Mesh::write_text(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "nodes " << nodes_.size() << " triangles " << triangles_.size() << '\n';
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    os << nodes_[i].x << ' ' << nodes_[i].y << ' ' << int(boundary_[i]) << '\n';
  for (const auto& t : triangles_) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os.precision(old);
}

Mesh generate_mesh(const Domain& domain, double h, const std::optional<Refinement>& refinement) {
  if (!(h > 0.0 && h < 0.5 * domain.min_radius()))
    throw MeshFailure("target edge length must satisfy 0 < h < min_radius/2");
  if (refinement) {
    if (!(refinement->min_size > 0.0 && refinement->min_size <= h))
      throw MeshFailure("refinement min_size must lie in (0, h]");
    if (!(refinement->radius >= 2.0 * h))
      throw MeshFailure("refinement radius must be at least 2h");
    if (!domain.contains(refinement->center))
      throw MeshFailure("refinement center lies outside the domain");
  }
  return LayeredBuilder(domain, h, refinement).build();
}

}  // namespace lelab
