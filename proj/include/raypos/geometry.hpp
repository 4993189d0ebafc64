#pragma once

// Exact ray / surface primitives. All quantities are meters, double
// precision, value semantics throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>

namespace raypos {

inline constexpr double kHitEpsilon = 1e-6;    // min distance for a valid hit
inline constexpr double kGeomEpsilon = 1e-6;   // bounds inflation
inline constexpr double kAreaEpsilon = 1e-9;   // degenerate-triangle threshold

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline Vec3 operator-(Vec3 v) { return {-v.x, -v.y, -v.z}; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm_squared(Vec3 v) { return dot(v, v); }
inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(Vec3 v) {
  const double n = norm(v);
  return {v.x / n, v.y / n, v.z / n};
}

inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// Specular reflection of direction `d` about unit normal `n`:
/// d - 2 (d.n) n. Angle of incidence equals angle of reflection.
inline Vec3 reflect(Vec3 d, Vec3 n) { return d - 2.0 * dot(d, n) * n; }

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest()};

  bool empty() const { return lo.x > hi.x; }

  void expand(Vec3 p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }

  void expand(const Aabb& b) {
    if (b.empty()) return;
    expand(b.lo);
    expand(b.hi);
  }

  Aabb inflated(double eps) const {
    return {{lo.x - eps, lo.y - eps, lo.z - eps}, {hi.x + eps, hi.y + eps, hi.z + eps}};
  }

  bool contains(Vec3 p, double eps = 0.0) const {
    return p.x >= lo.x - eps && p.x <= hi.x + eps && p.y >= lo.y - eps &&
           p.y <= hi.y + eps && p.z >= lo.z - eps && p.z <= hi.z + eps;
  }

  Vec3 extent() const { return hi - lo; }
};

/// Slab test. Returns the entry distance if the ray hits the box within
/// [t_min, t_max], otherwise nothing.
inline std::optional<double> intersect_aabb(const Ray& ray, const Aabb& box,
                                            double t_min, double t_max) {
  double t0 = t_min, t1 = t_max;
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
  for (int i = 0; i < 3; ++i) {
    const double inv = 1.0 / d[i];  // +-inf when parallel, IEEE handles it
    double ta = (lo[i] - o[i]) * inv;
    double tb = (hi[i] - o[i]) * inv;
    if (ta > tb) std::swap(ta, tb);
    // NaN from 0 * inf means the parallel axis constraint is decided by
    // the other comparisons; skip it.
    if (ta == ta) t0 = std::max(t0, ta);
    if (tb == tb) t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

struct Triangle {
  Vec3 v0, v1, v2;
  Vec3 normal;  // unit, from winding (v1-v0) x (v2-v0)

  Triangle(Vec3 a, Vec3 b, Vec3 c) : v0(a), v1(b), v2(c) {
    const Vec3 n = cross(v1 - v0, v2 - v0);
    const double len = norm(n);
    if (0.5 * len <= kAreaEpsilon) {
      throw std::invalid_argument("degenerate triangle (area below threshold)");
    }
    normal = (1.0 / len) * n;
  }

  double area() const { return 0.5 * norm(cross(v1 - v0, v2 - v0)); }

  Aabb bounds() const {
    Aabb b;
    b.expand(v0);
    b.expand(v1);
    b.expand(v2);
    return b;
  }

  Vec3 centroid() const { return (1.0 / 3.0) * (v0 + v1 + v2); }
};

struct Hit {
  double t = 0.0;
  Vec3 point;
  Vec3 normal;  // unit, flipped to face the incoming ray
  std::size_t triangle_index = 0;
};

/// Moeller-Trumbore, two-sided. Returns the ray parameter of the hit in
/// (t_min, t_max), or nothing.
inline std::optional<double> intersect_triangle(const Ray& ray, const Triangle& tri,
                                                double t_min, double t_max) {
  const Vec3 e1 = tri.v1 - tri.v0;
  const Vec3 e2 = tri.v2 - tri.v0;
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;  // parallel to plane
  const double inv_det = 1.0 / det;
  const Vec3 s = ray.origin - tri.v0;
  const double u = dot(s, p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv_det;
  if (t <= t_min || t >= t_max) return std::nullopt;
  return t;
}

/// Distance from point `p` to segment [a, b]; `t_out` receives the clamped
/// segment parameter of the closest point.
inline double point_segment_distance(Vec3 p, Vec3 a, Vec3 b, double* t_out = nullptr) {
  const Vec3 ab = b - a;
  const double len2 = norm_squared(ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (t_out) *t_out = t;
  return distance(p, a + t * ab);
}

/// Distance from point `p` to a triangle (closest point on the face, an
/// edge, or a vertex).
inline double point_triangle_distance(Vec3 p, const Triangle& tri) {
  // Region classification after Ericson, "Real-Time Collision Detection".
  const Vec3 ab = tri.v1 - tri.v0;
  const Vec3 ac = tri.v2 - tri.v0;
  const Vec3 ap = p - tri.v0;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return distance(p, tri.v0);

  const Vec3 bp = p - tri.v1;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return distance(p, tri.v1);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return distance(p, tri.v0 + v * ab);
  }

  const Vec3 cp = p - tri.v2;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return distance(p, tri.v2);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return distance(p, tri.v0 + w * ac);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return distance(p, tri.v1 + w * (tri.v2 - tri.v1));
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return distance(p, tri.v0 + v * ab + w * ac);
}

}  // namespace raypos
