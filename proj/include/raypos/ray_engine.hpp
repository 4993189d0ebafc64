#pragma once

// Specular path tracing and grid-cell enumeration. Paths are polylines;
// cells are square footprints extruded into a horizontal slab, so 3D rays
// register on a 2D candidate grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "raypos/errors.hpp"
#include "raypos/scene.hpp"

namespace raypos {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an azimuth into [0, 2pi).
inline double wrap_azimuth(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod can land exactly on 2pi after the add
  return a;
}

/// Smallest signed azimuth difference a - b, in (-pi, pi].
inline double azimuth_difference(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  if (d > std::numbers::pi) d -= kTwoPi;
  return d;
}

/// Azimuth in [0, 2pi) measured in the xy plane from +x; elevation in
/// [-pi/2, pi/2] measured from the horizontal plane, positive up.
struct LaunchAngle {
  double azimuth = 0.0;
  double elevation = 0.0;
};

inline Vec3 direction_from_angles(const LaunchAngle& a) {
  const double ce = std::cos(a.elevation);
  return {ce * std::cos(a.azimuth), ce * std::sin(a.azimuth), std::sin(a.elevation)};
}

inline LaunchAngle angles_from_direction(Vec3 d) {
  d = normalized(d);
  LaunchAngle a;
  a.azimuth = wrap_azimuth(std::atan2(d.y, d.x));
  a.elevation = std::asin(std::clamp(d.z, -1.0, 1.0));
  return a;
}

struct RayPath {
  std::vector<Vec3> vertices;  // launch point, bounce points, final point
  int bounce_count = 0;
  LaunchAngle launch_angle;
  int source_bs = -1;
  bool escaped = false;
};

namespace detail {

/// Exit parameter of a ray starting inside `box`.
inline double aabb_exit_t(const Ray& ray, const Aabb& box) {
  double t1 = std::numeric_limits<double>::infinity();
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) continue;
    const double inv = 1.0 / d[i];
    double ta = (lo[i] - o[i]) * inv;
    double tb = (hi[i] - o[i]) * inv;
    t1 = std::min(t1, std::max(ta, tb));
  }
  return std::max(t1, 0.0);
}

}  // namespace detail

/// Traces a specular polyline. The path reflects at each surface hit until
/// the bounce budget is spent (the final vertex is then the next hit) or the
/// ray leaves the scene bounds (the final vertex is the box exit point).
inline RayPath trace(const Scene& scene, Vec3 origin, const LaunchAngle& angle,
                     int max_bounces) {
  const Aabb bounds = scene.bounds().inflated(kGeomEpsilon);
  if (!bounds.contains(origin)) {
    throw OriginOutsideSceneError("trace origin outside scene bounds");
  }

  RayPath path;
  path.launch_angle = angle;
  path.vertices.push_back(origin);

  Vec3 pos = origin;
  Vec3 dir = direction_from_angles(angle);
  while (true) {
    const auto hit = scene.intersect({pos, dir});
    if (!hit) {
      path.vertices.push_back(pos + detail::aabb_exit_t({pos, dir}, bounds) * dir);
      path.escaped = true;
      break;
    }
    path.vertices.push_back(hit->point);
    if (path.bounce_count >= max_bounces) break;
    dir = reflect(dir, hit->normal);
    pos = hit->point;
    ++path.bounce_count;
  }
  return path;
}

struct CellIndex {
  int ix = 0;
  int iy = 0;
  friend bool operator==(CellIndex, CellIndex) = default;
};

struct CellGrid {
  Vec2 origin;             // lower-left corner of cell (0,0)
  double cell_size = 0.1;
  int nx = 0;
  int ny = 0;
  double slab_z_center = 1.0;
  double slab_z_halfwidth = 0.25;

  int cell_count() const { return nx * ny; }
  int linear(CellIndex c) const { return c.iy * nx + c.ix; }
  CellIndex from_linear(int k) const { return {k % nx, k / nx}; }

  bool valid(CellIndex c) const {
    return c.ix >= 0 && c.ix < nx && c.iy >= 0 && c.iy < ny;
  }

  Vec3 cell_center(CellIndex c) const {
    return {origin.x + (c.ix + 0.5) * cell_size, origin.y + (c.iy + 0.5) * cell_size,
            slab_z_center};
  }

  /// Closed 3D box of one cell.
  Aabb cell_box(CellIndex c) const {
    return {{origin.x + c.ix * cell_size, origin.y + c.iy * cell_size,
             slab_z_center - slab_z_halfwidth},
            {origin.x + (c.ix + 1) * cell_size, origin.y + (c.iy + 1) * cell_size,
             slab_z_center + slab_z_halfwidth}};
  }

  /// Grid tiling the horizontal extent of `bounds`. Cell counts round up so
  /// the grid never undershoots the footprint.
  static CellGrid covering(const Aabb& bounds, double cell_size, double slab_z_center,
                           double slab_z_halfwidth) {
    CellGrid g;
    g.origin = {bounds.lo.x, bounds.lo.y};
    g.cell_size = cell_size;
    g.nx = static_cast<int>(std::ceil((bounds.hi.x - bounds.lo.x) / cell_size - 1e-9));
    g.ny = static_cast<int>(std::ceil((bounds.hi.y - bounds.lo.y) / cell_size - 1e-9));
    g.nx = std::max(g.nx, 1);
    g.ny = std::max(g.ny, 1);
    g.slab_z_center = slab_z_center;
    g.slab_z_halfwidth = slab_z_halfwidth;
    return g;
  }
};

namespace detail {

/// Clips segment parameter range [t0, t1] against lo <= o + t*d <= hi.
/// Returns false when the interval empties. Closed on both sides.
inline bool clip_axis(double o, double d, double lo, double hi, double& t0, double& t1) {
  if (d == 0.0) return o >= lo && o <= hi;
  const double inv = 1.0 / d;
  double ta = (lo - o) * inv;
  double tb = (hi - o) * inv;
  if (ta > tb) std::swap(ta, tb);
  t0 = std::max(t0, ta);
  t1 = std::min(t1, tb);
  return t0 <= t1;
}

/// Appends the cells a single segment crosses. 2D incremental traversal in
/// the segment parameter after clipping to the slab and the grid footprint.
inline void segment_cells(Vec3 a, Vec3 b, const CellGrid& grid,
                          std::vector<int>& out) {
  const Vec3 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  if (!clip_axis(a.z, d.z, grid.slab_z_center - grid.slab_z_halfwidth,
                 grid.slab_z_center + grid.slab_z_halfwidth, t0, t1)) {
    return;
  }
  const double gx1 = grid.origin.x + grid.nx * grid.cell_size;
  const double gy1 = grid.origin.y + grid.ny * grid.cell_size;
  if (!clip_axis(a.x, d.x, grid.origin.x, gx1, t0, t1)) return;
  if (!clip_axis(a.y, d.y, grid.origin.y, gy1, t0, t1)) return;

  const double sx = (a.x + t0 * d.x - grid.origin.x) / grid.cell_size;
  const double sy = (a.y + t0 * d.y - grid.origin.y) / grid.cell_size;
  int ix = std::clamp(static_cast<int>(std::floor(sx)), 0, grid.nx - 1);
  int iy = std::clamp(static_cast<int>(std::floor(sy)), 0, grid.ny - 1);

  const int step_x = d.x > 0.0 ? 1 : d.x < 0.0 ? -1 : 0;
  const int step_y = d.y > 0.0 ? 1 : d.y < 0.0 ? -1 : 0;

  // Segment parameter at the next x / y cell boundary, and per-cell stride.
  double tmax_x, tmax_y, tdelta_x, tdelta_y;
  if (step_x != 0) {
    const double next_x = grid.origin.x + (ix + (step_x > 0 ? 1 : 0)) * grid.cell_size;
    tmax_x = (next_x - a.x) / d.x;
    tdelta_x = grid.cell_size / std::abs(d.x);
  } else {
    tmax_x = std::numeric_limits<double>::infinity();
    tdelta_x = std::numeric_limits<double>::infinity();
  }
  if (step_y != 0) {
    const double next_y = grid.origin.y + (iy + (step_y > 0 ? 1 : 0)) * grid.cell_size;
    tmax_y = (next_y - a.y) / d.y;
    tdelta_y = grid.cell_size / std::abs(d.y);
  } else {
    tmax_y = std::numeric_limits<double>::infinity();
    tdelta_y = std::numeric_limits<double>::infinity();
  }

  const int max_steps = grid.nx + grid.ny + 4;  // hard guard against FP stalls
  for (int step = 0; step < max_steps; ++step) {
    out.push_back(iy * grid.nx + ix);
    if (tmax_x <= tmax_y) {
      if (tmax_x > t1) break;
      ix += step_x;
      if (ix < 0 || ix >= grid.nx) break;
      tmax_x += tdelta_x;
    } else {
      if (tmax_y > t1) break;
      iy += step_y;
      if (iy < 0 || iy >= grid.ny) break;
      tmax_y += tdelta_y;
    }
  }
}

}  // namespace detail

/// Every cell whose closed box is touched by any segment of the path.
/// Returned as sorted unique linear indices (iy * nx + ix).
inline std::vector<int> cells_crossed(const RayPath& path, const CellGrid& grid) {
  std::vector<int> cells;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    detail::segment_cells(path.vertices[i], path.vertices[i + 1], grid, cells);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

}  // namespace raypos
