#pragma once

// Immutable triangle scene with a BVH built at construction. The nearest-hit
// query is the only spatial operation the rest of the library needs.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "raypos/errors.hpp"
#include "raypos/geometry.hpp"

namespace raypos {

namespace detail {

struct BvhNode {
  Aabb bounds;
  // Leaf: first/count index into the ordering array. Inner: children.
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t first = 0;
  std::uint32_t count = 0;  // nonzero marks a leaf
};

}  // namespace detail

class Scene {
 public:
  Scene() = default;

  explicit Scene(std::vector<Triangle> triangles)
      : triangles_(std::move(triangles)) {
    for (const Triangle& t : triangles_) bounds_.expand(t.bounds());
    build_bvh();
  }

  /// Authored bounds override the triangle hull. Used for open scenes where
  /// the walkable volume extends past the geometry.
  Scene(std::vector<Triangle> triangles, const Aabb& bounds)
      : triangles_(std::move(triangles)), bounds_(bounds) {
    build_bvh();
  }

  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Aabb& bounds() const { return bounds_; }
  bool empty() const { return triangles_.empty(); }

  /// Nearest intersection with t in (t_min, t_max). The returned normal is
  /// the triangle normal flipped, if needed, to oppose the ray direction.
  std::optional<Hit> intersect(const Ray& ray, double t_min = kHitEpsilon,
                               double t_max = std::numeric_limits<double>::infinity()) const {
    if (triangles_.empty()) return std::nullopt;

    double best_t = t_max;
    std::size_t best_idx = triangles_.size();

    // Explicit stack; nodes are pruned against the best hit so far.
    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      const detail::BvhNode& node = nodes_[stack[--sp]];
      if (!intersect_aabb(ray, node.bounds, t_min, best_t)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = 0; i < node.count; ++i) {
          const std::uint32_t tri_idx = order_[node.first + i];
          if (auto t = intersect_triangle(ray, triangles_[tri_idx], t_min, best_t)) {
            best_t = *t;
            best_idx = tri_idx;
          }
        }
      } else {
        stack[sp++] = node.left;
        stack[sp++] = node.right;
      }
    }

    if (best_idx == triangles_.size()) return std::nullopt;
    Hit hit;
    hit.t = best_t;
    hit.point = ray.origin + best_t * ray.direction;
    hit.triangle_index = best_idx;
    const Vec3 n = triangles_[best_idx].normal;
    hit.normal = dot(n, ray.direction) < 0.0 ? n : -n;
    return hit;
  }

 private:
  void build_bvh() {
    if (triangles_.empty()) return;
    order_.resize(triangles_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.reserve(triangles_.size());
    for (const Triangle& t : triangles_) centroids_.push_back(t.centroid());
    nodes_.reserve(2 * triangles_.size());
    build_node(0, static_cast<std::uint32_t>(order_.size()));
    centroids_.clear();
    centroids_.shrink_to_fit();
  }

  std::uint32_t build_node(std::uint32_t first, std::uint32_t count) {
    const std::uint32_t index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb bounds;
    for (std::uint32_t i = 0; i < count; ++i) {
      bounds.expand(triangles_[order_[first + i]].bounds());
    }
    nodes_[index].bounds = bounds;

    if (count <= kLeafSize) {
      nodes_[index].first = first;
      nodes_[index].count = count;
      return index;
    }

    // Median split along the longest extent of the centroid bounds.
    Aabb cb;
    for (std::uint32_t i = 0; i < count; ++i) cb.expand(centroids_[order_[first + i]]);
    const Vec3 ext = cb.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > (axis == 0 ? ext.x : ext.y)) axis = 2;

    const std::uint32_t mid = first + count / 2;
    auto key = [&](std::uint32_t idx) {
      const Vec3& c = centroids_[idx];
      return axis == 0 ? c.x : axis == 1 ? c.y : c.z;
    };
    std::nth_element(order_.begin() + first, order_.begin() + mid,
                     order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });

    const std::uint32_t left = build_node(first, mid - first);
    const std::uint32_t right = build_node(mid, first + count - mid);
    nodes_[index].left = left;
    nodes_[index].right = right;
    nodes_[index].count = 0;
    return index;
  }

  static constexpr std::uint32_t kLeafSize = 4;

  std::vector<Triangle> triangles_;
  Aabb bounds_;
  std::vector<detail::BvhNode> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;  // build scratch
};

/// Appends the 12 triangles of an axis-aligned box with outward winding.
inline void append_box(std::vector<Triangle>& out, Vec3 lo, Vec3 hi) {
  const Vec3 p000{lo.x, lo.y, lo.z}, p100{hi.x, lo.y, lo.z};
  const Vec3 p010{lo.x, hi.y, lo.z}, p110{hi.x, hi.y, lo.z};
  const Vec3 p001{lo.x, lo.y, hi.z}, p101{hi.x, lo.y, hi.z};
  const Vec3 p011{lo.x, hi.y, hi.z}, p111{hi.x, hi.y, hi.z};
  // -z
  out.emplace_back(p000, p110, p100);
  out.emplace_back(p000, p010, p110);
  // +z
  out.emplace_back(p001, p101, p111);
  out.emplace_back(p001, p111, p011);
  // -y
  out.emplace_back(p000, p100, p101);
  out.emplace_back(p000, p101, p001);
  // +y
  out.emplace_back(p010, p111, p110);
  out.emplace_back(p010, p011, p111);
  // -x
  out.emplace_back(p000, p001, p011);
  out.emplace_back(p000, p011, p010);
  // +x
  out.emplace_back(p100, p110, p111);
  out.emplace_back(p100, p111, p101);
}

/// Same 12 triangles with inward winding, for room shells viewed from inside.
inline void append_box_inward(std::vector<Triangle>& out, Vec3 lo, Vec3 hi) {
  std::vector<Triangle> tmp;
  append_box(tmp, lo, hi);
  for (const Triangle& t : tmp) out.emplace_back(t.v0, t.v2, t.v1);
}

/// Loads the `v`/`f` subset of Wavefront OBJ text. Faces are triangles with
/// 1-based vertex indices; `#` starts a comment line; blank lines skipped.
/// Anything else is an error with a line number.
inline Scene load_scene(std::istream& in, const std::string& name = "<stream>") {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& what) {
    throw SceneLoadError(name + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;  // blank
    if (tag[0] == '#') continue;

    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("vertex needs three coordinates");
      std::string extra;
      if (ls >> extra) fail("unexpected token after vertex: '" + extra + "'");
      vertices.push_back({x, y, z});
    } else if (tag == "f") {
      long long i, j, k;
      if (!(ls >> i >> j >> k)) fail("face needs three vertex indices");
      std::string extra;
      if (ls >> extra) fail("unexpected token after face: '" + extra + "'");
      auto resolve = [&](long long idx) -> std::size_t {
        if (idx < 1 || static_cast<std::size_t>(idx) > vertices.size()) {
          fail("face index " + std::to_string(idx) + " out of range (have " +
               std::to_string(vertices.size()) + " vertices)");
        }
        return static_cast<std::size_t>(idx - 1);
      };
      const Vec3 a = vertices[resolve(i)];
      const Vec3 b = vertices[resolve(j)];
      const Vec3 c = vertices[resolve(k)];
      try {
        triangles.emplace_back(a, b, c);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    } else {
      fail("unknown directive '" + tag + "'");
    }
  }

  if (triangles.empty()) fail("scene has no faces");
  return Scene(std::move(triangles));
}

inline Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path);
  return load_scene(in, path);
}

/// Writes the scene back out in the same `v`/`f` subset. Vertices are not
/// deduplicated; three per face keeps the writer trivial and lossless.
inline void save_scene(std::ostream& out, const Scene& scene) {
  out << "# " << scene.triangles().size() << " faces\n";
  char buf[3 * 32];
  for (const Triangle& t : scene.triangles()) {
    for (const Vec3& v : {t.v0, t.v1, t.v2}) {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
      out << buf;
    }
  }
  for (std::size_t i = 0; i < scene.triangles().size(); ++i) {
    out << "f " << 3 * i + 1 << ' ' << 3 * i + 2 << ' ' << 3 * i + 3 << '\n';
  }
}

inline void save_scene_file(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  save_scene(out, scene);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace raypos
