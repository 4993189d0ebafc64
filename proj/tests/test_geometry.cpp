#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "raypos/geometry.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"

using namespace raypos;

namespace {

Vec3 random_unit(Rng& rng) {
  // Rejection from the cube; fine for tests.
  while (true) {
    const Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double n2 = norm_squared(v);
    if (n2 > 1e-4 && n2 <= 1.0) return normalized(v);
  }
}

std::vector<Triangle> random_triangles(Rng& rng, int count, double extent) {
  std::vector<Triangle> tris;
  while (static_cast<int>(tris.size()) < count) {
    const Vec3 a{rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                 rng.uniform(-extent, extent)};
    const Vec3 b = a + Vec3{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0)};
    const Vec3 c = a + Vec3{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0)};
    try {
      tris.emplace_back(a, b, c);
    } catch (const std::invalid_argument&) {
      // degenerate draw, retry
    }
  }
  return tris;
}

}  // namespace

TEST_CASE("vector basics") {
  const Vec3 a{1.0, 2.0, 3.0}, b{-4.0, 0.5, 2.0};
  CHECK(dot(a, b) == Catch::Approx(-4.0 + 1.0 + 6.0));
  const Vec3 c = cross(a, b);
  CHECK(dot(c, a) == Catch::Approx(0.0).margin(1e-12));
  CHECK(dot(c, b) == Catch::Approx(0.0).margin(1e-12));
  CHECK(norm(normalized(a)) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reflect head-on retroreflection") {
  const Vec3 r = reflect({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0});
  CHECK(r.x == Catch::Approx(-1.0));
  CHECK(r.y == Catch::Approx(0.0).margin(1e-15));
  CHECK(r.z == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("reflect mirrors across a horizontal plane") {
  const double s = std::sqrt(2.0) / 2.0;
  const Vec3 r = reflect({s, -s, 0.0}, {0.0, 1.0, 0.0});
  CHECK(r.x == Catch::Approx(s).epsilon(1e-12));
  CHECK(r.y == Catch::Approx(s).epsilon(1e-12));
  CHECK(r.z == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("reflect properties over random inputs") {
  Rng rng(101);
  for (int i = 0; i < 20000; ++i) {
    const Vec3 d = random_unit(rng);
    const Vec3 n = random_unit(rng);
    const Vec3 r = reflect(d, n);
    CHECK(std::abs(norm(r) - 1.0) < 1e-12);
    // incidence angle equals reflection angle, with flipped sign
    CHECK(std::abs(dot(d, n) + dot(r, n)) < 1e-12);
    // involution
    const Vec3 back = reflect(r, n);
    CHECK(std::abs(back.x - d.x) < 1e-12);
    CHECK(std::abs(back.y - d.y) < 1e-12);
    CHECK(std::abs(back.z - d.z) < 1e-12);
    // tangential component is preserved
    const Vec3 dt = d - dot(d, n) * n;
    const Vec3 rt = r - dot(r, n) * n;
    CHECK(norm(dt - rt) < 1e-12);
  }
}

TEST_CASE("ray hits a wall spanning the plane x=5") {
  std::vector<Triangle> tris;
  tris.emplace_back(Vec3{5.0, -10.0, -10.0}, Vec3{5.0, 10.0, -10.0}, Vec3{5.0, 10.0, 10.0});
  tris.emplace_back(Vec3{5.0, -10.0, -10.0}, Vec3{5.0, 10.0, 10.0}, Vec3{5.0, -10.0, 10.0});
  const Scene scene(std::move(tris));

  const auto hit = scene.intersect({{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  REQUIRE(hit.has_value());
  CHECK(hit->t == Catch::Approx(5.0).epsilon(1e-12));
  CHECK(hit->point.x == Catch::Approx(5.0));
  CHECK(hit->point.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(hit->point.z == Catch::Approx(0.0).margin(1e-12));
  // normal faces the incoming ray regardless of winding
  CHECK(hit->normal.x == Catch::Approx(-1.0).epsilon(1e-12));

  // pointing away: no hit
  CHECK_FALSE(scene.intersect({{0.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}}).has_value());
}

TEST_CASE("hit point satisfies the ray equation") {
  Rng rng(77);
  const std::vector<Triangle> tris = random_triangles(rng, 60, 6.0);
  const Scene scene{std::vector<Triangle>(tris)};
  for (int i = 0; i < 500; ++i) {
    const Ray ray{{rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0)},
                  random_unit(rng)};
    if (const auto hit = scene.intersect(ray)) {
      const Vec3 expect = ray.origin + hit->t * ray.direction;
      CHECK(distance(expect, hit->point) < 1e-7);
      CHECK(std::abs(norm(hit->normal) - 1.0) < 1e-9);
      CHECK(dot(hit->normal, ray.direction) <= 0.0);
    }
  }
}

TEST_CASE("nearest hit matches brute-force scan on random scenes") {
  Rng rng(2024);
  for (int s = 0; s < 5; ++s) {
    const std::vector<Triangle> tris = random_triangles(rng, 100, 8.0);
    const Scene scene{std::vector<Triangle>(tris)};
    int hits = 0;
    for (int i = 0; i < 300; ++i) {
      // Aim at the populated region so a healthy share of rays hit.
      const Vec3 origin{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                        rng.uniform(-10.0, 10.0)};
      const Vec3 target{rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0),
                        rng.uniform(-6.0, 6.0)};
      const Ray ray{origin, normalized(target - origin)};
      const auto fast = scene.intersect(ray);
      const auto slow = oracles::brute_force_intersect(
          ray, tris, kHitEpsilon, std::numeric_limits<double>::infinity());
      REQUIRE(fast.has_value() == slow.has_value());
      if (fast) {
        ++hits;
        CHECK(fast->triangle_index == slow->index);
        CHECK(fast->t == Catch::Approx(slow->t).margin(1e-9));
      }
    }
    CHECK(hits > 50);  // the comparison must actually exercise hits
  }
}

TEST_CASE("intersect is translation-equivariant") {
  Rng rng(31);
  const std::vector<Triangle> tris = random_triangles(rng, 40, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 shift{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                     rng.uniform(-50.0, 50.0)};
    std::vector<Triangle> moved;
    for (const Triangle& t : tris) {
      moved.emplace_back(t.v0 + shift, t.v1 + shift, t.v2 + shift);
    }
    const Ray ray{{rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)},
                  random_unit(rng)};
    const Scene a{std::vector<Triangle>(tris)};
    const Scene b{std::move(moved)};
    const auto ha = a.intersect(ray);
    const auto hb = b.intersect({ray.origin + shift, ray.direction});
    REQUIRE(ha.has_value() == hb.has_value());
    if (ha) CHECK(ha->t == Catch::Approx(hb->t).margin(1e-9));
  }
}

TEST_CASE("degenerate triangles are rejected") {
  CHECK_THROWS_AS(Triangle({0, 0, 0}, {1, 1, 1}, {2, 2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Triangle({0, 0, 0}, {1, 0, 0}, {2, 0, 0}), std::invalid_argument);
  // sliver just above the area threshold survives
  CHECK_NOTHROW(Triangle({0, 0, 0}, {1, 0, 0}, {0.5, 1e-4, 0}));
}

TEST_CASE("triangle normal is unit and winding-derived") {
  const Triangle t({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  CHECK(t.normal.z == Catch::Approx(1.0).epsilon(1e-12));
  const Triangle flipped({0, 0, 0}, {0, 1, 0}, {1, 0, 0});
  CHECK(flipped.normal.z == Catch::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("aabb expand, contains, inflate") {
  Aabb box;
  CHECK(box.empty());
  box.expand(Vec3{1.0, 2.0, 3.0});
  box.expand(Vec3{-1.0, 0.0, 5.0});
  CHECK_FALSE(box.empty());
  CHECK(box.contains({0.0, 1.0, 4.0}));
  CHECK_FALSE(box.contains({0.0, 1.0, 5.1}));
  CHECK(box.inflated(0.2).contains({0.0, 1.0, 5.1}));
  CHECK(box.extent().z == Catch::Approx(2.0));
}

TEST_CASE("point-segment distance") {
  double t = -1.0;
  CHECK(point_segment_distance({0, 1, 0}, {-1, 0, 0}, {1, 0, 0}, &t) == Catch::Approx(1.0));
  CHECK(t == Catch::Approx(0.5));
  CHECK(point_segment_distance({5, 0, 0}, {-1, 0, 0}, {1, 0, 0}, &t) == Catch::Approx(4.0));
  CHECK(t == Catch::Approx(1.0));
  // degenerate segment
  CHECK(point_segment_distance({3, 4, 0}, {0, 0, 0}, {0, 0, 0}) == Catch::Approx(5.0));
}

TEST_CASE("point-triangle distance") {
  const Triangle t({0, 0, 0}, {4, 0, 0}, {0, 4, 0});
  CHECK(point_triangle_distance({1, 1, 2}, t) == Catch::Approx(2.0));   // face region
  CHECK(point_triangle_distance({-1, -1, 0}, t) == Catch::Approx(std::sqrt(2.0)));
  CHECK(point_triangle_distance({5, 0, 0}, t) == Catch::Approx(1.0));   // past a vertex
  CHECK(point_triangle_distance({2, -3, 0}, t) == Catch::Approx(3.0));  // edge region

  // distance is never larger than the distance to any vertex
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p{rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6)};
    const double d = point_triangle_distance(p, t);
    CHECK(d <= distance(p, t.v0) + 1e-12);
    CHECK(d <= distance(p, t.v1) + 1e-12);
    CHECK(d <= distance(p, t.v2) + 1e-12);
    CHECK(d >= std::abs(p.z) - 1e-12);  // plane distance lower-bounds it
  }
}

TEST_CASE("scene file parsing") {
  std::istringstream in(
      "# demo\n"
      "v 0 0 0\n"
      "v 1 0 0\n"
      "v 0 1 0\n"
      "\n"
      "f 1 2 3\r\n");
  const Scene scene = load_scene(in, "demo");
  REQUIRE(scene.triangles().size() == 1);
  CHECK(scene.triangles()[0].v1.x == Catch::Approx(1.0));
  CHECK(scene.bounds().hi.y == Catch::Approx(1.0));
}

TEST_CASE("scene file errors carry line numbers") {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      load_scene(in, "bad");
      FAIL("expected SceneLoadError");
    } catch (const SceneLoadError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error("v 0 0\n", "bad:1");                             // short vertex
  expect_error("v 0 0 0 9\n", "unexpected token");              // long vertex
  expect_error("v 0 0 0\nf 1 2 3\n", "out of range");           // bad index
  expect_error("vt 0 0\n", "unknown directive");                // unsupported tag
  expect_error("v 0 0 0\n", "no faces");                        // no geometry
  expect_error("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n", "degenerate");
}

TEST_CASE("scene save/load round trip is exact") {
  Rng rng(9);
  const std::vector<Triangle> tris = random_triangles(rng, 25, 4.0);
  const Scene original{std::vector<Triangle>(tris)};
  std::stringstream buffer;
  save_scene(buffer, original);
  const Scene loaded = load_scene(buffer, "roundtrip");
  REQUIRE(loaded.triangles().size() == tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    CHECK(loaded.triangles()[i].v0.x == tris[i].v0.x);
    CHECK(loaded.triangles()[i].v1.y == tris[i].v1.y);
    CHECK(loaded.triangles()[i].v2.z == tris[i].v2.z);
  }
}

TEST_CASE("append_box makes a closed outward shell") {
  std::vector<Triangle> tris;
  append_box(tris, {0, 0, 0}, {2, 3, 4});
  REQUIRE(tris.size() == 12);
  // outward: every triangle normal points away from the box center
  const Vec3 center{1.0, 1.5, 2.0};
  for (const Triangle& t : tris) {
    CHECK(dot(t.normal, t.centroid() - center) > 0.0);
  }
  // inward variant flips all of them
  std::vector<Triangle> inner;
  append_box_inward(inner, {0, 0, 0}, {2, 3, 4});
  for (const Triangle& t : inner) {
    CHECK(dot(t.normal, t.centroid() - center) < 0.0);
  }
}
