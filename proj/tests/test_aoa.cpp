#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "raypos/aoa.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"

using namespace raypos;

TEST_CASE("azimuth pdf peaks at the mean and is symmetric") {
  AngleDistribution d;
  d.mean = {1.0, 0.0};
  d.sigma_az = deg2rad(2.0);

  const double z = std::erf(d.azimuth_truncation() / (d.sigma_az * std::numbers::sqrt2));
  const double peak = 1.0 / (d.sigma_az * std::sqrt(2.0 * std::numbers::pi)) / z;
  CHECK(d.pdf_azimuth(1.0) == Catch::Approx(peak).epsilon(1e-12));

  for (double off : {0.001, 0.01, 0.02, 0.05}) {
    CHECK(d.pdf_azimuth(1.0 + off) == Catch::Approx(d.pdf_azimuth(1.0 - off)).epsilon(1e-12));
    CHECK(d.pdf_azimuth(1.0 + off) < peak);
  }
  // outside the truncation window the density is exactly zero
  CHECK(d.pdf_azimuth(1.0 + d.azimuth_truncation() + 1e-6) == 0.0);
  CHECK(d.pdf_azimuth(1.0 - d.azimuth_truncation() - 1e-6) == 0.0);
}

TEST_CASE("azimuth pdf wraps across zero") {
  AngleDistribution d;
  d.mean = {0.02, 0.0};
  d.sigma_az = deg2rad(5.0);
  // points equidistant from the mean around the wrap evaluate identically
  CHECK(d.pdf_azimuth(kTwoPi - 0.01) == Catch::Approx(d.pdf_azimuth(0.05)).epsilon(1e-12));
  CHECK(d.pdf_azimuth(kTwoPi - 0.01) > 0.0);
}

TEST_CASE("azimuth pdf integrates to one") {
  for (double sigma_deg : {0.1, 0.5, 2.0, 5.0}) {
    AngleDistribution d;
    d.mean = {2.5, 0.0};
    d.sigma_az = deg2rad(sigma_deg);
    const double trunc = d.azimuth_truncation();
    const double mass = oracles::integrate_simpson(
        [&](double a) { return d.pdf_azimuth(a); }, d.mean.azimuth - trunc,
        d.mean.azimuth + trunc, 20000);
    CHECK(mass == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("degenerate distribution is a point mass") {
  AngleDistribution d;
  d.mean = {1.25, 0.3};
  CHECK(std::isinf(d.pdf_azimuth(1.25)));
  CHECK(d.pdf_azimuth(1.2500001) == 0.0);
  Rng rng(1);
  const LaunchAngle s = d.sample(rng);
  CHECK(s.azimuth == 1.25);
  CHECK(s.elevation == 0.3);
}

TEST_CASE("sampler matches the declared moments") {
  AngleDistribution d;
  d.mean = {3.0, 0.0};
  d.sigma_az = deg2rad(2.0);
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = d.sample(rng).azimuth;
    const double off = azimuth_difference(a, d.mean.azimuth);
    CHECK(std::abs(off) <= d.azimuth_truncation() + 1e-12);
    CHECK(a >= 0.0);
    CHECK(a < kTwoPi);
    sum += off;
    sum2 += off * off;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean) < 3.0 * d.sigma_az / std::sqrt(double(n)));
  CHECK(sd == Catch::Approx(d.sigma_az).epsilon(0.02));
}

TEST_CASE("sampler wraps low azimuths into range") {
  AngleDistribution d;
  d.mean = {0.01, 0.0};
  d.sigma_az = deg2rad(5.0);
  Rng rng(7);
  bool wrapped = false;
  for (int i = 0; i < 5000; ++i) {
    const double a = d.sample(rng).azimuth;
    CHECK(a >= 0.0);
    CHECK(a < kTwoPi);
    if (a > std::numbers::pi) wrapped = true;  // came from a negative draw
  }
  CHECK(wrapped);
}

TEST_CASE("elevation sampling stays on the sphere") {
  AngleDistribution d;
  d.mean = {1.0, 1.5};  // close to straight up
  d.sigma_az = deg2rad(1.0);
  d.sigma_el = deg2rad(30.0);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    CHECK(std::abs(d.sample(rng).elevation) <= 0.5 * std::numbers::pi);
  }
}

TEST_CASE("measurements are reproducible and keep elevation by default") {
  BaseStation bs;
  bs.position = {0, 0, 2};
  bs.sigma = deg2rad(1.0);
  bs.index = 3;
  const LaunchAngle truth{0.8, 0.1};

  Rng a(99), b(99);
  const Measurement m1 = sample_measurement(truth, bs, a);
  const Measurement m2 = sample_measurement(truth, bs, b);
  CHECK(m1.y.azimuth == m2.y.azimuth);
  CHECK(m1.bs_index == 3);
  CHECK(m1.y.elevation == truth.elevation);
  CHECK(m1.y.azimuth != truth.azimuth);  // noise actually applied

  // zero sigma is exact
  bs.sigma = 0.0;
  Rng c(1);
  CHECK(sample_measurement(truth, bs, c).y.azimuth == truth.azimuth);
}

TEST_CASE("posterior centers on the measurement with the channel sigma") {
  BaseStation bs;
  bs.sigma = deg2rad(2.0);
  Measurement m;
  m.y = {1.1, 0.2};
  const AngleDistribution d = posterior(m, bs);
  CHECK(d.mean.azimuth == 1.1);
  CHECK(d.mean.elevation == 0.2);
  CHECK(d.sigma_az == bs.sigma);
  CHECK(d.sigma_el == 0.0);
  CHECK(posterior(m, bs, true).sigma_el == bs.sigma);
}

TEST_CASE("probe directions are deterministic and cover the band") {
  const int n = 5000;
  for (int k : {0, 1, 17, n - 1}) {
    const LaunchAngle a = detail::probe_direction(k, n, -0.5, 0.5);
    const LaunchAngle b = detail::probe_direction(k, n, -0.5, 0.5);
    CHECK(a.azimuth == b.azimuth);
    CHECK(a.elevation == b.elevation);
    CHECK(a.azimuth >= 0.0);
    CHECK(a.azimuth < kTwoPi);
    CHECK(std::abs(std::sin(a.elevation)) <= 0.5 + 1e-12);
  }
  // sin(elevation) walks the band uniformly
  CHECK(std::sin(detail::probe_direction(0, n, -0.5, 0.5).elevation) ==
        Catch::Approx(-0.5 + 0.5 / n).margin(1e-12));
  CHECK(std::sin(detail::probe_direction(n - 1, n, -0.5, 0.5).elevation) ==
        Catch::Approx(0.5 - 0.5 / n).margin(1e-12));
}

TEST_CASE("vote picks the dominant bin, ties broken by shorter travel") {
  const double width = deg2rad(1.0);
  std::vector<detail::CaptureRecord> recs;
  // three records in the bin [10, 11) degrees, two in [45, 46)
  for (int i = 0; i < 3; ++i) recs.push_back({deg2rad(10.5), 0.01, 20.0});
  for (int i = 0; i < 2; ++i) recs.push_back({deg2rad(45.2), 0.5, 1.0});
  auto winner = detail::vote(recs, width);
  REQUIRE(winner.has_value());
  CHECK(winner->azimuth == Catch::Approx(deg2rad(10.5)).margin(1e-12));
  CHECK(winner->elevation == Catch::Approx(0.01).margin(1e-12));

  // equal counts: the bin with the smaller total path length wins
  recs.push_back({deg2rad(45.8), 0.5, 1.0});
  winner = detail::vote(recs, width);
  REQUIRE(winner.has_value());
  CHECK(winner->azimuth == Catch::Approx(deg2rad(45.5)).margin(1e-12));

  CHECK_FALSE(detail::vote({}, width).has_value());
}

TEST_CASE("vote elevation follows the dominant family in the winning bin") {
  const double width = deg2rad(1.0);
  std::vector<detail::CaptureRecord> recs;
  // One azimuth bin, two bounce families 11 degrees apart in elevation: a
  // direct arrival and a longer floor detour. The mean over the whole bin
  // (-9.3 deg) matches no physical path; the estimate must stay on the
  // dominant family.
  for (int i = 0; i < 5; ++i) recs.push_back({deg2rad(30.4), deg2rad(-5.0 - 0.1 * i), 20.0});
  for (int i = 0; i < 3; ++i) recs.push_back({deg2rad(30.6), deg2rad(-16.2), 23.5});
  auto winner = detail::vote(recs, width);
  REQUIRE(winner.has_value());
  CHECK(winner->azimuth == Catch::Approx(deg2rad(30.5)).margin(1e-12));
  CHECK(winner->elevation == Catch::Approx(deg2rad(-5.2)).margin(1e-12));

  // A family straddling an elevation bin edge is averaged whole, not split.
  recs.clear();
  recs.push_back({deg2rad(30.4), deg2rad(-5.2), 20.0});
  recs.push_back({deg2rad(30.4), deg2rad(-5.1), 20.0});
  recs.push_back({deg2rad(30.4), deg2rad(-4.9), 20.0});
  recs.push_back({deg2rad(30.4), deg2rad(-4.8), 20.0});
  recs.push_back({deg2rad(30.4), deg2rad(-4.7), 20.0});
  winner = detail::vote(recs, width);
  REQUIRE(winner.has_value());
  CHECK(winner->elevation == Catch::Approx(deg2rad(-4.94)).margin(1e-12));

  // When the steeper family carries more arrivals it wins outright.
  recs.clear();
  for (int i = 0; i < 2; ++i) recs.push_back({deg2rad(30.4), deg2rad(-5.0), 20.0});
  for (int i = 0; i < 6; ++i) recs.push_back({deg2rad(30.6), deg2rad(-16.2), 23.5});
  winner = detail::vote(recs, width);
  REQUIRE(winner.has_value());
  CHECK(winner->elevation == Catch::Approx(deg2rad(-16.2)).margin(1e-12));
}

TEST_CASE("line-of-sight calibration recovers the bearing") {
  // Open scene: a lone distant triangle plus authored bounds. The bearing is
  // placed mid-bin so the vote is statistically unambiguous.
  std::vector<Triangle> tris;
  tris.emplace_back(Vec3{-4.9, -4.9, 0.0}, Vec3{-4.7, -4.9, 0.0}, Vec3{-4.8, -4.9, 0.2});
  const Scene scene(std::move(tris), Aabb{{-5, -5, -1}, {12, 12, 4}});

  const double bearing = deg2rad(45.5);
  const Vec3 bs_pos{0.0, 0.0, 1.0};
  const Vec3 ue = bs_pos + 10.0 * Vec3{std::cos(bearing), std::sin(bearing), 0.0};

  BaseStation bs;
  bs.position = bs_pos;
  ProbeParams params;
  params.n_probe_rays = 150000;
  params.sin_elevation_lo = -0.2;
  params.sin_elevation_hi = 0.2;

  const auto aoa = establish_true_aoa_all(scene, ue, {bs}, params)[0];
  REQUIRE(aoa.has_value());
  // the winning bin must be the one containing the true bearing
  CHECK(std::abs(azimuth_difference(aoa->azimuth, bearing)) < 0.5 * params.bin_width + 1e-12);
  CHECK(std::abs(aoa->elevation) < 0.02);

  // the result is bitwise stable across worker counts
  const auto again = establish_true_aoa_all(scene, ue, {bs}, params, 4)[0];
  REQUIRE(again.has_value());
  CHECK(again->azimuth == aoa->azimuth);
  CHECK(again->elevation == aoa->elevation);
}

TEST_CASE("a station sealed away from the transmitter is not found") {
  // UE inside a closed box; BS outside it.
  std::vector<Triangle> tris;
  append_box_inward(tris, {0, 0, 0}, {2, 2, 2});
  const Scene scene(std::move(tris), Aabb{{-5, -5, -1}, {5, 5, 5}});

  BaseStation bs;
  bs.position = {4.0, 4.0, 1.0};
  ProbeParams params;
  params.n_probe_rays = 20000;

  const auto aoa = establish_true_aoa_all(scene, {1.0, 1.0, 1.0}, {bs}, params)[0];
  CHECK_FALSE(aoa.has_value());
}

TEST_CASE("calibration table round trips and looks up") {
  CalibrationTable table;
  table.add({{1.25, 2.5, 1.0}, 0, {0.7, 0.01}, true});
  table.add({{1.25, 2.5, 1.0}, 1, {0.0, 0.0}, false});
  table.add({{3.5, 0.5, 1.0}, 0, {2.9, -0.02}, true});

  std::stringstream buffer;
  table.save(buffer);
  const CalibrationTable loaded = CalibrationTable::load(buffer, "mem");
  REQUIRE(loaded.rows().size() == 3);

  const CalibrationEntry* hit = loaded.lookup({1.25, 2.5, 1.0}, 0);
  REQUIRE(hit != nullptr);
  CHECK(hit->aoa.azimuth == 0.7);
  CHECK(hit->found);

  const CalibrationEntry* miss = loaded.lookup({1.25, 2.5, 1.0}, 1);
  REQUIRE(miss != nullptr);
  CHECK_FALSE(miss->found);

  CHECK(loaded.lookup({9.0, 9.0, 9.0}, 0) == nullptr);
  CHECK(loaded.lookup({1.25, 2.5, 1.0}, 7) == nullptr);

  // unfound rows persist zeros regardless of what was stored
  CHECK(miss->aoa.azimuth == 0.0);
}

TEST_CASE("calibration table rejects malformed input") {
  auto expect_io_error = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(CalibrationTable::load(in, "bad"), IoError);
  };
  expect_io_error("");                                                   // empty
  expect_io_error("x,y,z\n");                                            // bad header
  expect_io_error("pos_x,pos_y,pos_z,bs_index,azimuth_rad,elevation_rad,found\n1,2\n");
  expect_io_error(
      "pos_x,pos_y,pos_z,bs_index,azimuth_rad,elevation_rad,found\n"
      "1,2,3,0,0.5,0.1,2\n");  // found flag out of range
  expect_io_error(
      "pos_x,pos_y,pos_z,bs_index,azimuth_rad,elevation_rad,found\n"
      "1,2,bogus,0,0.5,0.1,1\n");
}
