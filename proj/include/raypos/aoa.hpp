#pragma once

// Ground-truth AoA establishment (probe launch + azimuth binning) and the
// Gaussian measurement channel with its truncated posterior.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "raypos/detail/text.hpp"
#include "raypos/errors.hpp"
#include "raypos/parallel.hpp"
#include "raypos/ray_engine.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"

namespace raypos {

inline constexpr double kDefaultCaptureRadius = 0.15;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct BaseStation {
  Vec3 position;
  double capture_radius = kDefaultCaptureRadius;
  double sigma = 0.0;  // AoA error std dev, radians
  int index = 0;
};

struct Measurement {
  int bs_index = 0;
  LaunchAngle y;
};

/// Gaussian over angles, truncated at +-4 sigma (capped at the half-domain)
/// and renormalized. The truncation discards < 1e-4 of the mass for any
/// sigma of practical interest and keeps pdf and sampler consistent.
struct AngleDistribution {
  LaunchAngle mean;
  double sigma_az = 0.0;
  double sigma_el = 0.0;

  double azimuth_truncation() const {
    return std::min(4.0 * sigma_az, std::numbers::pi);
  }

  /// Marginal azimuth density on [0, 2pi), wrapped. Degenerate sigma gives
  /// a point mass: infinity at the mean, zero elsewhere.
  double pdf_azimuth(double az) const {
    const double d = azimuth_difference(az, mean.azimuth);
    if (sigma_az == 0.0) {
      return d == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    const double trunc = azimuth_truncation();
    if (std::abs(d) > trunc) return 0.0;
    const double z = std::erf(trunc / (sigma_az * std::numbers::sqrt2));
    const double g = std::exp(-0.5 * d * d / (sigma_az * sigma_az)) /
                     (sigma_az * std::sqrt(2.0 * std::numbers::pi));
    return g / z;
  }

  /// Draws an angle; rejection keeps it inside the truncation window so the
  /// sampler and pdf describe the same distribution.
  LaunchAngle sample(Rng& rng) const {
    LaunchAngle out = mean;
    if (sigma_az > 0.0) {
      const double trunc = azimuth_truncation();
      double a;
      do {
        a = rng.normal(mean.azimuth, sigma_az);
      } while (std::abs(a - mean.azimuth) > trunc);
      out.azimuth = wrap_azimuth(a);
    }
    if (sigma_el > 0.0) {
      const double trunc = std::min(4.0 * sigma_el, 0.5 * std::numbers::pi);
      double e;
      do {
        e = rng.normal(mean.elevation, sigma_el);
      } while (std::abs(e - mean.elevation) > trunc ||
               std::abs(e) > 0.5 * std::numbers::pi);
      out.elevation = e;
    }
    return out;
  }
};

/// Measured AoA: true angle plus wrapped Gaussian noise on the azimuth.
/// Elevation is copied unless the 3D measurement mode is on.
inline Measurement sample_measurement(const LaunchAngle& theta_true, const BaseStation& bs,
                                      Rng& rng, bool perturb_elevation = false) {
  Measurement m;
  m.bs_index = bs.index;
  m.y.azimuth = wrap_azimuth(theta_true.azimuth + rng.normal(0.0, bs.sigma));
  m.y.elevation = theta_true.elevation;
  if (perturb_elevation && bs.sigma > 0.0) {
    double e;
    do {
      e = theta_true.elevation + rng.normal(0.0, bs.sigma);
    } while (std::abs(e) > 0.5 * std::numbers::pi);
    m.y.elevation = e;
  }
  return m;
}

inline AngleDistribution posterior(const Measurement& measurement, const BaseStation& bs,
                                   bool perturb_elevation = false) {
  AngleDistribution d;
  d.mean = measurement.y;
  d.sigma_az = bs.sigma;
  d.sigma_el = perturb_elevation ? bs.sigma : 0.0;
  return d;
}

struct ProbeParams {
  int n_probe_rays = 150000;
  double bin_width = deg2rad(1.0);
  int max_bounces = 5;
  double sin_elevation_lo = -1.0;  // probe band in sin(elevation)
  double sin_elevation_hi = 1.0;
};

namespace detail {

/// k-th probe direction of an n-point deterministic low-discrepancy set:
/// golden-angle azimuth, sin(elevation) uniform over the band. Area-uniform
/// on the sphere for the full band.
inline LaunchAngle probe_direction(int k, int n, double sin_lo, double sin_hi) {
  constexpr double kGoldenFrac = 0.6180339887498949;
  const double az = wrap_azimuth(kTwoPi * std::fmod(k * kGoldenFrac, 1.0));
  const double u = (k + 0.5) / n;
  const double s = sin_lo + u * (sin_hi - sin_lo);
  return {az, std::asin(std::clamp(s, -1.0, 1.0))};
}

struct CaptureRecord {
  double azimuth = 0.0;    // arrival azimuth at the BS
  double elevation = 0.0;  // arrival elevation at the BS
  double path_length = 0.0;  // propagation length up to closest approach
};

/// Closest approach of a path to a point; fills `rec` when within radius.
inline bool capture(const RayPath& path, Vec3 bs_pos, double radius, CaptureRecord& rec) {
  double best = radius;
  std::size_t best_seg = 0;
  double best_t = 0.0;
  bool found = false;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    double t = 0.0;
    const double d = point_segment_distance(bs_pos, path.vertices[i],
                                            path.vertices[i + 1], &t);
    if (d <= best) {
      best = d;
      best_seg = i;
      best_t = t;
      found = true;
    }
  }
  if (!found) return false;

  const Vec3 a = path.vertices[best_seg];
  const Vec3 b = path.vertices[best_seg + 1];
  const LaunchAngle arrival = angles_from_direction(a - b);  // reversed travel
  rec.azimuth = arrival.azimuth;
  rec.elevation = arrival.elevation;
  double len = 0.0;
  for (std::size_t i = 0; i < best_seg; ++i) {
    len += distance(path.vertices[i], path.vertices[i + 1]);
  }
  rec.path_length = len + best_t * distance(a, b);
  return true;
}

/// Dominant-bin vote over arrival azimuths. Ties go to the bin whose rays
/// traveled the least in total. The azimuth estimate is the winning bin's
/// center. The elevation runs a second vote restricted to that bin: arrivals
/// that share an azimuth bin can still belong to different bounce families
/// (a floor or ceiling detour keeps the azimuth but sits several degrees away
/// in elevation), and averaging across families yields an angle no physical
/// path has. The estimate is the mean over the modal elevation bin plus its
/// immediate neighbours, so a family straddling a bin edge is not split.
inline std::optional<LaunchAngle> vote(const std::vector<CaptureRecord>& records,
                                       double bin_width) {
  if (records.empty()) return std::nullopt;
  // Bin count rounds 2pi/bin_width so bins tile the circle exactly; for the
  // default 1 degree this is the requested width.
  const int n_bins = std::max(1, static_cast<int>(std::round(kTwoPi / bin_width)));
  const double width = kTwoPi / n_bins;
  const auto az_bin = [&](double az) {
    return std::min(static_cast<int>(az / width), n_bins - 1);
  };

  std::vector<int> count(n_bins, 0);
  std::vector<double> total_length(n_bins, 0.0);
  for (const CaptureRecord& r : records) {
    const int b = az_bin(r.azimuth);
    ++count[b];
    total_length[b] += r.path_length;
  }

  int best = -1;
  for (int b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    if (best < 0 || count[b] > count[best] ||
        (count[b] == count[best] && total_length[b] < total_length[best])) {
      best = b;
    }
  }

  // Elevation vote inside the winning azimuth bin, same width and the same
  // tie rule (equal counts go to the shorter travel, then the lower bin).
  const int n_el = std::max(1, static_cast<int>(std::round(std::numbers::pi / width)));
  const auto el_bin = [&](double el) {
    const int b = static_cast<int>((el + 0.5 * std::numbers::pi) / width);
    return std::clamp(b, 0, n_el - 1);
  };
  std::vector<int> el_count(n_el, 0);
  std::vector<double> el_length(n_el, 0.0);
  for (const CaptureRecord& r : records) {
    if (az_bin(r.azimuth) != best) continue;
    const int b = el_bin(r.elevation);
    ++el_count[b];
    el_length[b] += r.path_length;
  }
  int best_el = -1;
  for (int b = 0; b < n_el; ++b) {
    if (el_count[b] == 0) continue;
    if (best_el < 0 || el_count[b] > el_count[best_el] ||
        (el_count[b] == el_count[best_el] && el_length[b] < el_length[best_el])) {
      best_el = b;
    }
  }
  double el_sum = 0.0;
  int el_n = 0;
  for (const CaptureRecord& r : records) {
    if (az_bin(r.azimuth) != best) continue;
    if (std::abs(el_bin(r.elevation) - best_el) > 1) continue;
    el_sum += r.elevation;
    ++el_n;
  }

  LaunchAngle out;
  out.azimuth = wrap_azimuth((best + 0.5) * width);
  out.elevation = el_sum / el_n;
  return out;
}

}  // namespace detail

/// Ground-truth AoA for every BS at once. Probe paths are traced once per
/// position and tested against all stations; deterministic by construction.
inline std::vector<std::optional<LaunchAngle>> establish_true_aoa_all(
    const Scene& scene, Vec3 ue_position, const std::vector<BaseStation>& bs_list,
    const ProbeParams& params, int workers = 1) {
  const int n = params.n_probe_rays;
  const std::size_t n_bs = bs_list.size();

  // records[ray * n_bs + bs] holds an optional capture; filled in parallel,
  // folded in ray order so the vote is independent of worker count.
  std::vector<std::optional<detail::CaptureRecord>> records(
      static_cast<std::size_t>(n) * n_bs);
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t k) {
    const LaunchAngle angle = detail::probe_direction(
        static_cast<int>(k), n, params.sin_elevation_lo, params.sin_elevation_hi);
    const RayPath path = trace(scene, ue_position, angle, params.max_bounces);
    for (std::size_t b = 0; b < n_bs; ++b) {
      detail::CaptureRecord rec;
      if (detail::capture(path, bs_list[b].position, bs_list[b].capture_radius, rec)) {
        records[k * n_bs + b] = rec;
      }
    }
  });

  std::vector<std::optional<LaunchAngle>> out(n_bs);
  std::vector<detail::CaptureRecord> per_bs;
  for (std::size_t b = 0; b < n_bs; ++b) {
    per_bs.clear();
    for (int k = 0; k < n; ++k) {
      if (records[static_cast<std::size_t>(k) * n_bs + b]) {
        per_bs.push_back(*records[static_cast<std::size_t>(k) * n_bs + b]);
      }
    }
    out[b] = detail::vote(per_bs, params.bin_width);
  }
  return out;
}

inline std::optional<LaunchAngle> establish_true_aoa(const Scene& scene, Vec3 ue_position,
                                                     const BaseStation& bs,
                                                     int n_probe_rays, double bin_width,
                                                     int max_bounces) {
  ProbeParams params;
  params.n_probe_rays = n_probe_rays;
  params.bin_width = bin_width;
  params.max_bounces = max_bounces;
  return establish_true_aoa_all(scene, ue_position, {bs}, params)[0];
}

/// Offline calibration table: one row per (UE position, BS).
struct CalibrationEntry {
  Vec3 position;
  int bs_index = 0;
  LaunchAngle aoa;
  bool found = false;
};

class CalibrationTable {
 public:
  void add(const CalibrationEntry& e) { rows_.push_back(e); }
  const std::vector<CalibrationEntry>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  /// Row for (position, bs_index); positions match within 1e-9 per axis.
  const CalibrationEntry* lookup(Vec3 position, int bs_index) const {
    constexpr double eps = 1e-9;
    for (const CalibrationEntry& e : rows_) {
      if (e.bs_index == bs_index && std::abs(e.position.x - position.x) <= eps &&
          std::abs(e.position.y - position.y) <= eps &&
          std::abs(e.position.z - position.z) <= eps) {
        return &e;
      }
    }
    return nullptr;
  }

  void save(std::ostream& out) const {
    out << "pos_x,pos_y,pos_z,bs_index,azimuth_rad,elevation_rad,found\n";
    for (const CalibrationEntry& e : rows_) {
      out << detail::fmt_double(e.position.x) << ',' << detail::fmt_double(e.position.y)
          << ',' << detail::fmt_double(e.position.z) << ',' << e.bs_index << ','
          << detail::fmt_double(e.found ? e.aoa.azimuth : 0.0) << ','
          << detail::fmt_double(e.found ? e.aoa.elevation : 0.0) << ','
          << (e.found ? 1 : 0) << '\n';
    }
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    save(out);
    if (!out) throw IoError("write failed: " + path);
  }

  static CalibrationTable load(std::istream& in, const std::string& name = "<stream>") {
    CalibrationTable table;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw IoError(name + ": empty calibration table");
    ++line_no;
    if (detail::strip_cr(line) != "pos_x,pos_y,pos_z,bs_index,azimuth_rad,elevation_rad,found") {
      throw IoError(name + ":1: bad calibration header");
    }
    while (std::getline(in, line)) {
      ++line_no;
      line = detail::strip_cr(line);
      if (line.empty()) continue;
      const auto fields = detail::split(line, ',');
      const std::string ctx = name + ":" + std::to_string(line_no);
      if (fields.size() != 7) throw IoError(ctx + ": expected 7 fields");
      CalibrationEntry e;
      e.position = {detail::parse_double(fields[0], ctx), detail::parse_double(fields[1], ctx),
                    detail::parse_double(fields[2], ctx)};
      e.bs_index = static_cast<int>(detail::parse_int(fields[3], ctx));
      e.aoa.azimuth = detail::parse_double(fields[4], ctx);
      e.aoa.elevation = detail::parse_double(fields[5], ctx);
      const long long found = detail::parse_int(fields[6], ctx);
      if (found != 0 && found != 1) throw IoError(ctx + ": found must be 0 or 1");
      e.found = found == 1;
      table.add(e);
    }
    return table;
  }

  static CalibrationTable load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration table: " + path);
    return load(in, path);
  }

 private:
  std::vector<CalibrationEntry> rows_;
};

}  // namespace raypos
