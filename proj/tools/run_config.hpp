#pragma once

// JSON run configuration for the CLI. Strict schema: unknown keys are
// rejected, every value is type-checked, all angles arrive in degrees.
// Relative paths resolve against the config file's directory; the echoed
// effective config carries absolute paths so re-running it from anywhere
// reproduces the results.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "raypos/raypos.hpp"

namespace rayposcli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scene_path;        // absolute
  std::string calibration_path;  // absolute, empty = compute on the fly
  std::vector<raypos::BaseStation> bs;
  std::vector<double> bs_sigmas_deg;   // per-BS, for locate
  double probe_bin_width_deg = 1.0;    // user unit, echoed verbatim
  raypos::CampaignConfig campaign;
};

namespace detail {

using nlohmann::json;

inline void require_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

inline double get_number(const json& obj, const std::string& key, double fallback,
                         const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

inline std::int64_t get_int(const json& obj, const std::string& key, std::int64_t fallback,
                            const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return obj[key].get<std::int64_t>();
}

inline bool get_bool(const json& obj, const std::string& key, bool fallback,
                     const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root,
                                  const std::filesystem::path& base_dir) {
  using detail::get_bool;
  using detail::get_int;
  using detail::get_number;
  using nlohmann::json;

  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  detail::require_keys(root,
                       {"scene", "bs", "grid", "rays_per_bs", "max_bounces", "sigmas_deg",
                        "positions", "realizations", "algos", "seed", "probe",
                        "perturb_elevation", "benchmark_cone_scale", "calibration"},
                       "config");

  RunConfig cfg;

  if (!root.contains("scene") || !root["scene"].is_string()) {
    throw ConfigError("config.scene: required, a file path string");
  }
  cfg.scene_path =
      std::filesystem::absolute(base_dir / root["scene"].get<std::string>()).string();

  if (root.contains("calibration")) {
    if (!root["calibration"].is_string()) {
      throw ConfigError("config.calibration: expected a file path string");
    }
    cfg.calibration_path =
        std::filesystem::absolute(base_dir / root["calibration"].get<std::string>())
            .string();
  }

  if (!root.contains("bs") || !root["bs"].is_array() || root["bs"].empty()) {
    throw ConfigError("config.bs: required, a non-empty array of stations");
  }
  int index = 0;
  for (const json& b : root["bs"]) {
    const std::string where = "config.bs[" + std::to_string(index) + "]";
    if (!b.is_object()) throw ConfigError(where + ": expected an object");
    detail::require_keys(b, {"x", "y", "z", "sigma_deg", "capture_radius"}, where);
    for (const char* k : {"x", "y", "z"}) {
      if (!b.contains(k)) throw ConfigError(where + ": missing '" + k + "'");
    }
    raypos::BaseStation bs;
    bs.position = {get_number(b, "x", 0.0, where), get_number(b, "y", 0.0, where),
                   get_number(b, "z", 0.0, where)};
    bs.capture_radius =
        get_number(b, "capture_radius", raypos::kDefaultCaptureRadius, where);
    if (bs.capture_radius <= 0.0) throw ConfigError(where + ".capture_radius: must be > 0");
    const double sigma_deg = get_number(b, "sigma_deg", 0.0, where);
    if (sigma_deg < 0.0) throw ConfigError(where + ".sigma_deg: must be >= 0");
    bs.sigma = raypos::deg2rad(sigma_deg);
    bs.index = index++;
    cfg.bs.push_back(bs);
    cfg.bs_sigmas_deg.push_back(sigma_deg);
  }

  raypos::CampaignConfig& c = cfg.campaign;

  if (root.contains("grid")) {
    const json& g = root["grid"];
    if (!g.is_object()) throw ConfigError("config.grid: expected an object");
    detail::require_keys(g, {"cell_size", "slab_z_halfwidth"}, "config.grid");
    c.cell_size = get_number(g, "cell_size", c.cell_size, "config.grid");
    c.slab_z_halfwidth =
        get_number(g, "slab_z_halfwidth", c.slab_z_halfwidth, "config.grid");
    if (c.cell_size <= 0.0) throw ConfigError("config.grid.cell_size: must be > 0");
    if (c.slab_z_halfwidth <= 0.0) {
      throw ConfigError("config.grid.slab_z_halfwidth: must be > 0");
    }
  }

  if (root.contains("rays_per_bs")) {
    if (!root["rays_per_bs"].is_array() || root["rays_per_bs"].empty()) {
      throw ConfigError("config.rays_per_bs: expected a non-empty integer array");
    }
    c.rays_per_bs.clear();
    for (const json& v : root["rays_per_bs"]) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw ConfigError("config.rays_per_bs: entries must be integers >= 1");
      }
      c.rays_per_bs.push_back(static_cast<int>(v.get<std::int64_t>()));
    }
  }

  if (root.contains("sigmas_deg")) {
    if (!root["sigmas_deg"].is_array() || root["sigmas_deg"].empty()) {
      throw ConfigError("config.sigmas_deg: expected a non-empty number array");
    }
    c.sigmas_deg.clear();
    for (const json& v : root["sigmas_deg"]) {
      if (!v.is_number() || v.get<double>() < 0.0) {
        throw ConfigError("config.sigmas_deg: entries must be numbers >= 0");
      }
      c.sigmas_deg.push_back(v.get<double>());
    }
  }

  if (root.contains("algos")) {
    if (!root["algos"].is_array() || root["algos"].empty()) {
      throw ConfigError("config.algos: expected a non-empty string array");
    }
    c.algos.clear();
    for (const json& v : root["algos"]) {
      if (!v.is_string()) throw ConfigError("config.algos: entries must be strings");
      const auto algo = raypos::parse_algo(v.get<std::string>());
      if (!algo) {
        throw ConfigError("config.algos: unknown algorithm '" + v.get<std::string>() +
                          "' (expected mc, uniform, or benchmark)");
      }
      c.algos.push_back(*algo);
    }
  }

  if (root.contains("positions")) {
    const json& p = root["positions"];
    if (!p.is_object()) throw ConfigError("config.positions: expected an object");
    detail::require_keys(p, {"count", "clearance", "z"}, "config.positions");
    c.n_positions =
        static_cast<int>(get_int(p, "count", c.n_positions, "config.positions"));
    c.clearance = get_number(p, "clearance", c.clearance, "config.positions");
    c.ue_z = get_number(p, "z", c.ue_z, "config.positions");
    if (c.n_positions < 1) throw ConfigError("config.positions.count: must be >= 1");
    if (c.clearance < 0.0) throw ConfigError("config.positions.clearance: must be >= 0");
  }

  c.n_realizations =
      static_cast<int>(get_int(root, "realizations", c.n_realizations, "config"));
  if (c.n_realizations < 1) throw ConfigError("config.realizations: must be >= 1");

  c.max_bounces = static_cast<int>(get_int(root, "max_bounces", c.max_bounces, "config"));
  if (c.max_bounces < 0) throw ConfigError("config.max_bounces: must be >= 0");

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer()) {
      throw ConfigError("config.seed: expected an unsigned integer");
    }
    c.master_seed = root["seed"].get<std::uint64_t>();
  }

  if (root.contains("probe")) {
    const json& p = root["probe"];
    if (!p.is_object()) throw ConfigError("config.probe: expected an object");
    detail::require_keys(
        p, {"n_rays", "bin_width_deg", "sin_elevation_lo", "sin_elevation_hi"},
        "config.probe");
    c.probe.n_probe_rays =
        static_cast<int>(get_int(p, "n_rays", c.probe.n_probe_rays, "config.probe"));
    cfg.probe_bin_width_deg =
        get_number(p, "bin_width_deg", cfg.probe_bin_width_deg, "config.probe");
    c.probe.bin_width = raypos::deg2rad(cfg.probe_bin_width_deg);
    c.probe.sin_elevation_lo =
        get_number(p, "sin_elevation_lo", c.probe.sin_elevation_lo, "config.probe");
    c.probe.sin_elevation_hi =
        get_number(p, "sin_elevation_hi", c.probe.sin_elevation_hi, "config.probe");
    if (c.probe.n_probe_rays < 1) throw ConfigError("config.probe.n_rays: must be >= 1");
    if (c.probe.bin_width <= 0.0) {
      throw ConfigError("config.probe.bin_width_deg: must be > 0");
    }
    if (c.probe.sin_elevation_lo < -1.0 || c.probe.sin_elevation_hi > 1.0 ||
        c.probe.sin_elevation_lo >= c.probe.sin_elevation_hi) {
      throw ConfigError("config.probe: sin elevation band must satisfy -1 <= lo < hi <= 1");
    }
  }
  c.probe.max_bounces = c.max_bounces;

  c.perturb_elevation = get_bool(root, "perturb_elevation", c.perturb_elevation, "config");
  c.benchmark_cone_scale =
      get_number(root, "benchmark_cone_scale", c.benchmark_cone_scale, "config");
  if (c.benchmark_cone_scale <= 0.0) {
    throw ConfigError("config.benchmark_cone_scale: must be > 0");
  }

  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw raypos::IoError("cannot open config: " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(root, std::filesystem::path(path).parent_path());
}

/// Effective config (defaults applied, paths absolute, seed final). Feeding
/// this back through --config reproduces the run.
inline nlohmann::ordered_json effective_config(const RunConfig& cfg) {
  nlohmann::ordered_json out;
  out["scene"] = cfg.scene_path;
  if (!cfg.calibration_path.empty()) out["calibration"] = cfg.calibration_path;
  out["bs"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.bs.size(); ++i) {
    nlohmann::ordered_json b;
    b["x"] = cfg.bs[i].position.x;
    b["y"] = cfg.bs[i].position.y;
    b["z"] = cfg.bs[i].position.z;
    b["sigma_deg"] = cfg.bs_sigmas_deg[i];
    b["capture_radius"] = cfg.bs[i].capture_radius;
    out["bs"].push_back(b);
  }
  const raypos::CampaignConfig& c = cfg.campaign;
  out["grid"] = {{"cell_size", c.cell_size}, {"slab_z_halfwidth", c.slab_z_halfwidth}};
  out["rays_per_bs"] = c.rays_per_bs;
  out["max_bounces"] = c.max_bounces;
  out["sigmas_deg"] = c.sigmas_deg;
  out["positions"] = {
      {"count", c.n_positions}, {"clearance", c.clearance}, {"z", c.ue_z}};
  out["realizations"] = c.n_realizations;
  out["algos"] = nlohmann::ordered_json::array();
  for (raypos::Algo a : c.algos) out["algos"].push_back(raypos::to_string(a));
  out["seed"] = c.master_seed;
  out["probe"] = {{"n_rays", c.probe.n_probe_rays},
                  {"bin_width_deg", cfg.probe_bin_width_deg},
                  {"sin_elevation_lo", c.probe.sin_elevation_lo},
                  {"sin_elevation_hi", c.probe.sin_elevation_hi}};
  out["perturb_elevation"] = c.perturb_elevation;
  out["benchmark_cone_scale"] = c.benchmark_cone_scale;
  return out;
}

}  // namespace rayposcli
