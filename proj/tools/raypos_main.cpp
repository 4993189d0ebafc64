// Command-line front end: trace, calibrate, locate, eval, gen-scene.
// Exit codes: 0 ok, 2 I/O, 3 coverage failure (locate), 4 config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "raypos/raypos.hpp"
#include "run_config.hpp"

namespace {

namespace fs = std::filesystem;
using rayposcli::ConfigError;
using rayposcli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitCoverage = 3;
constexpr int kExitConfig = 4;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

/// Exception signaling the coverage-failure exit code from `locate`.
struct CoverageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_config_or_fail(const GlobalArgs& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required for this command");
  RunConfig cfg = rayposcli::load_run_config(g.config_path);
  if (g.seed) cfg.campaign.master_seed = *g.seed;
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw raypos::IoError("cannot create output directory: " + dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw raypos::IoError("cannot open for writing: " + path.string());
  return out;
}

void write_path_csv(std::ostream& out, const raypos::RayPath& path) {
  out << "x,y,z\n";
  for (const raypos::Vec3& v : path.vertices) {
    out << raypos::detail::fmt_double(v.x) << ',' << raypos::detail::fmt_double(v.y)
        << ',' << raypos::detail::fmt_double(v.z) << '\n';
  }
}

int cmd_trace(const GlobalArgs& g, const std::string& scene_path,
              const std::vector<double>& origin, double azimuth_deg,
              double elevation_deg, int max_bounces, bool write_file) {
  const raypos::Scene scene = raypos::load_scene_file(scene_path);
  const raypos::LaunchAngle angle{raypos::wrap_azimuth(raypos::deg2rad(azimuth_deg)),
                                  raypos::deg2rad(elevation_deg)};
  raypos::RayPath path;
  try {
    path = raypos::trace(scene, {origin[0], origin[1], origin[2]}, angle, max_bounces);
  } catch (const raypos::OriginOutsideSceneError& e) {
    throw ConfigError(e.what());
  }
  write_path_csv(std::cout, path);
  if (write_file) {
    ensure_out_dir(g.out_dir);
    auto out = open_out(fs::path(g.out_dir) / "path.csv");
    write_path_csv(out, path);
  }
  return kExitOk;
}

int cmd_calibrate(const GlobalArgs& g) {
  const RunConfig cfg = load_config_or_fail(g);
  const raypos::Scene scene = raypos::load_scene_file(cfg.scene_path);
  const raypos::CampaignConfig& c = cfg.campaign;

  raypos::Rng pos_rng(raypos::stream_seed(c.master_seed, raypos::StreamKind::positions));
  const std::vector<raypos::Vec3> positions =
      raypos::sample_ue_positions(scene, c.n_positions, c.ue_z, c.clearance, pos_rng);
  const raypos::CalibrationTable table =
      raypos::calibrate_positions(scene, positions, cfg.bs, c.probe, g.workers);

  ensure_out_dir(g.out_dir);
  table.save_file((fs::path(g.out_dir) / "calibration.csv").string());
  std::cout << "calibration: " << positions.size() << " positions x " << cfg.bs.size()
            << " stations -> "
            << (fs::path(g.out_dir) / "calibration.csv").string() << "\n";
  return kExitOk;
}

std::vector<raypos::Measurement> load_measurements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw raypos::IoError("cannot open measurements: " + path);
  std::string line;
  if (!std::getline(in, line)) throw raypos::IoError(path + ": empty measurement file");
  if (raypos::detail::strip_cr(line) != "bs_index,azimuth_deg,elevation_deg") {
    throw raypos::IoError(path + ":1: bad header (want bs_index,azimuth_deg,elevation_deg)");
  }
  std::vector<raypos::Measurement> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = raypos::detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = raypos::detail::split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (f.size() != 3) throw raypos::IoError(ctx + ": expected 3 fields");
    raypos::Measurement m;
    m.bs_index = static_cast<int>(raypos::detail::parse_int(f[0], ctx));
    m.y.azimuth =
        raypos::wrap_azimuth(raypos::deg2rad(raypos::detail::parse_double(f[1], ctx)));
    m.y.elevation = raypos::deg2rad(raypos::detail::parse_double(f[2], ctx));
    out.push_back(m);
  }
  if (out.empty()) throw raypos::IoError(path + ": no measurement rows");
  return out;
}

int cmd_locate(const GlobalArgs& g, const std::string& measurements_path,
               const std::string& algo_name, int rays, bool dump_scores) {
  const RunConfig cfg = load_config_or_fail(g);
  const auto algo = raypos::parse_algo(algo_name);
  if (!algo) throw ConfigError("unknown algorithm: " + algo_name);
  const raypos::Scene scene = raypos::load_scene_file(cfg.scene_path);
  const raypos::CampaignConfig& c = cfg.campaign;
  const raypos::CellGrid grid = raypos::CellGrid::covering(scene.bounds(), c.cell_size,
                                                           c.ue_z, c.slab_z_halfwidth);

  const std::vector<raypos::Measurement> all = load_measurements(measurements_path);
  std::vector<raypos::BaseStation> stations;
  std::vector<raypos::Measurement> measurements;
  std::vector<raypos::AngleDistribution> posteriors;
  for (const raypos::Measurement& m : all) {
    if (m.bs_index < 0 || m.bs_index >= static_cast<int>(cfg.bs.size())) {
      throw ConfigError("measurement references unknown bs_index " +
                        std::to_string(m.bs_index));
    }
    stations.push_back(cfg.bs[m.bs_index]);
    measurements.push_back(m);
    posteriors.push_back(raypos::posterior(m, cfg.bs[m.bs_index], c.perturb_elevation));
  }

  const int l = rays > 0 ? rays : c.rays_per_bs.front();
  raypos::AngleSampleSet set;
  raypos::ScoreMode mode = raypos::ScoreMode::count;
  switch (*algo) {
    case raypos::Algo::mc: {
      raypos::Rng rng(raypos::stream_seed(c.master_seed, raypos::StreamKind::mc_angles));
      set = raypos::sample_angles_mc(posteriors, l, rng);
      break;
    }
    case raypos::Algo::uniform:
      set = raypos::sample_angles_uniform(posteriors, l);
      mode = raypos::ScoreMode::weighted;
      break;
    case raypos::Algo::benchmark:
      set = raypos::sample_angles_benchmark(measurements, stations, l,
                                            c.benchmark_cone_scale);
      break;
  }

  try {
    const raypos::ScoreMap scores =
        raypos::score_grid(scene, stations, set, grid, c.max_bounces, mode, g.workers);
    const raypos::PositionEstimate est = raypos::estimate(scores, mode);
    std::cout << "argmax_cell," << est.argmax_cell.ix << ',' << est.argmax_cell.iy << "\n"
              << "argmax_m," << raypos::detail::fmt_double(est.argmax_point.x) << ','
              << raypos::detail::fmt_double(est.argmax_point.y) << "\n"
              << "mean_m," << raypos::detail::fmt_double(est.mean_point.x) << ','
              << raypos::detail::fmt_double(est.mean_point.y) << "\n";
    if (dump_scores) {
      ensure_out_dir(g.out_dir);
      auto out = open_out(fs::path(g.out_dir) / "scores.csv");
      out << "cell_ix,cell_iy,beta\n";
      for (int k = 0; k < grid.cell_count(); ++k) {
        const raypos::CellIndex ci = grid.from_linear(k);
        out << ci.ix << ',' << ci.iy << ','
            << raypos::detail::fmt_double(scores.beta(k, mode)) << '\n';
      }
    }
  } catch (const raypos::NoCellScoredError& e) {
    throw CoverageFailure(std::string("coverage failure: ") + e.what() +
                          " (no candidate cell is consistent with all measurements)");
  }
  return kExitOk;
}

int cmd_eval(const GlobalArgs& g) {
  const RunConfig cfg = load_config_or_fail(g);
  const raypos::Scene scene = raypos::load_scene_file(cfg.scene_path);

  std::optional<raypos::CalibrationTable> provided;
  if (!cfg.calibration_path.empty()) {
    provided = raypos::CalibrationTable::load_file(cfg.calibration_path);
  }

  const raypos::CampaignResult result = raypos::run_campaign(
      scene, cfg.bs, cfg.campaign, g.workers, provided ? &*provided : nullptr);

  ensure_out_dir(g.out_dir);
  const fs::path out_dir(g.out_dir);
  {
    auto out = open_out(out_dir / "config_effective.json");
    out << rayposcli::effective_config(cfg).dump(2) << "\n";
  }
  if (!provided) {
    result.calibration.save_file((out_dir / "calibration.csv").string());
  }
  for (const raypos::CampaignBlock& blk : result.blocks) {
    const std::string tag = raypos::block_tag(blk);
    {
      auto out = open_out(out_dir / ("results_" + tag + ".csv"));
      raypos::write_results_csv(out, blk.trials);
    }
    {
      auto out = open_out(out_dir / ("cdf_" + tag + ".csv"));
      raypos::write_cdf_csv(out, blk.trials, cfg.campaign.algos);
    }
  }
  {
    auto out = open_out(out_dir / "summary.csv");
    raypos::write_summary_csv(out, result, cfg.campaign.algos);
  }
  std::cout << "eval: " << result.blocks.size() << " block(s) -> " << g.out_dir << "\n";
  return kExitOk;
}

int cmd_gen_scene(const GlobalArgs& g, const raypos::DemoHallParams& params) {
  const raypos::Scene scene = raypos::make_demo_hall(params);
  const std::vector<raypos::BaseStation> bs = raypos::demo_corner_bs(params);

  ensure_out_dir(g.out_dir);
  const fs::path out_dir(g.out_dir);
  raypos::save_scene_file((out_dir / "scene.txt").string(), scene);

  nlohmann::ordered_json config;
  config["scene"] = "scene.txt";
  config["bs"] = nlohmann::ordered_json::array();
  for (const raypos::BaseStation& b : bs) {
    config["bs"].push_back({{"x", b.position.x},
                            {"y", b.position.y},
                            {"z", b.position.z},
                            {"sigma_deg", 0.5},
                            {"capture_radius", b.capture_radius}});
  }
  config["grid"] = {{"cell_size", 0.1}, {"slab_z_halfwidth", 0.25}};
  config["rays_per_bs"] = {500, 1700};
  config["max_bounces"] = 5;
  config["sigmas_deg"] = {0.5};
  config["positions"] = {{"count", 50}, {"clearance", 0.2}, {"z", 1.0}};
  config["realizations"] = 20;
  config["algos"] = {"mc", "uniform", "benchmark"};
  config["seed"] = 1;
  auto out = open_out(out_dir / "config.json");
  out << config.dump(2) << "\n";

  std::cout << "gen-scene: " << scene.triangles().size() << " triangles -> "
            << (out_dir / "scene.txt").string() << " (+ config.json)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AoA reverse-ray-tracing positioning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--seed", g.seed, "Master seed (overrides config)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory");

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Trace one ray path, print CSV polyline");
  std::string trace_scene;
  std::vector<double> trace_origin;
  double trace_az = 0.0, trace_el = 0.0;
  int trace_bounces = 5;
  bool trace_write = false;
  trace_cmd->add_option("--scene", trace_scene, "Scene file")->required();
  trace_cmd->add_option("--origin", trace_origin, "Launch point x y z (meters)")
      ->expected(3)
      ->required();
  trace_cmd->add_option("--azimuth-deg", trace_az, "Launch azimuth, degrees")->required();
  trace_cmd->add_option("--elevation-deg", trace_el, "Launch elevation, degrees");
  trace_cmd->add_option("--max-bounces", trace_bounces, "Bounce budget")
      ->check(CLI::NonNegativeNumber);
  trace_cmd->add_flag("--write", trace_write, "Also write <out>/path.csv");

  // calibrate
  app.add_subcommand("calibrate", "Compute the ground-truth AoA table");

  // locate
  auto* locate_cmd = app.add_subcommand("locate", "One-shot position estimate");
  std::string locate_measurements, locate_algo = "mc";
  int locate_rays = 0;
  bool locate_dump = false;
  locate_cmd->add_option("--measurements", locate_measurements,
                         "CSV bs_index,azimuth_deg,elevation_deg")
      ->required();
  locate_cmd->add_option("--algo", locate_algo, "mc | uniform | benchmark");
  locate_cmd->add_option("--rays", locate_rays, "Rays per BS (default: config)");
  locate_cmd->add_flag("--dump-scores", locate_dump, "Write <out>/scores.csv");

  // eval
  app.add_subcommand("eval", "Run the evaluation campaign");

  // gen-scene
  auto* gen_cmd = app.add_subcommand("gen-scene", "Write the demo hall and a config");
  raypos::DemoHallParams params;
  bool no_crates = false;
  gen_cmd->add_option("--width", params.width, "Hall x extent, meters");
  gen_cmd->add_option("--length", params.length, "Hall y extent, meters");
  gen_cmd->add_option("--height", params.height, "Hall z extent, meters");
  gen_cmd->add_option("--racks", params.n_racks, "Number of racks");
  gen_cmd->add_option("--rack-width", params.rack_width, "Rack x extent, meters");
  gen_cmd->add_option("--rack-height", params.rack_height, "Rack z extent, meters");
  gen_cmd->add_option("--rack-y0", params.rack_y0, "Rack south edge, meters");
  gen_cmd->add_option("--rack-y1", params.rack_y1, "Rack north edge, meters");
  gen_cmd->add_flag("--no-crates", no_crates, "Skip the open-area crates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message
    return kExitConfig;
  }

  try {
    if (trace_cmd->parsed()) {
      return cmd_trace(g, trace_scene, trace_origin, trace_az, trace_el, trace_bounces,
                       trace_write);
    }
    if (app.get_subcommand("calibrate")->parsed()) return cmd_calibrate(g);
    if (locate_cmd->parsed()) {
      return cmd_locate(g, locate_measurements, locate_algo, locate_rays, locate_dump);
    }
    if (app.get_subcommand("eval")->parsed()) return cmd_eval(g);
    if (gen_cmd->parsed()) {
      params.crates = !no_crates;
      return cmd_gen_scene(g, params);
    }
  } catch (const CoverageFailure& e) {
    std::cerr << e.what() << "\n";
    return kExitCoverage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
