#pragma once

// Campaign harness: samples UE positions, calibrates ground-truth AoA,
// runs (position x realization x algorithm) trials over sigma and ray-count
// sweeps, and summarizes error CDFs.
//
// Determinism contract: every random draw comes from a stream seeded by the
// master seed plus structural indices (sigma index, l index, position,
// realization). Trials fan out across workers into preallocated slots and
// results are assembled in canonical order, so output files are
// byte-identical for any worker count. Measurement streams do not involve
// the l index or the algorithm, so sweeps over l and algorithm comparisons
// are paired on the same noisy measurements.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "raypos/aoa.hpp"
#include "raypos/detail/text.hpp"
#include "raypos/errors.hpp"
#include "raypos/estimator.hpp"
#include "raypos/parallel.hpp"
#include "raypos/ray_engine.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"

namespace raypos {

enum class Algo { mc, uniform, benchmark };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::mc: return "mc";
    case Algo::uniform: return "uniform";
    case Algo::benchmark: return "benchmark";
  }
  return "?";
}

inline std::optional<Algo> parse_algo(const std::string& s) {
  if (s == "mc") return Algo::mc;
  if (s == "uniform") return Algo::uniform;
  if (s == "benchmark") return Algo::benchmark;
  return std::nullopt;
}

struct CampaignConfig {
  std::vector<double> sigmas_deg{0.5};
  std::vector<int> rays_per_bs{500};
  std::vector<Algo> algos{Algo::mc, Algo::uniform, Algo::benchmark};
  int max_bounces = 5;
  int n_positions = 50;
  int n_realizations = 20;
  double ue_z = 1.0;
  double clearance = 0.2;  // min distance from sampled UE to any surface
  double cell_size = 0.1;
  double slab_z_halfwidth = 0.25;
  std::uint64_t master_seed = 1;
  ProbeParams probe;
  bool perturb_elevation = false;
  double benchmark_cone_scale = 1.0;
};

struct TrialResult {
  int pos_index = 0;
  int real_index = 0;
  Algo algo = Algo::mc;
  Vec2 true_pos;
  Vec2 est;  // NaN on coverage failure
  double error = 0.0;
  bool coverage_failed = false;
};

struct CdfSummary {
  std::vector<double> sorted_errors;
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double coverage_fail_rate = 0.0;
  int n_trials = 0;
};

struct CampaignBlock {
  double sigma_deg = 0.0;
  int rays_per_bs = 0;
  std::vector<TrialResult> trials;  // position-major, then realization, then algo
};

struct CampaignResult {
  std::vector<Vec3> positions;
  CalibrationTable calibration;
  CellGrid grid;
  std::vector<CampaignBlock> blocks;  // sigma-major, then l
};

/// True when `p` keeps `clearance` to every surface and does not sit inside
/// a solid. The inside test looks at the first surface straight up: an
/// upward-facing winding normal there means we are exiting an obstacle.
/// Authored scenes wind obstacles outward and the room shell inward.
inline bool is_position_free(const Scene& scene, Vec3 p, double clearance) {
  for (const Triangle& t : scene.triangles()) {
    if (point_triangle_distance(p, t) < clearance) return false;
  }
  if (const auto hit = scene.intersect({p, {0.0, 0.0, 1.0}})) {
    if (scene.triangles()[hit->triangle_index].normal.z > 0.0) return false;
  }
  return true;
}

/// Rejection-samples n free positions at the given height, uniform over the
/// scene footprint inset by the clearance.
inline std::vector<Vec3> sample_ue_positions(const Scene& scene, int n, double z,
                                             double clearance, Rng& rng) {
  const Aabb& b = scene.bounds();
  const double x0 = b.lo.x + clearance, x1 = b.hi.x - clearance;
  const double y0 = b.lo.y + clearance, y1 = b.hi.y - clearance;
  if (x0 >= x1 || y0 >= y1) {
    throw std::runtime_error("scene footprint too small for UE clearance");
  }
  std::vector<Vec3> out;
  out.reserve(n);
  long long attempts = 0;
  const long long max_attempts = 100000LL * std::max(n, 1);
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("could not place UE positions with the given clearance");
    }
    const Vec3 p{rng.uniform(x0, x1), rng.uniform(y0, y1), z};
    if (is_position_free(scene, p, clearance)) out.push_back(p);
  }
  return out;
}

/// Offline calibration for a set of positions; rows position-major, BS-minor.
inline CalibrationTable calibrate_positions(const Scene& scene,
                                            const std::vector<Vec3>& positions,
                                            const std::vector<BaseStation>& bs_list,
                                            const ProbeParams& probe, int workers = 1) {
  std::vector<std::vector<std::optional<LaunchAngle>>> results(positions.size());
  parallel_for(positions.size(), workers, [&](std::size_t i) {
    results[i] = establish_true_aoa_all(scene, positions[i], bs_list, probe);
  });

  CalibrationTable table;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t b = 0; b < bs_list.size(); ++b) {
      CalibrationEntry e;
      e.position = positions[i];
      e.bs_index = bs_list[b].index;
      e.found = results[i][b].has_value();
      if (e.found) e.aoa = *results[i][b];
      table.add(e);
    }
  }
  return table;
}

/// Empirical quantile: smallest error whose CDF (i/N over the ascending
/// sort) reaches q. The 1e-9 guards FP noise in q*N at integral ranks.
inline double quantile(const std::vector<double>& sorted_ascending, double q) {
  const std::size_t n = sorted_ascending.size();
  if (n == 0) throw EmptyResultsError("quantile of empty sample");
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_ascending[rank - 1];
}

inline CdfSummary summarize(const std::vector<TrialResult>& trials, Algo algo) {
  CdfSummary s;
  int failures = 0;
  for (const TrialResult& t : trials) {
    if (t.algo != algo) continue;
    s.sorted_errors.push_back(t.error);
    if (t.coverage_failed) ++failures;
  }
  if (s.sorted_errors.empty()) throw EmptyResultsError("no trials for algorithm");
  std::sort(s.sorted_errors.begin(), s.sorted_errors.end());
  s.n_trials = static_cast<int>(s.sorted_errors.size());
  s.q50 = quantile(s.sorted_errors, 0.5);
  s.q90 = quantile(s.sorted_errors, 0.9);
  s.q95 = quantile(s.sorted_errors, 0.95);
  s.coverage_fail_rate = static_cast<double>(failures) / s.n_trials;
  return s;
}

namespace detail {

struct PositionCalib {
  std::vector<int> found_bs;               // indices into bs_list
  std::vector<LaunchAngle> theta;          // parallel to found_bs
};

inline double grid_diagonal(const CellGrid& g) {
  return std::hypot(g.nx * g.cell_size, g.ny * g.cell_size);
}

}  // namespace detail

/// Runs the full campaign. When `provided_calibration` is non-null it must
/// contain a row for every (sampled position, BS); otherwise calibration is
/// computed on the fly (and returned in the result).
inline CampaignResult run_campaign(const Scene& scene,
                                   const std::vector<BaseStation>& bs_list,
                                   const CampaignConfig& cfg, int workers = 1,
                                   const CalibrationTable* provided_calibration = nullptr) {
  CampaignResult result;
  result.grid = CellGrid::covering(scene.bounds(), cfg.cell_size, cfg.ue_z,
                                   cfg.slab_z_halfwidth);

  Rng pos_rng(stream_seed(cfg.master_seed, StreamKind::positions));
  result.positions =
      sample_ue_positions(scene, cfg.n_positions, cfg.ue_z, cfg.clearance, pos_rng);

  if (provided_calibration) {
    result.calibration = *provided_calibration;
  } else {
    result.calibration =
        calibrate_positions(scene, result.positions, bs_list, cfg.probe, workers);
  }

  // Per-position view of the table: which stations were found and their
  // ground-truth angles. A missing row is a hard error; found=0 is data.
  std::vector<detail::PositionCalib> calib(result.positions.size());
  for (std::size_t pi = 0; pi < result.positions.size(); ++pi) {
    for (std::size_t b = 0; b < bs_list.size(); ++b) {
      const CalibrationEntry* e =
          result.calibration.lookup(result.positions[pi], bs_list[b].index);
      if (!e) {
        throw CalibrationMissingError(
            "calibration table has no row for position " + std::to_string(pi) +
            ", bs " + std::to_string(bs_list[b].index));
      }
      if (e->found) {
        calib[pi].found_bs.push_back(static_cast<int>(b));
        calib[pi].theta.push_back(e->aoa);
      }
    }
  }

  const double diagonal = detail::grid_diagonal(result.grid);
  const int n_pos = cfg.n_positions;
  const int n_real = cfg.n_realizations;
  const std::size_t trials_per_block =
      static_cast<std::size_t>(n_pos) * n_real * cfg.algos.size();

  struct Job {
    int si, li, pi, ri;
  };
  std::vector<Job> jobs;
  for (int si = 0; si < static_cast<int>(cfg.sigmas_deg.size()); ++si) {
    for (int li = 0; li < static_cast<int>(cfg.rays_per_bs.size()); ++li) {
      for (int pi = 0; pi < n_pos; ++pi) {
        for (int ri = 0; ri < n_real; ++ri) jobs.push_back({si, li, pi, ri});
      }
    }
  }

  result.blocks.resize(cfg.sigmas_deg.size() * cfg.rays_per_bs.size());
  for (int si = 0; si < static_cast<int>(cfg.sigmas_deg.size()); ++si) {
    for (int li = 0; li < static_cast<int>(cfg.rays_per_bs.size()); ++li) {
      CampaignBlock& blk = result.blocks[si * cfg.rays_per_bs.size() + li];
      blk.sigma_deg = cfg.sigmas_deg[si];
      blk.rays_per_bs = cfg.rays_per_bs[li];
      blk.trials.resize(trials_per_block);
    }
  }

  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const Job job = jobs[j];
    const double sigma = deg2rad(cfg.sigmas_deg[job.si]);
    const int l = cfg.rays_per_bs[job.li];
    const Vec3 true_pos = result.positions[job.pi];
    const detail::PositionCalib& pc = calib[job.pi];

    CampaignBlock& blk = result.blocks[job.si * cfg.rays_per_bs.size() + job.li];
    TrialResult* out =
        &blk.trials[(static_cast<std::size_t>(job.pi) * n_real + job.ri) *
                    cfg.algos.size()];

    auto fill = [&](std::size_t a, Vec2 est, double error, bool failed) {
      out[a].pos_index = job.pi;
      out[a].real_index = job.ri;
      out[a].algo = cfg.algos[a];
      out[a].true_pos = {true_pos.x, true_pos.y};
      out[a].est = est;
      out[a].error = error;
      out[a].coverage_failed = failed;
    };
    const Vec2 nan2{std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};

    // Positioning needs at least two stations with a calibrated angle.
    if (pc.found_bs.size() < 2) {
      for (std::size_t a = 0; a < cfg.algos.size(); ++a) fill(a, nan2, diagonal, true);
      return;
    }

    Rng meas_rng(stream_seed(cfg.master_seed, StreamKind::measurement,
                             static_cast<std::uint64_t>(job.si),
                             static_cast<std::uint64_t>(job.pi),
                             static_cast<std::uint64_t>(job.ri)));
    std::vector<BaseStation> stations;
    std::vector<Measurement> measurements;
    std::vector<AngleDistribution> posteriors;
    for (std::size_t f = 0; f < pc.found_bs.size(); ++f) {
      BaseStation bs = bs_list[pc.found_bs[f]];
      bs.sigma = sigma;
      const Measurement m =
          sample_measurement(pc.theta[f], bs, meas_rng, cfg.perturb_elevation);
      stations.push_back(bs);
      measurements.push_back(m);
      posteriors.push_back(posterior(m, bs, cfg.perturb_elevation));
    }

    for (std::size_t a = 0; a < cfg.algos.size(); ++a) {
      AngleSampleSet set;
      ScoreMode mode = ScoreMode::count;
      switch (cfg.algos[a]) {
        case Algo::mc: {
          Rng mc_rng(stream_seed(cfg.master_seed, StreamKind::mc_angles,
                                 static_cast<std::uint64_t>(job.si),
                                 static_cast<std::uint64_t>(job.li),
                                 static_cast<std::uint64_t>(job.pi),
                                 static_cast<std::uint64_t>(job.ri)));
          set = sample_angles_mc(posteriors, l, mc_rng);
          mode = ScoreMode::count;
          break;
        }
        case Algo::uniform:
          set = sample_angles_uniform(posteriors, l);
          mode = ScoreMode::weighted;
          break;
        case Algo::benchmark:
          set = sample_angles_benchmark(measurements, stations, l,
                                        cfg.benchmark_cone_scale);
          mode = ScoreMode::count;
          break;
      }
      try {
        const ScoreMap scores = score_grid(scene, stations, set, result.grid,
                                           cfg.max_bounces, mode, 1);
        const PositionEstimate est = estimate(scores, mode);
        const double err =
            std::hypot(est.argmax_point.x - true_pos.x, est.argmax_point.y - true_pos.y);
        fill(a, est.argmax_point, err, false);
      } catch (const NoCellScoredError&) {
        fill(a, nan2, diagonal, true);
      }
    }
  });

  return result;
}

// ---- output files ----

inline void write_results_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << "pos_index,real_index,algo,true_x,true_y,est_x,est_y,error_m,coverage_failed\n";
  for (const TrialResult& t : trials) {
    out << t.pos_index << ',' << t.real_index << ',' << to_string(t.algo) << ','
        << detail::fmt_double(t.true_pos.x) << ',' << detail::fmt_double(t.true_pos.y)
        << ',' << detail::fmt_double(t.est.x) << ',' << detail::fmt_double(t.est.y)
        << ',' << detail::fmt_double(t.error) << ',' << (t.coverage_failed ? 1 : 0)
        << '\n';
  }
}

inline void write_cdf_csv(std::ostream& out, const std::vector<TrialResult>& trials,
                          const std::vector<Algo>& algos) {
  out << "algo,error_m,cdf\n";
  for (Algo algo : algos) {
    const CdfSummary s = summarize(trials, algo);
    for (int i = 0; i < s.n_trials; ++i) {
      out << to_string(algo) << ',' << detail::fmt_double(s.sorted_errors[i]) << ','
          << detail::fmt_double(static_cast<double>(i + 1) / s.n_trials) << '\n';
    }
  }
}

inline void write_summary_csv(std::ostream& out, const CampaignResult& result,
                              const std::vector<Algo>& algos) {
  out << "algo,sigma_deg,rays_per_bs,q50,q90,q95,coverage_fail_rate,n_trials\n";
  for (const CampaignBlock& blk : result.blocks) {
    for (Algo algo : algos) {
      const CdfSummary s = summarize(blk.trials, algo);
      out << to_string(algo) << ',' << detail::fmt_double(blk.sigma_deg) << ','
          << blk.rays_per_bs << ',' << detail::fmt_double(s.q50) << ','
          << detail::fmt_double(s.q90) << ',' << detail::fmt_double(s.q95) << ','
          << detail::fmt_double(s.coverage_fail_rate) << ',' << s.n_trials << '\n';
    }
  }
}

/// File tag for one (sigma, l) block: "sigma0.5_l500". %g keeps names short;
/// exact values live inside the files.
inline std::string block_tag(const CampaignBlock& blk) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sigma%g_l%d", blk.sigma_deg, blk.rays_per_bs);
  return buf;
}

}  // namespace raypos
