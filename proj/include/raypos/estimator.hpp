#pragma once

// The three positioning algorithms. Each builds a per-BS angle set, traces
// every ray, tallies cell crossings per BS, and combines them into cell
// scores. The per-cell product of per-BS tallies equals the sum over all
// cross-BS ray combinations whose rays all cross the cell, because the
// crossing indicator factorizes per BS; tests verify this against explicit
// enumeration.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "raypos/aoa.hpp"
#include "raypos/errors.hpp"
#include "raypos/parallel.hpp"
#include "raypos/ray_engine.hpp"
#include "raypos/rng.hpp"
#include "raypos/scene.hpp"

namespace raypos {

struct WeightedAngle {
  LaunchAngle angle;
  double weight = 1.0;
};

/// One entry per BS, l angles each.
using AngleSampleSet = std::vector<std::vector<WeightedAngle>>;

enum class ScoreMode {
  count,     // beta = product of per-BS ray counts (unit weights)
  weighted,  // beta = product of per-BS weight sums
};

/// l independent draws per BS from its posterior; unit weights.
inline AngleSampleSet sample_angles_mc(const std::vector<AngleDistribution>& posteriors,
                                       int l, Rng& rng) {
  AngleSampleSet sets(posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    sets[i].reserve(l);
    for (int j = 0; j < l; ++j) {
      sets[i].push_back({posteriors[i].sample(rng), 1.0});
    }
  }
  return sets;
}

/// l azimuths evenly spaced over the full circle, step 2pi/l starting at 0.
inline std::vector<double> uniform_azimuths(int l) {
  std::vector<double> out;
  out.reserve(l);
  for (int k = 0; k < l; ++k) out.push_back(k * kTwoPi / l);
  return out;
}

/// Full-circle discretization per BS; each angle weighted by the posterior
/// azimuth pdf, elevation pinned to the measured one. A degenerate (sigma=0)
/// posterior is the limit of the normalized weights: all mass on the grid
/// azimuth nearest the measurement.
inline AngleSampleSet sample_angles_uniform(const std::vector<AngleDistribution>& posteriors,
                                            int l) {
  const std::vector<double> az = uniform_azimuths(l);
  AngleSampleSet sets(posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const AngleDistribution& post = posteriors[i];
    sets[i].reserve(l);
    if (post.sigma_az == 0.0) {
      const int nearest =
          static_cast<int>(std::llround(post.mean.azimuth / (kTwoPi / l))) % l;
      for (int k = 0; k < l; ++k) {
        sets[i].push_back({{az[k], post.mean.elevation}, k == nearest ? 1.0 : 0.0});
      }
      continue;
    }
    for (double a : az) {
      sets[i].push_back({{a, post.mean.elevation}, post.pdf_azimuth(a)});
    }
  }
  return sets;
}

/// l azimuths evenly spaced over [y - scale*sigma, y + scale*sigma]
/// inclusive (l = 1 degenerates to the center); unit weights.
inline AngleSampleSet sample_angles_benchmark(const std::vector<Measurement>& measurements,
                                              const std::vector<BaseStation>& bs_list,
                                              int l, double cone_scale = 1.0) {
  AngleSampleSet sets(measurements.size());
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const double y = measurements[i].y.azimuth;
    const double half = cone_scale * bs_list[i].sigma;
    sets[i].reserve(l);
    for (int k = 0; k < l; ++k) {
      const double a = l == 1 ? y : y - half + (2.0 * half * k) / (l - 1);
      sets[i].push_back({{wrap_azimuth(a), measurements[i].y.elevation}, 1.0});
    }
  }
  return sets;
}

/// Per-cell, per-BS crossing tallies plus the combined scores.
class ScoreMap {
 public:
  ScoreMap(const CellGrid& grid, int n_bs)
      : grid_(grid),
        n_bs_(n_bs),
        count_(static_cast<std::size_t>(grid.cell_count()) * n_bs, 0),
        wsum_(static_cast<std::size_t>(grid.cell_count()) * n_bs, 0.0) {}

  const CellGrid& grid() const { return grid_; }
  int n_bs() const { return n_bs_; }

  void add_ray(int bs, const std::vector<int>& cells, double weight) {
    for (int cell : cells) {
      const std::size_t slot = static_cast<std::size_t>(cell) * n_bs_ + bs;
      count_[slot] += 1;
      wsum_[slot] += weight;
    }
  }

  int count(int cell, int bs) const {
    return count_[static_cast<std::size_t>(cell) * n_bs_ + bs];
  }
  double weight_sum(int cell, int bs) const {
    return wsum_[static_cast<std::size_t>(cell) * n_bs_ + bs];
  }

  double beta(int cell, ScoreMode mode) const {
    double b = 1.0;
    for (int i = 0; i < n_bs_; ++i) {
      b *= mode == ScoreMode::count ? static_cast<double>(count(cell, i))
                                    : weight_sum(cell, i);
    }
    return b;
  }

  std::vector<double> betas(ScoreMode mode) const {
    std::vector<double> out(grid_.cell_count());
    for (int k = 0; k < grid_.cell_count(); ++k) out[k] = beta(k, mode);
    return out;
  }

 private:
  CellGrid grid_;
  int n_bs_;
  std::vector<int> count_;
  std::vector<double> wsum_;
};

/// Traces every (BS, angle) ray and tallies cell crossings. Rays fan out
/// across workers; the fold runs serially in (BS, angle) order, so the map
/// is identical for any worker count. Throws NoCellScoredError when no cell
/// is crossed by rays of every BS (combined score zero everywhere).
inline ScoreMap score_grid(const Scene& scene, const std::vector<BaseStation>& bs_list,
                           const AngleSampleSet& angle_sets, const CellGrid& grid,
                           int max_bounces, ScoreMode mode, int workers = 1) {
  struct RayJob {
    int bs;
    const WeightedAngle* wa;
  };
  std::vector<RayJob> jobs;
  for (std::size_t b = 0; b < bs_list.size(); ++b) {
    for (const WeightedAngle& wa : angle_sets[b]) {
      // Zero-weight rays cannot contribute in weighted mode; skip the trace.
      if (mode == ScoreMode::weighted && wa.weight == 0.0) continue;
      jobs.push_back({static_cast<int>(b), &wa});
    }
  }

  std::vector<std::vector<int>> ray_cells(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const RayPath path =
        trace(scene, bs_list[jobs[j].bs].position, jobs[j].wa->angle, max_bounces);
    ray_cells[j] = cells_crossed(path, grid);
  });

  ScoreMap scores(grid, static_cast<int>(bs_list.size()));
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    scores.add_ray(jobs[j].bs, ray_cells[j], jobs[j].wa->weight);
  }

  bool any = false;
  for (int k = 0; k < grid.cell_count() && !any; ++k) {
    any = scores.beta(k, mode) > 0.0;
  }
  if (!any) throw NoCellScoredError("no cell is crossed by rays of every BS");
  return scores;
}

struct PositionEstimate {
  CellIndex argmax_cell;
  Vec2 argmax_point;  // center of the argmax cell
  Vec2 mean_point;    // score-weighted centroid of cell centers
};

/// Argmax (ties break to the lowest linear cell index) and the weighted
/// mean. Throws EmptyScoreError when every score is zero.
inline PositionEstimate estimate(const ScoreMap& scores, ScoreMode mode) {
  const CellGrid& grid = scores.grid();
  double best = 0.0;
  int best_k = -1;
  double total = 0.0;
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < grid.cell_count(); ++k) {
    const double b = scores.beta(k, mode);
    if (b > best) {
      best = b;
      best_k = k;
    }
    if (b > 0.0) {
      const Vec3 c = grid.cell_center(grid.from_linear(k));
      total += b;
      mx += b * c.x;
      my += b * c.y;
    }
  }
  if (best_k < 0) throw EmptyScoreError("all cell scores are zero");

  PositionEstimate est;
  est.argmax_cell = grid.from_linear(best_k);
  const Vec3 center = grid.cell_center(est.argmax_cell);
  est.argmax_point = {center.x, center.y};
  est.mean_point = {mx / total, my / total};
  return est;
}

}  // namespace raypos
