#pragma once

// Shipped demo environment: a hall with storage racks forming alleys plus
// an open area, stations in the four top corners. Dimensions default to
// 8 x 18 x 2.5 m. The interior layout is a plausible reconstruction; its
// parameters are knobs, not facts about any real site.

#include <vector>

#include "raypos/aoa.hpp"
#include "raypos/scene.hpp"

namespace raypos {

struct DemoHallParams {
  double width = 8.0;    // x extent, meters
  double length = 18.0;  // y extent
  double height = 2.5;   // z extent
  int n_racks = 4;
  double rack_width = 0.6;
  double rack_height = 1.8;
  double rack_y0 = 2.0;
  double rack_y1 = 10.0;
  bool crates = true;  // two boxes in the open area
};

/// Room shell wound inward, obstacles wound outward (the convention the
/// free-position test relies on).
inline Scene make_demo_hall(const DemoHallParams& p = {}) {
  std::vector<Triangle> tris;
  append_box_inward(tris, {0.0, 0.0, 0.0}, {p.width, p.length, p.height});
  for (int i = 0; i < p.n_racks; ++i) {
    const double cx = p.width * (i + 1) / (p.n_racks + 1);
    append_box(tris, {cx - 0.5 * p.rack_width, p.rack_y0, 0.0},
               {cx + 0.5 * p.rack_width, p.rack_y1, p.rack_height});
  }
  if (p.crates) {
    append_box(tris, {1.8, 12.6, 0.0}, {2.8, 13.6, 1.2});
    append_box(tris, {4.9, 14.8, 0.0}, {5.9, 16.0, 0.9});
  }
  return Scene(std::move(tris));
}

/// Four stations near the top corners, inset from the walls and just below
/// the ceiling.
inline std::vector<BaseStation> demo_corner_bs(const DemoHallParams& p = {},
                                               double inset = 0.3,
                                               double drop = 0.2) {
  const double z = p.height - drop;
  std::vector<BaseStation> bs(4);
  bs[0].position = {inset, inset, z};
  bs[1].position = {p.width - inset, inset, z};
  bs[2].position = {inset, p.length - inset, z};
  bs[3].position = {p.width - inset, p.length - inset, z};
  for (int i = 0; i < 4; ++i) bs[i].index = i;
  return bs;
}

}  // namespace raypos
