#pragma once

#include <cstdint>

#include "bevdrive/world/types.hpp"

namespace bevdrive::world {

// Procedural one-way grid town. The perimeter always forms a closed ring;
// interior streets are enabled per junction_fraction and produce lighted
// junctions where traffic streams cross or merge.
struct TownSpec {
  int grid_rows = 2;           // blocks vertically (>= 1)
  int grid_cols = 2;           // blocks horizontally (>= 1)
  double block_m = 56.0;       // node-to-node spacing
  double lane_width = 3.5;
  int lanes = 1;               // parallel lanes per street (>= 1)
  double junction_fraction = 1.0;  // fraction of interior street lines kept
  double box_clearance_m = 2.2;    // junction box margin beyond the road edge
  double green_s = 8.0;
  double yellow_s = 2.0;
  double red_s = 10.0;
};

TownMap generate_town(uint64_t seed, const TownSpec& spec);

}  // namespace bevdrive::world
