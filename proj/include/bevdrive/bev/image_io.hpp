#pragma once

#include <string>

#include "bevdrive/bev/observation.hpp"

namespace bevdrive::bev {

// Binary-valued channel as a 0/255 portable graymap.
void write_pgm(const Grid& grid, const std::string& path);
// Real-valued channel scaled to 0..255.
void write_pgm(const GridF& grid, const std::string& path);

// Color-coded composite of all 15 channels (plus the real route plane when
// present) as an 8-bit RGB PNG.
void write_observation_png(const Observation& obs, const std::string& path);

const char* channel_file_name(int channel);  // "ch00_road" ... "ch14_stop3"

}  // namespace bevdrive::bev
