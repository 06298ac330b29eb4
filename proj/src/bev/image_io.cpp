#include "bevdrive/bev/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "bevdrive/serial.hpp"

namespace bevdrive::bev {

namespace {

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
}

void png_chunk(std::vector<uint8_t>* out, const char type[4], const uint8_t* data, size_t n) {
  const auto be32 = [&](uint32_t v) {
    out->push_back(static_cast<uint8_t>(v >> 24));
    out->push_back(static_cast<uint8_t>(v >> 16));
    out->push_back(static_cast<uint8_t>(v >> 8));
    out->push_back(static_cast<uint8_t>(v));
  };
  be32(static_cast<uint32_t>(n));
  const size_t crc_start = out->size();
  out->insert(out->end(), type, type + 4);
  out->insert(out->end(), data, data + n);
  const uint32_t crc = static_cast<uint32_t>(
      ::crc32(0, out->data() + crc_start, static_cast<uInt>(n + 4)));
  be32(crc);
}

}  // namespace

void write_pgm(const Grid& grid, const std::string& path) {
  std::vector<uint8_t> out;
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", kGridSize, kGridSize);
  out.insert(out.end(), header, header + n);
  for (uint8_t c : grid.cells) out.push_back(c ? 255 : 0);
  write_file(path, out);
}

void write_pgm(const GridF& grid, const std::string& path) {
  std::vector<uint8_t> out;
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", kGridSize, kGridSize);
  out.insert(out.end(), header, header + n);
  for (float v : grid.cells) {
    out.push_back(static_cast<uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f));
  }
  write_file(path, out);
}

void write_observation_png(const Observation& obs, const std::string& path) {
  const int w = kGridSize, h = kGridSize;
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3, 0);
  auto blend = [&](int idx, uint8_t r, uint8_t g, uint8_t b, float alpha) {
    uint8_t* px = rgb.data() + static_cast<size_t>(idx) * 3;
    px[0] = static_cast<uint8_t>(px[0] * (1 - alpha) + r * alpha);
    px[1] = static_cast<uint8_t>(px[1] * (1 - alpha) + g * alpha);
    px[2] = static_cast<uint8_t>(px[2] * (1 - alpha) + b * alpha);
  };
  for (int i = 0; i < w * h; ++i) {
    if (obs.channels[kChRoad].cells[static_cast<size_t>(i)]) blend(i, 70, 70, 70, 1.0f);
    if (obs.channels[kChLanes].cells[static_cast<size_t>(i)]) blend(i, 200, 200, 200, 1.0f);
    for (int k = 3; k >= 0; --k) {
      const float a = 0.35f + 0.1625f * (3 - k);
      if (obs.channels[static_cast<size_t>(kChStop0 + k)].cells[static_cast<size_t>(i)])
        blend(i, 60, 90, 230, a);
      if (obs.channels[static_cast<size_t>(kChVehicle0 + k)].cells[static_cast<size_t>(i)])
        blend(i, 230, 60, 60, a);
      if (obs.channels[static_cast<size_t>(kChPedestrian0 + k)].cells[static_cast<size_t>(i)])
        blend(i, 240, 200, 40, a);
    }
    if (obs.has_real_channel1) {
      const float v = obs.real_channel1.cells[static_cast<size_t>(i)];
      if (v > 0.02f) blend(i, 40, 220, 90, std::min(1.0f, v));
    } else if (obs.channels[kChRoute].cells[static_cast<size_t>(i)]) {
      blend(i, 40, 220, 90, 0.9f);
    }
  }
  // ego marker
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      const int r = kEgoRow + dr, c = kEgoCol + dc;
      if (r >= 0 && r < h && c >= 0 && c < w) blend(r * w + c, 255, 255, 255, 0.8f);
    }
  }

  // PNG: 8-bit RGB, one filter byte (0) per scanline, zlib-deflated.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
  for (int r = 0; r < h; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), rgb.begin() + static_cast<long>(r) * w * 3,
               rgb.begin() + static_cast<long>(r + 1) * w * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("png deflate failed");
  }
  compressed.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  uint8_t ihdr[13];
  const auto be32p = [](uint8_t* p, uint32_t v) {
    p[0] = static_cast<uint8_t>(v >> 24);
    p[1] = static_cast<uint8_t>(v >> 16);
    p[2] = static_cast<uint8_t>(v >> 8);
    p[3] = static_cast<uint8_t>(v);
  };
  be32p(ihdr, static_cast<uint32_t>(w));
  be32p(ihdr + 4, static_cast<uint32_t>(h));
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // color type: truecolor
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  png_chunk(&out, "IHDR", ihdr, sizeof(ihdr));
  png_chunk(&out, "IDAT", compressed.data(), compressed.size());
  png_chunk(&out, "IEND", nullptr, 0);
  write_file(path, out);
}

const char* channel_file_name(int channel) {
  static const char* names[kChannelCount] = {
      "ch00_road", "ch01_route", "ch02_lanes", "ch03_veh0",  "ch04_veh1",
      "ch05_veh2", "ch06_veh3",  "ch07_ped0",  "ch08_ped1",  "ch09_ped2",
      "ch10_ped3", "ch11_stop0", "ch12_stop1", "ch13_stop2", "ch14_stop3"};
  return names[channel];
}

}  // namespace bevdrive::bev
