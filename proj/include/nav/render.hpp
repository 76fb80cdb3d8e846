// Column-wise raycaster producing the RGB observation image from a pose.
#pragma once

#include <cstdint>
#include <vector>

#include "nav/world.hpp"

namespace nav::render {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major, RGB interleaved

  size_t byte_count() const { return size_t(width) * height * 3; }
  const uint8_t* at(int x, int y) const {
    return pixels.data() + (size_t(y) * width + x) * 3;
  }
  bool operator==(const Image&) const = default;
};

struct DepthColumn {
  bool hit = false;
  double distance = 0.0;  // perpendicular-corrected, meters
  Color color;
};

struct RenderParams {
  int width = 64;
  int height = 48;
  double fov = 1.5707963267948966;  // pi/2
  double height_scale = 40.0;       // px * m
  double shade_k = 0.15;            // per meter
  Color ceiling{60, 60, 70};
  Color floor{90, 90, 90};
};

// Ray bearings per column, exactly odd-symmetric about the heading so a
// mirrored scene yields the mirrored column order bit for bit.
std::vector<double> column_offsets(double fov, int n_columns);

std::vector<DepthColumn> raycast(const world::EnvironmentMap& map, const Pose& pose,
                                 double fov, int n_columns);

Image render_rgb(const world::EnvironmentMap& map, const Pose& pose,
                 const RenderParams& params);

Image flip_horizontal(const Image& img);
Image upscale(const Image& img, int factor);

// Flat observation dump: u32 width, u32 height (little endian), then pixels.
std::vector<uint8_t> raw_dump(const Image& img);

}  // namespace nav::render
