#include "nav/render.hpp"

#include <cassert>
#include <cmath>

namespace nav::render {

std::vector<double> column_offsets(double fov, int n_columns) {
  std::vector<double> offsets(n_columns);
  for (int i = 0; i < n_columns / 2; ++i) {
    const double off = fov * (0.5 - (i + 0.5) / n_columns);
    offsets[i] = off;
    offsets[n_columns - 1 - i] = -off;
  }
  if (n_columns % 2 != 0) offsets[n_columns / 2] = 0.0;
  return offsets;
}

namespace {

// Nearest forward intersection of the ray with a segment, as ray length.
// Returns false on miss.
bool ray_segment(const Vec2& origin, const Vec2& dir, const Segment& seg, double& t_out) {
  const Vec2 e = seg.b - seg.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-12) return false;  // parallel
  const Vec2 ao = seg.a - origin;
  const double t = cross(ao, e) / denom;
  const double s = cross(ao, dir) / denom;
  if (t <= 1e-9 || s < 0.0 || s > 1.0) return false;
  t_out = t;
  return true;
}

uint8_t shade_channel(uint8_t c, double factor) {
  double v = std::round(double(c) * factor);
  if (v < 0.0) v = 0.0;
  if (v > 255.0) v = 255.0;
  return uint8_t(v);
}

}  // namespace

std::vector<DepthColumn> raycast(const world::EnvironmentMap& map, const Pose& pose,
                                 double fov, int n_columns) {
  assert(fov > 0.0 && n_columns > 0);
  const std::vector<double> offsets = column_offsets(fov, n_columns);
  const Vec2 origin = pose.position();
  std::vector<DepthColumn> columns(n_columns);
  for (int i = 0; i < n_columns; ++i) {
    const double angle = pose.heading + offsets[i];
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double best = 0.0;
    const Segment* best_seg = nullptr;
    for (const auto& seg : map.walls) {
      double t;
      if (!ray_segment(origin, dir, seg, t) || t > map.max_range) continue;
      if (best_seg == nullptr || t < best) {
        best = t;
        best_seg = &seg;
      }
    }
    if (best_seg != nullptr) {
      columns[i].hit = true;
      columns[i].distance = best * std::cos(offsets[i]);
      columns[i].color = best_seg->color;
    }
  }
  return columns;
}

Image render_rgb(const world::EnvironmentMap& map, const Pose& pose,
                 const RenderParams& params) {
  const int w = params.width;
  const int h = params.height;
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.assign(size_t(w) * h * 3, 0);

  const std::vector<DepthColumn> cols = raycast(map, pose, params.fov, w);
  for (int x = 0; x < w; ++x) {
    int wall_top = h / 2, wall_bottom = h / 2;  // empty slice on miss
    Color wall{};
    if (cols[x].hit) {
      double slice = params.height_scale / cols[x].distance;
      if (slice > double(h)) slice = double(h);
      if (slice < 0.0) slice = 0.0;
      const double top = (double(h) - slice) / 2.0;
      wall_top = int(std::floor(top + 0.5));
      wall_bottom = int(std::floor(top + slice + 0.5));
      if (wall_top < 0) wall_top = 0;
      if (wall_bottom > h) wall_bottom = h;
      const double factor = 1.0 / (1.0 + params.shade_k * cols[x].distance);
      wall.r = shade_channel(cols[x].color.r, factor);
      wall.g = shade_channel(cols[x].color.g, factor);
      wall.b = shade_channel(cols[x].color.b, factor);
    }
    for (int y = 0; y < h; ++y) {
      Color c;
      if (y < wall_top)
        c = y < h / 2 ? params.ceiling : params.floor;
      else if (y < wall_bottom)
        c = wall;
      else
        c = y < h / 2 ? params.ceiling : params.floor;
      uint8_t* px = img.pixels.data() + (size_t(y) * w + x) * 3;
      px[0] = c.r;
      px[1] = c.g;
      px[2] = c.b;
    }
  }
  return img;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const uint8_t* src = img.at(img.width - 1 - x, y);
      uint8_t* dst = out.pixels.data() + (size_t(y) * img.width + x) * 3;
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

Image upscale(const Image& img, int factor) {
  Image out;
  out.width = img.width * factor;
  out.height = img.height * factor;
  out.pixels.resize(out.byte_count());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const uint8_t* src = img.at(x / factor, y / factor);
      uint8_t* dst = out.pixels.data() + (size_t(y) * out.width + x) * 3;
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

std::vector<uint8_t> raw_dump(const Image& img) {
  std::vector<uint8_t> out;
  out.reserve(8 + img.byte_count());
  auto push_u32 = [&](uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
  };
  push_u32(uint32_t(img.width));
  push_u32(uint32_t(img.height));
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace nav::render
