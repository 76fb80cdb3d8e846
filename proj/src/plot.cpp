#include "nav/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nav::plot {

namespace {

// 5x7 glyphs, column bytes, ASCII 32..90 (uppercase + punctuation).
constexpr uint8_t kFont[][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5f, 0x00, 0x00},
    {0x00, 0x07, 0x00, 0x07, 0x00}, {0x14, 0x7f, 0x14, 0x7f, 0x14},
    {0x24, 0x2a, 0x7f, 0x2a, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00},
    {0x00, 0x1c, 0x22, 0x41, 0x00}, {0x00, 0x41, 0x22, 0x1c, 0x00},
    {0x14, 0x08, 0x3e, 0x08, 0x14}, {0x08, 0x08, 0x3e, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08},
    {0x00, 0x60, 0x60, 0x00, 0x00}, {0x20, 0x10, 0x08, 0x04, 0x02},
    {0x3e, 0x51, 0x49, 0x45, 0x3e}, {0x00, 0x42, 0x7f, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4b, 0x31},
    {0x18, 0x14, 0x12, 0x7f, 0x10}, {0x27, 0x45, 0x45, 0x45, 0x39},
    {0x3c, 0x4a, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1e},
    {0x00, 0x36, 0x36, 0x00, 0x00}, {0x00, 0x56, 0x36, 0x00, 0x00},
    {0x08, 0x14, 0x22, 0x41, 0x00}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x51, 0x09, 0x06},
    {0x32, 0x49, 0x79, 0x41, 0x3e}, {0x7e, 0x11, 0x11, 0x11, 0x7e},
    {0x7f, 0x49, 0x49, 0x49, 0x36}, {0x3e, 0x41, 0x41, 0x41, 0x22},
    {0x7f, 0x41, 0x41, 0x22, 0x1c}, {0x7f, 0x49, 0x49, 0x49, 0x41},
    {0x7f, 0x09, 0x09, 0x09, 0x01}, {0x3e, 0x41, 0x49, 0x49, 0x7a},
    {0x7f, 0x08, 0x08, 0x08, 0x7f}, {0x00, 0x41, 0x7f, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3f, 0x01}, {0x7f, 0x08, 0x14, 0x22, 0x41},
    {0x7f, 0x40, 0x40, 0x40, 0x40}, {0x7f, 0x02, 0x0c, 0x02, 0x7f},
    {0x7f, 0x04, 0x08, 0x10, 0x7f}, {0x3e, 0x41, 0x41, 0x41, 0x3e},
    {0x7f, 0x09, 0x09, 0x09, 0x06}, {0x3e, 0x41, 0x51, 0x21, 0x5e},
    {0x7f, 0x09, 0x19, 0x29, 0x46}, {0x46, 0x49, 0x49, 0x49, 0x31},
    {0x01, 0x01, 0x7f, 0x01, 0x01}, {0x3f, 0x40, 0x40, 0x40, 0x3f},
    {0x1f, 0x20, 0x40, 0x20, 0x1f}, {0x3f, 0x40, 0x38, 0x40, 0x3f},
    {0x63, 0x14, 0x08, 0x14, 0x63}, {0x07, 0x08, 0x70, 0x08, 0x07},
    {0x61, 0x51, 0x49, 0x45, 0x43}};

void put_pixel(render::Image& img, int x, int y, const Color& c) {
  if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
  uint8_t* px = img.pixels.data() + (size_t(y) * img.width + x) * 3;
  px[0] = c.r;
  px[1] = c.g;
  px[2] = c.b;
}

void draw_line(render::Image& img, int x0, int y0, int x1, int y1, const Color& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_pixel(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void fill_rect(render::Image& img, int x0, int y0, int x1, int y1, const Color& c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) put_pixel(img, x, y, c);
}

std::string format_tick(double v) {
  char buf[32];
  if (std::abs(v) >= 1000.0 || (std::abs(v) < 0.01 && v != 0.0))
    std::snprintf(buf, sizeof(buf), "%.1E", v);
  else
    std::snprintf(buf, sizeof(buf), "%.2F", v);
  return buf;
}

}  // namespace

void draw_text(render::Image& img, int x, int y, const std::string& text,
               const Color& color, int scale) {
  int cx = x;
  for (char raw : text) {
    char ch = char(std::toupper(static_cast<unsigned char>(raw)));
    if (ch < 32 || ch > 90) ch = '?';
    const uint8_t* glyph = kFont[ch - 32];
    for (int col = 0; col < 5; ++col)
      for (int row = 0; row < 7; ++row)
        if (glyph[col] & (1 << row))
          for (int sy = 0; sy < scale; ++sy)
            for (int sx = 0; sx < scale; ++sx)
              put_pixel(img, cx + col * scale + sx, y + row * scale + sy, color);
    cx += 6 * scale;
  }
}

render::Image line_plot(const std::vector<Series>& series, const Axes& axes,
                        int width, int height) {
  render::Image img;
  img.width = width;
  img.height = height;
  img.pixels.assign(size_t(width) * height * 3, 255);

  const int ml = 70, mr = 15, mt = 30, mb = 40;
  const int px0 = ml, px1 = width - mr, py0 = mt, py1 = height - mb;
  const Color black{0, 0, 0}, grey{210, 210, 210};

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (axes.y_min) y_min = *axes.y_min;
  if (axes.y_max) y_max = *axes.y_max;
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;

  auto to_px = [&](double x) {
    return px0 + int(std::lround((x - x_min) / (x_max - x_min) * (px1 - px0)));
  };
  auto to_py = [&](double y) {
    return py1 - int(std::lround((y - y_min) / (y_max - y_min) * (py1 - py0)));
  };

  for (int i = 0; i <= 4; ++i) {  // grid + ticks
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    const int y = to_py(fy);
    draw_line(img, px0, y, px1, y, grey);
    draw_text(img, 4, y - 3, format_tick(fy), black);
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const int x = to_px(fx);
    draw_line(img, x, py0, x, py1, grey);
    draw_text(img, x - 12, py1 + 8, format_tick(fx), black);
  }
  draw_line(img, px0, py0, px0, py1, black);
  draw_line(img, px0, py1, px1, py1, black);
  draw_text(img, px0, 10, axes.title, black);

  int legend_x = px0 + 10;
  for (const auto& s : series) {
    for (size_t i = 1; i < s.x.size(); ++i)
      draw_line(img, to_px(s.x[i - 1]), to_py(s.y[i - 1]), to_px(s.x[i]),
                to_py(s.y[i]), s.color);
    fill_rect(img, legend_x, py0 + 6, legend_x + 14, py0 + 10, s.color);
    draw_text(img, legend_x + 18, py0 + 4, s.label, black);
    legend_x += 18 + 6 * int(s.label.size()) + 16;
  }
  return img;
}

render::Image map_trajectory(const world::EnvironmentMap& map,
                             const std::vector<Pose>& trajectory, const Vec2& target,
                             int width) {
  const double wx = map.bounds.max.x - map.bounds.min.x;
  const double wy = map.bounds.max.y - map.bounds.min.y;
  const int margin = 20;
  const double scale = (width - 2 * margin) / wx;
  const int height = int(std::lround(wy * scale)) + 2 * margin;

  render::Image img;
  img.width = width;
  img.height = height;
  img.pixels.assign(size_t(width) * height * 3, 252);

  // y grows upward in world coordinates
  auto to_px = [&](const Vec2& p) {
    return std::pair{margin + int(std::lround((p.x - map.bounds.min.x) * scale)),
                     height - margin -
                         int(std::lround((p.y - map.bounds.min.y) * scale))};
  };

  for (const auto& w : map.walls) {
    auto [x0, y0] = to_px(w.a);
    auto [x1, y1] = to_px(w.b);
    draw_line(img, x0, y0, x1, y1, w.color);
  }
  const Color path_color{30, 90, 200};
  for (size_t i = 1; i < trajectory.size(); ++i) {
    auto [x0, y0] = to_px(trajectory[i - 1].position());
    auto [x1, y1] = to_px(trajectory[i].position());
    draw_line(img, x0, y0, x1, y1, path_color);
  }
  if (!trajectory.empty()) {
    auto [sx, sy] = to_px(trajectory.front().position());
    fill_rect(img, sx - 3, sy - 3, sx + 4, sy + 4, Color{20, 140, 20});
  }
  auto [tx, ty] = to_px(target);
  fill_rect(img, tx - 3, ty - 3, tx + 4, ty + 4, Color{200, 30, 30});
  for (const auto& t : map.train_targets) {
    auto [bx, by] = to_px(t);
    fill_rect(img, bx - 2, by - 2, bx + 3, by + 3, Color{60, 60, 220});
  }
  for (const auto& t : map.test_targets) {
    auto [gx, gy] = to_px(t);
    fill_rect(img, gx - 2, gy - 2, gx + 3, gy + 3, Color{40, 170, 40});
  }
  return img;
}

}  // namespace nav::plot
