// Planar geometry primitives shared by the world model and the renderer.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

struct Color {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Color&) const = default;
};

struct Segment {
  Vec2 a, b;
  Color color;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, (-pi, pi]

  Vec2 position() const { return {x, y}; }
};

struct Rect {
  Vec2 min, max;

  double diagonal() const { return distance(min, max); }
  bool contains(const Vec2& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

// Map any angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(a + std::numbers::pi, two_pi);
  if (t <= 0.0) t += two_pi;
  return t - std::numbers::pi;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  double t = dot(p - a, ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + ab * t);
}

}  // namespace nav
