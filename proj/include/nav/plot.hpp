// Static plot rendering for training curves and top-down trajectories.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nav/eval.hpp"
#include "nav/render.hpp"
#include "nav/world.hpp"

namespace nav::plot {

struct Series {
  std::string label;
  Color color;
  std::vector<double> x, y;
};

struct Axes {
  std::string title;
  std::optional<double> y_min, y_max;  // auto when unset
};

render::Image line_plot(const std::vector<Series>& series, const Axes& axes,
                        int width = 960, int height = 540);

render::Image map_trajectory(const world::EnvironmentMap& map,
                             const std::vector<Pose>& trajectory, const Vec2& target,
                             int width = 640);

void draw_text(render::Image& img, int x, int y, const std::string& text,
               const Color& color, int scale = 1);

}  // namespace nav::plot
