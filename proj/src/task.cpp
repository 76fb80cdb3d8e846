#include "nav/task.hpp"

#include <cmath>

namespace nav::task {

NavigationTask::NavigationTask(world::Environment env, render::RenderParams render,
                               double odometry_noise_std)
    : env_(std::move(env)), render_(render), noise_std_(odometry_noise_std) {}

std::pair<Vec2, bool> NavigationTask::sample_target(RngStream& rng) {
  return world::sample_target(env_.map(), rng);
}

policy::Observation NavigationTask::observe(RngStream& rng) const {
  policy::Observation obs;
  obs.image = render::render_rgb(env_.map(), env_.state().pose, render_);
  auto [d, alpha] = world::relative_goal(env_.state().pose, env_.state().target);
  if (noise_std_ > 0.0) {
    d = std::max(0.0, d + noise_std_ * rng.gaussian());
    alpha = normalize_angle(alpha + noise_std_ * rng.gaussian());
  }
  obs.goal_dist = d;
  obs.goal_angle = alpha;
  obs.prev_linear = prev_linear_;
  obs.prev_angular = prev_angular_;
  obs.prev_reward = prev_reward_;
  return obs;
}

policy::Observation NavigationTask::reset(const Vec2& target, RngStream& rng) {
  env_.reset(target);
  prev_linear_ = 0.0;
  prev_angular_ = 0.0;
  prev_reward_ = 0.0;
  return observe(rng);
}

StepResult NavigationTask::step(const world::Action& action, RngStream& rng) {
  const world::StepOutcome outcome = env_.step(action);
  prev_linear_ = action.linear;
  prev_angular_ = action.angular;
  prev_reward_ = outcome.reward;
  StepResult out;
  out.obs = observe(rng);
  out.reward = outcome.reward;
  out.terminal = outcome.terminal;
  return out;
}

BanditTask::BanditTask(int image_width, int image_height, double target_linear,
                       double target_angular)
    : width_(image_width),
      height_(image_height),
      target_linear_(target_linear),
      target_angular_(target_angular) {}

policy::Observation BanditTask::observe() const {
  policy::Observation obs;
  obs.image.width = width_;
  obs.image.height = height_;
  obs.image.pixels.assign(size_t(width_) * height_ * 3, 0);
  return obs;
}

std::pair<Vec2, bool> BanditTask::sample_target(RngStream&) {
  return {Vec2{0.0, 0.0}, false};
}

policy::Observation BanditTask::reset(const Vec2&, RngStream&) { return observe(); }

StepResult BanditTask::step(const world::Action& action, RngStream&) {
  const double dl = action.linear - target_linear_;
  const double da = action.angular - target_angular_;
  StepResult out;
  out.obs = observe();
  out.reward = -(dl * dl) - (da * da);
  out.terminal = world::Terminal::arrival;
  return out;
}

}  // namespace nav::task
