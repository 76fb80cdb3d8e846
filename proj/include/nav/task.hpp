// Episode-level environment interface used by the trainer and the
// evaluator, with the navigation task and a one-step bandit for
// optimizer sanity checks.
#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "nav/policy.hpp"
#include "nav/render.hpp"
#include "nav/rng.hpp"
#include "nav/world.hpp"

namespace nav::task {

struct StepResult {
  policy::Observation obs;
  double reward = 0.0;
  world::Terminal terminal = world::Terminal::none;
};

class Task {
 public:
  virtual ~Task() = default;

  virtual std::pair<Vec2, bool> sample_target(RngStream& rng) = 0;
  virtual policy::Observation reset(const Vec2& target, RngStream& rng) = 0;
  virtual StepResult step(const world::Action& action, RngStream& rng) = 0;

  virtual const world::EnvironmentMap* map() const { return nullptr; }
  virtual std::optional<Pose> pose() const { return std::nullopt; }
  virtual bool has_test_targets() const = 0;
};

class NavigationTask : public Task {
 public:
  NavigationTask(world::Environment env, render::RenderParams render,
                 double odometry_noise_std = 0.0);

  std::pair<Vec2, bool> sample_target(RngStream& rng) override;
  policy::Observation reset(const Vec2& target, RngStream& rng) override;
  StepResult step(const world::Action& action, RngStream& rng) override;

  const world::EnvironmentMap* map() const override { return &env_.map(); }
  std::optional<Pose> pose() const override { return env_.state().pose; }
  bool has_test_targets() const override {
    return !env_.map().test_targets.empty();
  }
  const render::RenderParams& render_params() const { return render_; }
  const world::Environment& env() const { return env_; }

 private:
  policy::Observation observe(RngStream& rng) const;

  world::Environment env_;
  render::RenderParams render_;
  double noise_std_;
  double prev_linear_ = 0.0, prev_angular_ = 0.0, prev_reward_ = 0.0;
};

// Constant observation, one step per episode, reward
// -(linear - target_linear)^2 - (angular - target_angular)^2.
class BanditTask : public Task {
 public:
  BanditTask(int image_width, int image_height, double target_linear,
             double target_angular);

  std::pair<Vec2, bool> sample_target(RngStream& rng) override;
  policy::Observation reset(const Vec2& target, RngStream& rng) override;
  StepResult step(const world::Action& action, RngStream& rng) override;
  bool has_test_targets() const override { return false; }

  double target_linear() const { return target_linear_; }
  double target_angular() const { return target_angular_; }

 private:
  policy::Observation observe() const;

  int width_, height_;
  double target_linear_, target_angular_;
};

}  // namespace nav::task
