// Windowed success-rate / average-reward metrics and deterministic
// (mean-action) evaluation episodes with optional trajectory capture.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nav/policy.hpp"
#include "nav/task.hpp"
#include "nav/world.hpp"

namespace nav::eval {

struct EpisodeRecord {
  int64_t episode_index = 0;
  Vec2 target;
  bool is_test = false;
  bool arrival = false;
  double total_reward = 0.0;
  int steps = 0;
  world::Terminal terminal = world::Terminal::none;
  std::vector<Pose> trajectory;       // captured only when requested
  std::vector<double> step_rewards;   // aligned with trajectory[1..]
};

struct MetricWindows {
  int train_window = 200;
  int test_window = 100;

  void validate() const;
};

struct RateResult {
  double rate = 0.0;
  bool provisional = false;  // fewer records than the window
};

RateResult success_rate(std::span<const EpisodeRecord> records, int window);
double average_reward(std::span<const EpisodeRecord> records, int window);

// One greedy-mean episode toward the given target. Never touches
// parameters; the rng only drives optional observation noise.
EpisodeRecord run_greedy_episode(const policy::Network<float>& net, task::Task& task,
                                 const Vec2& target, bool is_test, RngStream& rng,
                                 bool capture_trajectory);

// n_episodes greedy episodes cycling through targets.
std::vector<EpisodeRecord> evaluate(const policy::Network<float>& net,
                                    task::Task& task, std::span<const Vec2> targets,
                                    int n_episodes, uint64_t seed,
                                    bool capture_trajectories = false);

void write_trajectory_csv(const EpisodeRecord& record, const Vec2& target,
                          double dt, const std::string& path);

}  // namespace nav::eval
