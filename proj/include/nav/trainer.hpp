// The training loop: sample a target, collect a sampled-policy episode
// into the buffer when the target is a training one, update every N
// episodes; run held-out targets as gradient-free evaluation episodes
// and early-stop when their windowed success rate exceeds the threshold.
#pragma once

#include <deque>
#include <functional>

#include "nav/eval.hpp"
#include "nav/ppo.hpp"
#include "nav/task.hpp"

namespace nav::ppo {

struct TrainConfig {
  PPOConfig ppo;
  int64_t max_episodes = 5000;
  bool early_stop = true;
  eval::MetricWindows windows;
  uint64_t seed = 0;

  void validate() const;
};

struct EpisodeSummary {
  eval::EpisodeRecord record;
  uint64_t episode_seed = 0;
  eval::RateResult train_rate;
  eval::RateResult test_rate;
  bool updated = false;  // a PPO update ran after this episode
  UpdateStats update_stats;
};

enum class StopReason { early_stop, episode_budget };

struct TrainResult {
  StopReason stop = StopReason::episode_budget;
  int64_t episodes = 0;
  int64_t updates = 0;
  int64_t test_episodes = 0;
  double final_test_rate = 0.0;
};

class Trainer {
 public:
  Trainer(task::Task& task, policy::Network<float>& net, AdamOptimizer& opt,
          TrainConfig cfg);

  using EpisodeCallback = std::function<void(const EpisodeSummary&)>;
  TrainResult run(const EpisodeCallback& on_episode = {});

  // Collect one sampled-policy episode; exposed for tests.
  Episode rollout_episode(const Vec2& target, RngStream& rng);

  int64_t episode_index() const { return episode_index_; }
  void set_counters(int64_t episode_index, int64_t update_count);
  int64_t update_count() const { return update_count_; }

 private:
  task::Task& task_;
  policy::Network<float>& net_;
  AdamOptimizer& opt_;
  TrainConfig cfg_;
  ExperienceBuffer buffer_;
  int64_t episode_index_ = 0;
  int64_t update_count_ = 0;
  int64_t test_seen_ = 0;
  std::deque<bool> test_window_;
  std::deque<bool> train_window_;
};

}  // namespace nav::ppo
