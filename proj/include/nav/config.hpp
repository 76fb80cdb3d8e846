// Run configuration: flat key/value text with one section per module.
// Every constant that is not pinned by the problem statement is surfaced
// here with its default.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "nav/eval.hpp"
#include "nav/policy.hpp"
#include "nav/ppo.hpp"
#include "nav/render.hpp"
#include "nav/world.hpp"

namespace nav::cli {

struct RunConfig {
  // [run]
  std::string mode = "navigate";  // navigate | bandit
  uint64_t seed = 0;
  int64_t max_episodes = 5000;
  std::string out_dir = "runs/out";
  int64_t checkpoint_every = 500;
  int workers = 1;

  // [env]
  std::string env_spec;  // resolved relative to the config file
  double dt = 0.2;
  double odometry_noise_std = 0.0;

  world::RewardConfig reward;
  render::RenderParams render;
  policy::NetworkConfig network;  // goal_dist_scale 0 = derive from the map
  ppo::PPOConfig ppo;

  // [train]
  bool early_stop = true;

  eval::MetricWindows windows;

  // [bandit]
  double bandit_target_linear = 0.2;
  double bandit_target_angular = 0.0;

  void validate() const;
  // Canonical text form (all keys explicit); embedded in checkpoints.
  std::string serialize() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

// Last-resort override used by the CLI: NAVLEARN_SEED.
void apply_seed_env_override(RunConfig& cfg);

}  // namespace nav::cli
