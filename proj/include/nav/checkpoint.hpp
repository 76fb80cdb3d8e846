// Binary checkpoints: version byte, named shape manifest, flat float32
// payload, optimizer moments, config snapshot, counters, seed, CRC.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nav/policy.hpp"
#include "nav/ppo.hpp"

namespace nav::cli {

inline constexpr uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  uint8_t version = kCheckpointVersion;
  std::vector<std::pair<std::string, std::vector<int>>> manifest;
  std::vector<float> payload;
  bool has_optimizer = false;
  int64_t adam_step = 0;
  std::vector<float> moments;  // first moments then second, flat
  std::string config_text;
  int64_t episode_counter = 0;
  int64_t update_counter = 0;
  uint64_t master_seed = 0;
};

Checkpoint make_checkpoint(const policy::ParameterSet<float>& params,
                           const ppo::AdamOptimizer* opt,
                           const std::string& config_text, int64_t episode_counter,
                           int64_t update_counter, uint64_t master_seed);

// Shape-checks the manifest against the parameter set, then loads values
// (and optimizer moments when both sides have them).
void apply_checkpoint(const Checkpoint& ck, policy::ParameterSet<float>& params,
                      ppo::AdamOptimizer* opt);

std::vector<uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes,
                             const std::string& origin);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nav::cli
