// Clipped-surrogate PPO: experience buffer, GAE, the surrogate loss over
// truncated-BPTT chunks, and the Adam update step.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nav/policy.hpp"
#include "nav/rng.hpp"
#include "nav/world.hpp"

namespace nav::ppo {

struct Transition {
  policy::Observation obs;
  policy::LstmStateValues state_in;  // recurrent state entering this step
  std::array<float, 2> u{};          // pre-squash action sample
  float log_prob_old = 0.0f;         // under the collecting policy
  float reward = 0.0f;
  float value_old = 0.0f;
  bool done = false;  // true terminal at this step (collision/arrival)
  float advantage = 0.0f;
  float ret = 0.0f;
};

struct Episode {
  std::vector<Transition> steps;
  float bootstrap_value = 0.0f;  // V(s_T) when truncated by the step cap
  world::Terminal terminal = world::Terminal::none;
  double total_reward = 0.0;
  Vec2 target;
  uint64_t seed = 0;
  int64_t index = 0;
};

// Completed non-test episodes awaiting an update; consumed exactly once.
class ExperienceBuffer {
 public:
  explicit ExperienceBuffer(size_t capacity_episodes)
      : capacity_(capacity_episodes) {}

  void push(Episode ep);
  size_t size() const { return episodes_.size(); }
  size_t capacity() const { return capacity_; }
  bool ready() const { return episodes_.size() >= capacity_; }
  const std::vector<Episode>& episodes() const { return episodes_; }
  std::vector<Episode> take_all();

 private:
  size_t capacity_;
  std::vector<Episode> episodes_;
};

struct PPOConfig {
  double clip_eps = 0.2;
  int epochs = 4;               // K
  int episodes_per_update = 8;  // N
  double gamma = 0.99;
  double lambda = 0.95;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  int bptt_chunk = 32;
  int minibatch_chunks = 8;
  double grad_clip = 0.5;
  bool normalize_advantages = true;
  double target_success_rate = 0.6;  // r

  void validate() const;
};

// delta_t = r_t + gamma V_{t+1} (1 - done) - V_t;
// A_t = delta_t + gamma lambda (1 - done) A_{t+1}; return_t = A_t + V_t.
void compute_gae(Episode& episode, double gamma, double lambda);

// Batch-wide mean-0 / std-1 advantages (population std, floor 1e-8).
void normalize_advantages(std::vector<Episode>& episodes);

// Per-sample objective of the clipped surrogate, as a plain function.
double clipped_surrogate(double ratio, double advantage, double clip_eps);

// A contiguous within-episode span re-run with BPTT during updates.
struct Chunk {
  const Episode* episode = nullptr;
  int begin = 0;
  int end = 0;
};

std::vector<Chunk> make_chunks(std::span<const Episode> episodes, int chunk_len);

struct SurrogateResult {
  ad::Tensor<float> total;  // policy + c_v * value - c_e * entropy
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int samples = 0;
  double max_abs_ratio_minus_one = 0.0;
  std::vector<double> per_sample_surrogate;  // filled when requested
  std::vector<double> per_sample_ratio;
};

SurrogateResult surrogate_loss(ad::Tape<float>& tape, const policy::Network<float>& net,
                               std::span<const Chunk> chunks, const PPOConfig& cfg,
                               bool keep_per_sample = false);

class AdamOptimizer {
 public:
  AdamOptimizer(const policy::ParameterSet<float>& params, double learning_rate);

  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  int64_t step_count() const { return t_; }

  void step(policy::ParameterSet<float>& params);

  // Checkpoint payload: step count plus flat first/second moments.
  std::vector<float> flat_moments() const;
  void restore(int64_t t, const std::vector<float>& flat);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
  friend struct OptimizerSnapshot;
};

struct UpdateStats {
  int64_t episodes_consumed = 0;
  int samples = 0;
  double policy_loss = 0.0;  // last minibatch of the last epoch
  double value_loss = 0.0;
  double entropy = 0.0;
  double first_epoch_max_abs_ratio_minus_one = 0.0;
};

// Snapshot theta_k, run K epochs of minibatch steps over BPTT chunks,
// then drop the consumed episodes. Restores theta_k and throws
// DivergenceError if a loss or gradient goes non-finite.
UpdateStats update(ExperienceBuffer& buffer, policy::Network<float>& net,
                   AdamOptimizer& opt, const PPOConfig& cfg, RngStream& rng);

uint64_t params_hash(const policy::ParameterSet<float>& params);

}  // namespace nav::ppo
