// The motion-planner network: conv stack -> 32-dim image features ->
// LSTM(features, goal) -> LSTM(+ previous velocity and reward) -> shared
// trunk -> squashed-Gaussian action heads and a value head.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "nav/autodiff.hpp"
#include "nav/render.hpp"
#include "nav/rng.hpp"
#include "nav/world.hpp"

namespace nav::policy {

struct Observation {
  render::Image image;           // quantized bytes, normalized on input
  double goal_dist = 0.0;        // meters
  double goal_angle = 0.0;       // radians, (-pi, pi]
  double prev_linear = 0.0;      // commanded velocity of the previous step
  double prev_angular = 0.0;
  double prev_reward = 0.0;      // zero at episode step 0
};

struct ActionDistribution {
  std::array<double, 2> mu{};       // pre-squash means
  std::array<double, 2> log_std{};  // clamped to [-5, 1]
};

inline constexpr double kMaxLinear = 0.3;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;
// Saturation guard: tanh/sigmoid of +-18 are still strictly inside the
// open action intervals in double precision.
inline constexpr double kSquashClamp = 18.0;

struct ConvSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 0;
};

struct NetworkConfig {
  int image_width = 64;
  int image_height = 48;
  std::vector<ConvSpec> conv{{8, 5, 2}, {16, 5, 2}, {32, 3, 2}};
  int image_features = 32;
  int lstm_units = 256;
  int trunk_units = 256;
  double goal_dist_scale = 1.0;  // set to the map diagonal
  double log_std_init = -0.5;

  // Flattened conv output size; throws if some layer underruns its kernel.
  int conv_flat_size() const;
  bool operator==(const NetworkConfig&) const = default;
};

template <class S>
struct NamedParam {
  std::string name;
  ad::Tensor<S> tensor;
};

template <class S>
class ParameterSet {
 public:
  ad::Tensor<S>& add(const std::string& name, std::vector<int> shape);
  ad::Tensor<S>& find(const std::string& name);
  const ad::Tensor<S>& find(const std::string& name) const;

  std::vector<NamedParam<S>>& items() { return items_; }
  const std::vector<NamedParam<S>>& items() const { return items_; }

  int64_t total_size() const;
  void zero_grads();
  bool all_finite() const;

  std::vector<std::vector<S>> snapshot() const;
  void restore(const std::vector<std::vector<S>>& snap);

  // Flat little-endian-friendly payload, always 32-bit.
  std::vector<float> to_flat() const;
  void from_flat(const std::vector<float>& flat);

 private:
  std::vector<NamedParam<S>> items_;
};

template <class S>
struct LstmState {
  ad::Tensor<S> h1, c1, h2, c2;
};

// Plain value snapshot of a recurrent state, for rollout storage.
struct LstmStateValues {
  std::vector<float> h1, c1, h2, c2;
};

template <class S>
struct ObsTensors {
  ad::Tensor<S> image;  // [3, H, W] in [0, 1]
  ad::Tensor<S> goal;   // [2] scaled (d / diag, angle / pi)
  ad::Tensor<S> prev;   // [3] previous linear, angular, reward
};

template <class S>
class Network {
 public:
  explicit Network(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  ParameterSet<S>& params() { return params_; }
  const ParameterSet<S>& params() const { return params_; }

  void init_weights(RngStream& rng);

  LstmState<S> zero_state() const;
  LstmState<S> state_from_values(const LstmStateValues& v) const;
  LstmStateValues state_values(const LstmState<S>& s) const;

  ObsTensors<S> make_inputs(const Observation& obs) const;

  struct Forward {
    ad::Tensor<S> mu;       // [2]
    ad::Tensor<S> log_std;  // [2], clamped
    ad::Tensor<S> value;    // [1]
    LstmState<S> state;
  };
  Forward forward(ad::Tape<S>& tape, const ObsTensors<S>& obs,
                  const LstmState<S>& state) const;

  // Rollout-path wrapper: no gradient recording, plain outputs.
  struct EvalOut {
    ActionDistribution dist;
    double value = 0.0;
    LstmState<S> state;
  };
  EvalOut evaluate(const Observation& obs, const LstmState<S>& state) const;

 private:
  NetworkConfig cfg_;
  ParameterSet<S> params_;
};

// ---- squash map and densities (double math, shared by sampling and eval) ----

world::Action squash_action(double u_linear, double u_angular);
// log |d action / d u| at u; constant with respect to the parameters.
double squash_log_jacobian(double u_linear, double u_angular);

// Pre-squash Gaussian draw, clamped to +-kSquashClamp.
std::array<double, 2> sample_pre_squash(const ActionDistribution& dist,
                                        RngStream& rng);
world::Action mean_action(const ActionDistribution& dist);

std::pair<world::Action, double> sample_action(const ActionDistribution& dist,
                                               RngStream& rng);
// Inverse-squashes the action; throws std::domain_error on/outside bounds.
double log_prob(const ActionDistribution& dist, const world::Action& action);
double log_prob_of_pre_squash(const ActionDistribution& dist,
                              const std::array<double, 2>& u);
double entropy(const ActionDistribution& dist);

// Tensor-path log probability of a stored pre-squash sample; the rollout
// and the PPO update both go through here so the ratio at unchanged
// parameters is exactly one.
template <class S>
ad::Tensor<S> action_logprob_tensor(ad::Tape<S>& tape, const ad::Tensor<S>& mu,
                                    const ad::Tensor<S>& log_std,
                                    const std::array<float, 2>& u) {
  std::vector<S> uv{S(u[0]), S(u[1])};
  ad::Tensor<S> lp = ad::gaussian_logprob(tape, mu, log_std, uv);
  const S log_j = S(squash_log_jacobian(double(u[0]), double(u[1])));
  return ad::affine(tape, lp, S(1), -log_j);
}

// Closed-form entropy of the pre-squash Gaussian as a tensor (gradient
// flows into log_std only).
template <class S>
ad::Tensor<S> entropy_tensor(ad::Tape<S>& tape, const ad::Tensor<S>& log_std) {
  ad::Tensor<S> s = ad::sum(tape, log_std);
  const S c = S(0.5) * S(log_std.size()) *
              S(std::log(2.0 * std::numbers::pi) + 1.0);
  return ad::affine(tape, s, S(1), c);
}

// Orthogonal rows (or columns when rows > cols) scaled by gain.
template <class S>
void orthogonal_init(ad::Tensor<S>& w, double gain, RngStream& rng);

}  // namespace nav::policy

#include "nav/policy_impl.hpp"
