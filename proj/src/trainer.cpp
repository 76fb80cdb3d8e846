#include "nav/trainer.hpp"

#include "nav/errors.hpp"

namespace nav::ppo {

void TrainConfig::validate() const {
  ppo.validate();
  windows.validate();
  if (max_episodes < 1) throw ConfigError("train: max_episodes must be >= 1");
}

Trainer::Trainer(task::Task& task, policy::Network<float>& net, AdamOptimizer& opt,
                 TrainConfig cfg)
    : task_(task), net_(net), opt_(opt), cfg_(std::move(cfg)),
      buffer_(size_t(cfg_.ppo.episodes_per_update)) {
  cfg_.validate();
  if (cfg_.early_stop && !task_.has_test_targets())
    throw ConfigError(
        "train: early stop enabled but the environment has no test targets");
}

void Trainer::set_counters(int64_t episode_index, int64_t update_count) {
  episode_index_ = episode_index;
  update_count_ = update_count;
}

// Matches the float32 tensor path used inside the update, so the stored
// log-prob reproduces bit for bit when the parameters are unchanged.
namespace {
float logprob_f32(const policy::ActionDistribution& dist,
                  const std::array<float, 2>& u) {
  ad::Tape<float> quiet(false);
  auto mu = ad::Tensor<float>::from(
      {2}, {float(dist.mu[0]), float(dist.mu[1])});
  auto log_std = ad::Tensor<float>::from(
      {2}, {float(dist.log_std[0]), float(dist.log_std[1])});
  return policy::action_logprob_tensor(quiet, mu, log_std, u).item();
}
}  // namespace

Episode Trainer::rollout_episode(const Vec2& target, RngStream& rng) {
  Episode ep;
  ep.target = target;
  ep.index = episode_index_;

  policy::Observation obs = task_.reset(target, rng);
  policy::LstmState<float> state = net_.zero_state();
  for (;;) {
    const auto ev = net_.evaluate(obs, state);

    Transition tr;
    tr.obs = obs;
    tr.state_in = net_.state_values(state);
    const std::array<double, 2> u = policy::sample_pre_squash(ev.dist, rng);
    tr.u = {float(u[0]), float(u[1])};
    tr.log_prob_old = logprob_f32(ev.dist, tr.u);
    tr.value_old = float(ev.value);

    const world::Action action =
        policy::squash_action(double(tr.u[0]), double(tr.u[1]));
    const task::StepResult sr = task_.step(action, rng);
    tr.reward = float(sr.reward);
    tr.done = sr.terminal == world::Terminal::collision ||
              sr.terminal == world::Terminal::arrival;
    ep.total_reward += sr.reward;
    state = ev.state;
    ep.steps.push_back(std::move(tr));

    if (sr.terminal != world::Terminal::none) {
      ep.terminal = sr.terminal;
      if (sr.terminal == world::Terminal::timeout)
        ep.bootstrap_value = float(net_.evaluate(sr.obs, state).value);
      break;
    }
    obs = sr.obs;
  }
  return ep;
}

TrainResult Trainer::run(const EpisodeCallback& on_episode) {
  TrainResult result;
  const double target_rate = cfg_.ppo.target_success_rate;

  while (episode_index_ < cfg_.max_episodes) {
    const uint64_t ep_seed = derive_seed(cfg_.seed, 0, uint64_t(episode_index_));
    RngStream rng(ep_seed);
    const auto [target, is_test] = task_.sample_target(rng);

    EpisodeSummary summary;
    summary.episode_seed = ep_seed;

    if (!is_test) {
      Episode ep = rollout_episode(target, rng);
      ep.seed = ep_seed;

      eval::EpisodeRecord rec;
      rec.episode_index = episode_index_;
      rec.target = target;
      rec.is_test = false;
      rec.arrival = ep.terminal == world::Terminal::arrival;
      rec.total_reward = ep.total_reward;
      rec.steps = int(ep.steps.size());
      rec.terminal = ep.terminal;
      summary.record = std::move(rec);

      train_window_.push_back(summary.record.arrival);
      while (int(train_window_.size()) > cfg_.windows.train_window)
        train_window_.pop_front();

      buffer_.push(std::move(ep));
      if (buffer_.ready()) {
        RngStream update_rng(derive_seed(cfg_.seed, 1, uint64_t(update_count_)));
        summary.update_stats = update(buffer_, net_, opt_, cfg_.ppo, update_rng);
        summary.updated = true;
        ++update_count_;
        ++result.updates;
      }
    } else {
      eval::EpisodeRecord rec =
          eval::run_greedy_episode(net_, task_, target, true, rng, false);
      rec.episode_index = episode_index_;
      summary.record = std::move(rec);

      ++test_seen_;
      test_window_.push_back(summary.record.arrival);
      while (int(test_window_.size()) > cfg_.windows.test_window)
        test_window_.pop_front();
    }

    auto window_rate = [](const std::deque<bool>& w, int window) {
      eval::RateResult r;
      if (w.empty()) return r;
      size_t hits = 0;
      for (bool b : w) hits += b ? 1 : 0;
      r.rate = double(hits) / double(w.size());
      r.provisional = int(w.size()) < window;
      return r;
    };
    summary.train_rate = window_rate(train_window_, cfg_.windows.train_window);
    summary.test_rate = window_rate(test_window_, cfg_.windows.test_window);

    ++episode_index_;
    ++result.episodes;
    if (is_test) ++result.test_episodes;
    result.final_test_rate = summary.test_rate.rate;

    if (on_episode) on_episode(summary);

    // Algorithm-style early stop: strict comparison on a full window.
    if (cfg_.early_stop && is_test && !summary.test_rate.provisional &&
        summary.test_rate.rate > target_rate) {
      result.stop = StopReason::early_stop;
      return result;
    }
  }
  result.stop = StopReason::episode_budget;
  return result;
}

}  // namespace nav::ppo
