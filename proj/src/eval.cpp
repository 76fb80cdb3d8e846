#include "nav/eval.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "nav/errors.hpp"

namespace nav::eval {

void MetricWindows::validate() const {
  if (train_window < 1 || test_window < 1)
    throw ConfigError("metrics: windows must be >= 1");
}

RateResult success_rate(std::span<const EpisodeRecord> records, int window) {
  if (records.empty())
    throw std::invalid_argument("success_rate: no episode records");
  const size_t n = std::min(records.size(), size_t(window));
  size_t hits = 0;
  for (size_t i = records.size() - n; i < records.size(); ++i)
    if (records[i].arrival) ++hits;
  return {double(hits) / double(n), n < size_t(window)};
}

double average_reward(std::span<const EpisodeRecord> records, int window) {
  if (records.empty())
    throw std::invalid_argument("average_reward: no episode records");
  const size_t n = std::min(records.size(), size_t(window));
  double sum = 0.0;
  for (size_t i = records.size() - n; i < records.size(); ++i)
    sum += records[i].total_reward;
  return sum / double(n);
}

EpisodeRecord run_greedy_episode(const policy::Network<float>& net, task::Task& task,
                                 const Vec2& target, bool is_test, RngStream& rng,
                                 bool capture_trajectory) {
  EpisodeRecord rec;
  rec.target = target;
  rec.is_test = is_test;

  policy::Observation obs = task.reset(target, rng);
  policy::LstmState<float> state = net.zero_state();
  if (capture_trajectory && task.pose()) rec.trajectory.push_back(*task.pose());

  for (;;) {
    const auto ev = net.evaluate(obs, state);
    state = ev.state;
    const world::Action action = policy::mean_action(ev.dist);
    const task::StepResult sr = task.step(action, rng);
    rec.total_reward += sr.reward;
    ++rec.steps;
    if (capture_trajectory && task.pose()) {
      rec.trajectory.push_back(*task.pose());
      rec.step_rewards.push_back(sr.reward);
    }
    obs = sr.obs;
    if (sr.terminal != world::Terminal::none) {
      rec.terminal = sr.terminal;
      rec.arrival = sr.terminal == world::Terminal::arrival;
      break;
    }
  }
  return rec;
}

std::vector<EpisodeRecord> evaluate(const policy::Network<float>& net,
                                    task::Task& task, std::span<const Vec2> targets,
                                    int n_episodes, uint64_t seed,
                                    bool capture_trajectories) {
  if (targets.empty()) throw std::invalid_argument("evaluate: no targets given");
  std::vector<EpisodeRecord> records;
  records.reserve(size_t(n_episodes));
  for (int i = 0; i < n_episodes; ++i) {
    RngStream rng(derive_seed(seed, 2, uint64_t(i)));
    const Vec2& target = targets[size_t(i) % targets.size()];
    EpisodeRecord rec =
        run_greedy_episode(net, task, target, false, rng, capture_trajectories);
    rec.episode_index = i;
    records.push_back(std::move(rec));
  }
  return records;
}

void write_trajectory_csv(const EpisodeRecord& record, const Vec2& target,
                          double dt, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("trajectory: cannot open '" + path + "'");
  f << "t,x,y,heading,dist_to_target,reward\n";
  char line[160];
  for (size_t i = 0; i < record.trajectory.size(); ++i) {
    const Pose& p = record.trajectory[i];
    const double d = distance(p.position(), target);
    // Pose 0 is the start; rewards belong to the step that produced a pose.
    const double r = i == 0 ? 0.0 : record.step_rewards[i - 1];
    std::snprintf(line, sizeof(line), "%.3f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  double(i) * dt, p.x, p.y, p.heading, d, r);
    f << line;
  }
}

}  // namespace nav::eval
