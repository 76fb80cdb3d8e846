// Command-line entry points: train, eval, replay, render-debug, gradcheck.
// Exit codes: 0 ok, 2 config error, 3 checkpoint error, 4 divergence.
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "nav/checkpoint.hpp"
#include "nav/config.hpp"
#include "nav/errors.hpp"
#include "nav/eval.hpp"
#include "nav/plot.hpp"
#include "nav/png_io.hpp"
#include "nav/policy.hpp"
#include "nav/ppo.hpp"
#include "nav/task.hpp"
#include "nav/trainer.hpp"

namespace fs = std::filesystem;
using namespace nav;

namespace {

struct BuiltTask {
  std::unique_ptr<task::Task> task;
  const world::EnvironmentMap* map = nullptr;  // null for the bandit
};

BuiltTask build_task(const cli::RunConfig& cfg) {
  BuiltTask out;
  if (cfg.mode == "bandit") {
    out.task = std::make_unique<task::BanditTask>(
        cfg.render.width, cfg.render.height, cfg.bandit_target_linear,
        cfg.bandit_target_angular);
    return out;
  }
  world::EnvironmentMap map = world::load_env(cfg.env_spec);
  world::Environment env(std::move(map), cfg.reward, cfg.dt);
  auto nav_task = std::make_unique<task::NavigationTask>(std::move(env), cfg.render,
                                                         cfg.odometry_noise_std);
  out.map = nav_task->map();
  out.task = std::move(nav_task);
  return out;
}

// Pin the goal normalization to the map it was trained on.
void resolve_goal_scale(cli::RunConfig& cfg, const world::EnvironmentMap* map) {
  if (cfg.network.goal_dist_scale > 0.0) return;
  cfg.network.goal_dist_scale = map != nullptr ? map->diagonal() : 1.0;
}

std::string csv_row(const ppo::EpisodeSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%llu,%.6f,%.6f,%d,%d,%.6f,%s,%.6f,%.6f\n",
                (long long)s.record.episode_index,
                (unsigned long long)s.episode_seed, s.record.target.x,
                s.record.target.y, s.record.is_test ? 1 : 0, s.record.steps,
                s.record.total_reward, world::terminal_name(s.record.terminal),
                s.train_rate.rate, s.test_rate.rate);
  return buf;
}

void write_metric_plots(const std::vector<ppo::EpisodeSummary>& summaries,
                        const std::string& out_dir) {
  plot::Series train_rate{"train", Color{60, 60, 220}, {}, {}};
  plot::Series test_rate{"test", Color{40, 170, 40}, {}, {}};
  plot::Series train_reward{"train", Color{60, 60, 220}, {}, {}};
  plot::Series test_reward{"test", Color{40, 170, 40}, {}, {}};

  for (const auto& s : summaries) {
    const double x = double(s.record.episode_index);
    if (s.record.is_test) {
      test_rate.x.push_back(x);
      test_rate.y.push_back(s.test_rate.rate);
    } else {
      train_rate.x.push_back(x);
      train_rate.y.push_back(s.train_rate.rate);
    }
  }
  // Rolling average reward over the same windows as the success rates.
  auto rolling = [](std::deque<double>& w, double v, size_t cap) {
    w.push_back(v);
    if (w.size() > cap) w.pop_front();
    double sum = 0.0;
    for (double r : w) sum += r;
    return sum / double(w.size());
  };
  std::deque<double> train_w, test_w;
  for (const auto& s : summaries) {
    const double x = double(s.record.episode_index);
    if (s.record.is_test) {
      test_reward.x.push_back(x);
      test_reward.y.push_back(rolling(test_w, s.record.total_reward, 100));
    } else {
      train_reward.x.push_back(x);
      train_reward.y.push_back(rolling(train_w, s.record.total_reward, 200));
    }
  }

  plot::Axes rate_axes{"success rate vs episode", 0.0, 1.0};
  render::write_png(plot::line_plot({train_rate, test_rate}, rate_axes),
                    out_dir + "/success_rate.png");
  plot::Axes reward_axes{"average reward vs episode", {}, {}};
  render::write_png(plot::line_plot({train_reward, test_reward}, reward_axes),
                    out_dir + "/average_reward.png");
}

int cmd_train(const std::string& config_path, uint64_t seed_override,
              bool have_seed, int64_t max_episodes_override) {
  cli::RunConfig cfg = cli::load_run_config(config_path);
  cli::apply_seed_env_override(cfg);
  if (have_seed) cfg.seed = seed_override;
  if (max_episodes_override > 0) cfg.max_episodes = max_episodes_override;

  BuiltTask built = build_task(cfg);
  resolve_goal_scale(cfg, built.map);
  const std::string config_snapshot = cfg.serialize();

  policy::Network<float> net(cfg.network);
  RngStream init_rng(derive_seed(cfg.seed, 3, 0));
  net.init_weights(init_rng);
  ppo::AdamOptimizer opt(net.params(), cfg.ppo.learning_rate);

  ppo::TrainConfig tc;
  tc.ppo = cfg.ppo;
  tc.max_episodes = cfg.max_episodes;
  tc.early_stop = cfg.early_stop;
  tc.windows = cfg.windows;
  tc.seed = cfg.seed;
  ppo::Trainer trainer(*built.task, net, opt, tc);

  fs::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/training_log.csv", std::ios::binary);
  if (!log) throw ConfigError("train: cannot open log in '" + cfg.out_dir + "'");
  log << "episode,seed,target_x,target_y,is_test,steps,total_reward,terminal,"
         "train_success_rate,test_success_rate\n";

  std::vector<ppo::EpisodeSummary> summaries;
  auto save = [&](const std::string& name) {
    const auto ck = cli::make_checkpoint(net.params(), &opt, config_snapshot,
                                         trainer.episode_index(),
                                         trainer.update_count(), cfg.seed);
    cli::save_checkpoint(ck, cfg.out_dir + "/" + name);
    return cfg.out_dir + "/" + name;
  };

  ppo::TrainResult result;
  try {
    result = trainer.run([&](const ppo::EpisodeSummary& s) {
      log << csv_row(s);
      summaries.push_back(s);
      if ((s.record.episode_index + 1) % cfg.checkpoint_every == 0)
        save("checkpoint_latest.ckpt");
    });
  } catch (const DivergenceError& e) {
    // update() already restored the pre-update parameters
    const std::string path = save("checkpoint_lastgood.ckpt");
    log.close();
    std::cerr << "E_DIVERGENCE: " << e.what() << " (last good checkpoint: " << path
              << ")\n";
    return 4;
  }

  const std::string final_path =
      save(result.stop == ppo::StopReason::early_stop ? "checkpoint_best.ckpt"
                                                      : "checkpoint_final.ckpt");
  log.close();
  if (!summaries.empty()) write_metric_plots(summaries, cfg.out_dir);

  std::printf("episodes %lld  updates %lld  test-episodes %lld\n",
              (long long)result.episodes, (long long)result.updates,
              (long long)result.test_episodes);
  std::printf("stop: %s  test success rate %.4f\n",
              result.stop == ppo::StopReason::early_stop ? "early (rate above target)"
                                                         : "episode budget",
              result.final_test_rate);
  std::printf("checkpoint: %s\n", final_path.c_str());
  return 0;
}

struct LoadedCheckpoint {
  cli::Checkpoint ck;
  cli::RunConfig cfg;
  std::unique_ptr<policy::Network<float>> net;
};

LoadedCheckpoint load_net(const std::string& ckpt_path,
                          const std::string& env_override) {
  LoadedCheckpoint out;
  out.ck = cli::load_checkpoint(ckpt_path);
  out.cfg = cli::parse_run_config(out.ck.config_text,
                                  ckpt_path + " (embedded config)", "");
  if (!env_override.empty()) out.cfg.env_spec = env_override;
  out.net = std::make_unique<policy::Network<float>>(out.cfg.network);
  cli::apply_checkpoint(out.ck, out.net->params(), nullptr);
  return out;
}

int cmd_eval(const std::string& ckpt_path, const std::string& env_override,
             const std::string& selector, int episodes, uint64_t seed,
             bool have_seed, const std::string& out_dir, int trajectories) {
  LoadedCheckpoint lc = load_net(ckpt_path, env_override);
  BuiltTask built = build_task(lc.cfg);
  if (built.map == nullptr)
    throw ConfigError("eval: checkpoint was trained in bandit mode");

  std::vector<Vec2> targets;
  if (selector == "train" || selector == "all")
    targets.insert(targets.end(), built.map->train_targets.begin(),
                   built.map->train_targets.end());
  if (selector == "test" || selector == "all")
    targets.insert(targets.end(), built.map->test_targets.begin(),
                   built.map->test_targets.end());
  if (selector != "train" && selector != "test" && selector != "all")
    throw ConfigError("eval: selector must be train, test or all");
  if (targets.empty())
    throw ConfigError("eval: selector '" + selector +
                      "' matches no targets in this environment");

  const uint64_t eval_seed = have_seed ? seed : lc.ck.master_seed;
  const auto records = eval::evaluate(*lc.net, *built.task, targets, episodes,
                                      eval_seed, trajectories > 0);

  const auto rate = eval::success_rate(records, episodes);
  const double avg = eval::average_reward(records, episodes);
  int by_terminal[4] = {0, 0, 0, 0};
  for (const auto& r : records) by_terminal[int(r.terminal)]++;
  std::printf("selector %s  episodes %zu\n", selector.c_str(), records.size());
  std::printf("success rate %.4f%s\n", rate.rate,
              rate.provisional ? " (provisional)" : "");
  std::printf("average reward %.4f\n", avg);
  std::printf("terminals: arrival %d  collision %d  timeout %d\n",
              by_terminal[int(world::Terminal::arrival)],
              by_terminal[int(world::Terminal::collision)],
              by_terminal[int(world::Terminal::timeout)]);

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir + "/eval_records.csv", std::ios::binary);
  csv << "episode,target_x,target_y,arrival,steps,total_reward,terminal\n";
  for (const auto& r : records) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%d,%d,%.6f,%s\n",
                  (long long)r.episode_index, r.target.x, r.target.y,
                  r.arrival ? 1 : 0, r.steps, r.total_reward,
                  world::terminal_name(r.terminal));
    csv << buf;
  }
  for (int i = 0; i < trajectories && i < int(records.size()); ++i) {
    const auto& r = records[size_t(i)];
    const std::string base = out_dir + "/trajectory_" + std::to_string(i);
    eval::write_trajectory_csv(r, r.target, lc.cfg.dt, base + ".csv");
    render::write_png(plot::map_trajectory(*built.map, r.trajectory, r.target),
                      base + ".png");
  }
  return 0;
}

int cmd_replay(const std::string& ckpt_path, const std::string& env_override,
               uint64_t episode_seed, bool greedy, const std::string& out_prefix) {
  LoadedCheckpoint lc = load_net(ckpt_path, env_override);
  BuiltTask built = build_task(lc.cfg);
  if (built.map == nullptr)
    throw ConfigError("replay: checkpoint was trained in bandit mode");

  // Same draw order as the trainer: target first, then the episode body.
  RngStream rng(episode_seed);
  const auto [target, is_test] = built.task->sample_target(rng);

  eval::EpisodeRecord rec;
  if (greedy || is_test) {
    rec = eval::run_greedy_episode(*lc.net, *built.task, target, is_test, rng, true);
  } else {
    rec.target = target;
    policy::Observation obs = built.task->reset(target, rng);
    auto state = lc.net->zero_state();
    rec.trajectory.push_back(*built.task->pose());
    for (;;) {
      const auto ev = lc.net->evaluate(obs, state);
      state = ev.state;
      const auto u = policy::sample_pre_squash(ev.dist, rng);
      const std::array<float, 2> uf{float(u[0]), float(u[1])};
      const auto action = policy::squash_action(double(uf[0]), double(uf[1]));
      const auto sr = built.task->step(action, rng);
      rec.total_reward += sr.reward;
      ++rec.steps;
      rec.trajectory.push_back(*built.task->pose());
      rec.step_rewards.push_back(sr.reward);
      obs = sr.obs;
      if (sr.terminal != world::Terminal::none) {
        rec.terminal = sr.terminal;
        rec.arrival = sr.terminal == world::Terminal::arrival;
        break;
      }
    }
  }

  eval::write_trajectory_csv(rec, target, lc.cfg.dt, out_prefix + ".csv");
  render::write_png(plot::map_trajectory(*built.map, rec.trajectory, target),
                    out_prefix + ".png");
  std::printf("seed %llu  target (%.3f, %.3f)  %s  steps %d  reward %.4f  %s\n",
              (unsigned long long)episode_seed, target.x, target.y,
              is_test ? "test" : "train", rec.steps, rec.total_reward,
              world::terminal_name(rec.terminal));
  return 0;
}

int cmd_render_debug(const std::string& env_path, const std::string& pose_str,
                     const std::string& out_path, int scale, int width, int height,
                     double fov_deg, const std::string& raw_path) {
  world::EnvironmentMap map = world::load_env(env_path);
  Pose pose = map.start_pose;
  if (!pose_str.empty()) {
    if (std::sscanf(pose_str.c_str(), "%lf,%lf,%lf", &pose.x, &pose.y,
                    &pose.heading) != 3)
      throw ConfigError("render-debug: pose must be x,y,heading");
    pose.heading = normalize_angle(pose.heading);
  }
  if (world::check_collision(map, pose))
    std::cerr << "warning: pose is inside an obstacle; rendering anyway\n";

  render::RenderParams params;
  params.width = width;
  params.height = height;
  params.fov = fov_deg * std::numbers::pi / 180.0;
  const render::Image img = render::render_rgb(map, pose, params);
  render::write_png(render::upscale(img, scale), out_path);
  if (!raw_path.empty()) {
    const auto bytes = render::raw_dump(img);
    std::ofstream f(raw_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  }
  std::printf("wrote %s (%dx%d upscaled x%d)\n", out_path.c_str(), width, height,
              scale);
  return 0;
}

int cmd_gradcheck(int trials, uint64_t seed) {
  using T = ad::Tensor<double>;
  RngStream rng(seed);
  auto fill = [&](T& t, double s) {
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = s * rng.gaussian();
  };
  double worst = 0.0;
  auto report = [&](const char* name, double err) {
    std::printf("%-12s max relative error %.3e\n", name, err);
    worst = std::max(worst, err);
  };

  double err_dense = 0.0, err_conv = 0.0, err_lstm = 0.0;
  for (int i = 0; i < trials; ++i) {
    {
      const int n = 3 + int(rng.uniform_int(6)), m = 2 + int(rng.uniform_int(5));
      std::vector<T> in{T::zeros({n}, true), T::zeros({m, n}, true),
                        T::zeros({m}, true)};
      for (auto& t : in) fill(t, 1.0);
      err_dense = std::max(
          err_dense,
          ad::grad_check<double>(
              [](ad::Tape<double>& tp, std::vector<T>& v) {
                return ad::sum(tp, ad::tanh(tp, ad::dense(tp, v[0], v[1], v[2])));
              },
              in, 1e-5));
    }
    {
      const int h = 6 + int(rng.uniform_int(3)), w = 6 + int(rng.uniform_int(3));
      std::vector<T> in{T::zeros({2, h, w}, true), T::zeros({3, 2, 3, 3}, true)};
      for (auto& t : in) fill(t, 0.7);
      err_conv = std::max(
          err_conv,
          ad::grad_check<double>(
              [](ad::Tape<double>& tp, std::vector<T>& v) {
                return ad::sum(tp, ad::tanh(tp, ad::conv2d(tp, v[0], v[1], 2)));
              },
              in, 1e-5));
    }
    {
      const int n = 4, hn = 5, steps = 5;
      std::vector<T> in{T::zeros({n}, true), T::zeros({hn}, true),
                        T::zeros({hn}, true), T::zeros({4 * hn, n + hn}, true),
                        T::zeros({4 * hn}, true)};
      for (auto& t : in) fill(t, 0.6);
      err_lstm = std::max(
          err_lstm,
          ad::grad_check<double>(
              [steps](ad::Tape<double>& tp, std::vector<T>& v) {
                T h = v[1], c = v[2], acc = T::scalar(0.0);
                for (int s = 0; s < steps; ++s) {
                  auto [h2, c2] = ad::lstm_cell(tp, v[0], h, c, v[3], v[4]);
                  h = h2;
                  c = c2;
                  acc = ad::add(tp, acc, ad::sum(tp, h));
                }
                return acc;
              },
              in, 1e-5));
    }
  }
  report("dense", err_dense);
  report("conv2d", err_conv);
  report("lstm_cell", err_lstm);
  if (worst >= 1e-4) {
    std::cerr << "E_INTERNAL: gradient check failed (max relative error " << worst
              << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mapless-navigation RL stack"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, env_path, selector = "all";
  std::string out_dir = "evalout", pose_str, out_path = "view.png", raw_path;
  std::string out_prefix = "replay";
  uint64_t seed = 0, episode_seed = 0;
  bool greedy = false;
  int episodes = 100, trajectories = 0, scale = 8, width = 64, height = 48;
  int trials = 10;
  int64_t max_episodes = 0;
  double fov_deg = 90.0;

  auto* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config_path, "run configuration file")->required();
  auto* train_seed = train->add_option("--seed", seed, "override the config seed");
  train->add_option("--max-episodes", max_episodes, "override the episode budget");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--env", env_path, "environment spec override");
  eval_cmd->add_option("--selector", selector, "train | test | all");
  eval_cmd->add_option("--episodes", episodes, "number of evaluation episodes");
  auto* eval_seed_opt = eval_cmd->add_option("--seed", seed, "evaluation seed");
  eval_cmd->add_option("--out-dir", out_dir, "directory for records and plots");
  eval_cmd->add_option("--trajectories", trajectories,
                       "export the first N trajectories");

  auto* replay = app.add_subcommand("replay", "re-run a logged episode from its seed");
  replay->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  replay->add_option("--env", env_path, "environment spec override");
  replay->add_option("--seed", episode_seed, "episode seed from the training log")
      ->required();
  replay->add_flag("--greedy", greedy, "force the deterministic mean action");
  replay->add_option("--out-prefix", out_prefix, "output path prefix");

  auto* rdebug = app.add_subcommand("render-debug", "write an observation PNG");
  rdebug->add_option("--env", env_path, "environment spec")->required();
  rdebug->add_option("--pose", pose_str, "x,y,heading (default: start pose)");
  rdebug->add_option("--out", out_path, "output PNG path");
  rdebug->add_option("--scale", scale, "upscale factor");
  rdebug->add_option("--width", width, "columns");
  rdebug->add_option("--height", height, "rows");
  rdebug->add_option("--fov-deg", fov_deg, "field of view in degrees");
  rdebug->add_option("--raw", raw_path, "also dump the raw observation bytes");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference layer checks");
  gc->add_option("--trials", trials, "randomized trials per layer");
  gc->add_option("--seed", seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, seed, train_seed->count() > 0, max_episodes);
    if (eval_cmd->parsed())
      return cmd_eval(ckpt_path, env_path, selector, episodes, seed,
                      eval_seed_opt->count() > 0, out_dir, trajectories);
    if (replay->parsed())
      return cmd_replay(ckpt_path, env_path, episode_seed, greedy, out_prefix);
    if (rdebug->parsed())
      return cmd_render_debug(env_path, pose_str, out_path, scale, width, height,
                              fov_deg, raw_path);
    if (gc->parsed()) return cmd_gradcheck(trials, seed);
  } catch (const ConfigError& e) {
    std::cerr << "E_CONFIG: " << e.what() << "\n";
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "E_CHECKPOINT: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "E_DIVERGENCE: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
