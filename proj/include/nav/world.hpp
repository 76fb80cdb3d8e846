// Environment geometry, unicycle kinematics, collision tests, the shaped
// reward, and the per-episode state machine built on top of them.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nav/geometry.hpp"
#include "nav/rng.hpp"

namespace nav::world {

struct EnvironmentMap {
  std::vector<Segment> walls;
  Rect bounds;
  Pose start_pose;
  std::vector<Vec2> train_targets;  // P
  std::vector<Vec2> test_targets;   // P', held out from gradient updates
  double robot_radius = 0.2;
  double max_range = 10.0;

  double diagonal() const { return bounds.diagonal(); }
};

struct RobotState {
  Pose pose;
  Vec2 target;
  double dist_to_target = 0.0;   // d_t
  double prev_dist = 0.0;        // d_{t-1}
  int step_count = 0;
};

struct RewardConfig {
  double r_collision = -10.0;
  double r_arrival = 10.0;
  double arrival_radius = 0.5;   // c_d
  double progress_gain = 10.0;   // c_r
  double step_penalty = 0.05;    // c_p
  int max_steps = 500;

  void validate() const;
};

enum class Terminal { none, collision, arrival, timeout };

const char* terminal_name(Terminal t);

struct StepOutcome {
  double reward = 0.0;
  Terminal terminal = Terminal::none;
  RobotState new_state;
};

struct Action {
  double linear = 0.0;   // m/s, (0, 0.3)
  double angular = 0.0;  // rad/s, (-1, 1)
};

// Parse + validate an environment document (JSON text, fields: bounds,
// walls, start_pose, robot_radius, max_range, train_targets, test_targets).
EnvironmentMap load_env(const std::string& path);
EnvironmentMap parse_env(const std::string& json_text, const std::string& origin);

// Exact unicycle arc integration; straight-line when |w| < 1e-6.
Pose step_kinematics(const Pose& pose, const Action& action, double dt);

// True iff the disc of robot_radius centered at pose overlaps a wall or
// pokes outside the bounds deflated by robot_radius. Touching exactly at
// robot_radius counts as free.
bool check_collision(const EnvironmentMap& map, const Pose& pose);
bool point_in_free_space(const EnvironmentMap& map, const Vec2& p, double radius);

// Distance and bearing of target in the robot frame; bearing in (-pi, pi],
// defined as 0 when the distance is 0.
std::pair<double, double> relative_goal(const Pose& pose, const Vec2& target);

// Eq-style branch order: collision, then arrival, then shaped progress.
StepOutcome compute_reward(const RobotState& before, const RobotState& after,
                           bool collided, const RewardConfig& cfg);

// Uniform draw over P union P'; second element is true when the draw is a
// held-out test target.
std::pair<Vec2, bool> sample_target(const EnvironmentMap& map, RngStream& rng);

// Episode lifecycle: reset to the fixed start pose toward a target, then
// step with the reward bookkeeping of compute_reward.
class Environment {
 public:
  Environment(EnvironmentMap map, RewardConfig reward, double dt);

  const EnvironmentMap& map() const { return map_; }
  const RewardConfig& reward_config() const { return reward_; }
  double dt() const { return dt_; }
  const RobotState& state() const { return state_; }

  void reset(const Vec2& target);
  StepOutcome step(const Action& action);

 private:
  EnvironmentMap map_;
  RewardConfig reward_;
  double dt_;
  RobotState state_;
};

}  // namespace nav::world
