#include "nav/world.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nav/errors.hpp"
#include "json.hpp"

namespace nav::world {

using nlohmann::json;

void RewardConfig::validate() const {
  if (r_collision >= 0.0) throw ConfigError("reward: r_collision must be negative");
  if (r_arrival <= 0.0) throw ConfigError("reward: r_arrival must be positive");
  if (arrival_radius <= 0.0) throw ConfigError("reward: arrival_radius must be positive");
  if (progress_gain <= 0.0) throw ConfigError("reward: progress_gain must be positive");
  if (step_penalty < 0.0) throw ConfigError("reward: step_penalty must be non-negative");
  if (max_steps <= 0) throw ConfigError("reward: max_steps must be positive");
}

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::none: return "none";
    case Terminal::collision: return "collision";
    case Terminal::arrival: return "arrival";
    case Terminal::timeout: return "timeout";
  }
  return "?";
}

namespace {

Vec2 parse_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("env: " + what + " must be a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

Color parse_color(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("env: " + what + " must be an [r, g, b] triple");
  Color c;
  int v[3];
  for (int i = 0; i < 3; ++i) {
    v[i] = j[i].get<int>();
    if (v[i] < 0 || v[i] > 255)
      throw ConfigError("env: " + what + " channel out of [0, 255]");
  }
  c.r = uint8_t(v[0]);
  c.g = uint8_t(v[1]);
  c.b = uint8_t(v[2]);
  return c;
}

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end())
    throw ConfigError(std::string("env: missing field '") + field + "'");
  return *it;
}

std::string point_str(const Vec2& p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

}  // namespace

EnvironmentMap parse_env(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("env: " + origin + ": " + e.what());
  }

  EnvironmentMap map;
  try {
    const json& bounds = require(j, "bounds");
    map.bounds.min = parse_point(require(bounds, "min"), "bounds.min");
    map.bounds.max = parse_point(require(bounds, "max"), "bounds.max");
    if (map.bounds.max.x <= map.bounds.min.x || map.bounds.max.y <= map.bounds.min.y)
      throw ConfigError("env: bounds must have positive extent");

    for (const auto& w : require(j, "walls")) {
      Segment s;
      s.a = parse_point(require(w, "p1"), "wall p1");
      s.b = parse_point(require(w, "p2"), "wall p2");
      s.color = parse_color(require(w, "color"), "wall color");
      map.walls.push_back(s);
    }

    const json& sp = require(j, "start_pose");
    if (!sp.is_array() || sp.size() != 3)
      throw ConfigError("env: start_pose must be [x, y, heading]");
    map.start_pose = {sp[0].get<double>(), sp[1].get<double>(),
                      normalize_angle(sp[2].get<double>())};

    map.robot_radius = require(j, "robot_radius").get<double>();
    map.max_range = require(j, "max_range").get<double>();
    if (map.robot_radius <= 0.0) throw ConfigError("env: robot_radius must be positive");
    if (map.max_range <= 0.0) throw ConfigError("env: max_range must be positive");

    for (const auto& t : require(j, "train_targets"))
      map.train_targets.push_back(parse_point(t, "train target"));
    for (const auto& t : require(j, "test_targets"))
      map.test_targets.push_back(parse_point(t, "test target"));
  } catch (const json::exception& e) {
    throw ConfigError("env: " + origin + ": " + e.what());
  }

  auto check_target = [&](const Vec2& t, const char* kind) {
    if (!point_in_free_space(map, t, map.robot_radius))
      throw ConfigError("env: " + std::string(kind) + " target " + point_str(t) +
                        " in obstacle");
  };
  for (const auto& t : map.train_targets) check_target(t, "train");
  for (const auto& t : map.test_targets) check_target(t, "test");
  if (check_collision(map, map.start_pose))
    throw ConfigError("env: start pose " + point_str(map.start_pose.position()) +
                      " collides");
  for (const auto& t : map.test_targets)
    for (const auto& p : map.train_targets)
      if (p == t)
        throw ConfigError("env: target " + point_str(t) +
                          " appears in both train and test sets");
  return map;
}

EnvironmentMap load_env(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("env: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_env(ss.str(), path);
}

Pose step_kinematics(const Pose& pose, const Action& action, double dt) {
  Pose out = pose;
  const double v = action.linear;
  const double w = action.angular;
  if (std::abs(w) < 1e-6) {
    out.x += v * dt * std::cos(pose.heading);
    out.y += v * dt * std::sin(pose.heading);
    out.heading = normalize_angle(pose.heading);
  } else {
    const double radius = v / w;
    const double h1 = pose.heading + w * dt;
    out.x += radius * (std::sin(h1) - std::sin(pose.heading));
    out.y += radius * (std::cos(pose.heading) - std::cos(h1));
    out.heading = normalize_angle(h1);
  }
  return out;
}

bool point_in_free_space(const EnvironmentMap& map, const Vec2& p, double radius) {
  if (p.x < map.bounds.min.x + radius || p.x > map.bounds.max.x - radius ||
      p.y < map.bounds.min.y + radius || p.y > map.bounds.max.y - radius)
    return false;
  for (const auto& w : map.walls)
    if (point_segment_distance(p, w.a, w.b) < radius) return false;
  return true;
}

bool check_collision(const EnvironmentMap& map, const Pose& pose) {
  return !point_in_free_space(map, pose.position(), map.robot_radius);
}

std::pair<double, double> relative_goal(const Pose& pose, const Vec2& target) {
  const Vec2 d = target - pose.position();
  const double dist = norm(d);
  if (dist == 0.0) return {0.0, 0.0};
  return {dist, normalize_angle(std::atan2(d.y, d.x) - pose.heading)};
}

StepOutcome compute_reward(const RobotState& before, const RobotState& after,
                           bool collided, const RewardConfig& cfg) {
  StepOutcome out;
  out.new_state = after;
  if (collided) {
    out.reward = cfg.r_collision;
    out.terminal = Terminal::collision;
  } else if (after.dist_to_target < cfg.arrival_radius) {
    out.reward = cfg.r_arrival;
    out.terminal = Terminal::arrival;
  } else {
    out.reward = cfg.progress_gain * (before.dist_to_target - after.dist_to_target) -
                 cfg.step_penalty;
    out.terminal =
        after.step_count >= cfg.max_steps ? Terminal::timeout : Terminal::none;
  }
  return out;
}

std::pair<Vec2, bool> sample_target(const EnvironmentMap& map, RngStream& rng) {
  const size_t n_train = map.train_targets.size();
  const size_t n_total = n_train + map.test_targets.size();
  if (n_total == 0) throw ConfigError("env: no targets to sample from");
  const size_t i = size_t(rng.uniform_int(n_total));
  if (i < n_train) return {map.train_targets[i], false};
  return {map.test_targets[i - n_train], true};
}

Environment::Environment(EnvironmentMap map, RewardConfig reward, double dt)
    : map_(std::move(map)), reward_(reward), dt_(dt) {
  reward_.validate();
  if (dt_ <= 0.0) throw ConfigError("env: dt must be positive");
}

void Environment::reset(const Vec2& target) {
  state_.pose = map_.start_pose;
  state_.target = target;
  state_.dist_to_target = distance(map_.start_pose.position(), target);
  state_.prev_dist = state_.dist_to_target;
  state_.step_count = 0;
}

StepOutcome Environment::step(const Action& action) {
  RobotState before = state_;
  RobotState after = state_;
  after.pose = step_kinematics(state_.pose, action, dt_);
  after.prev_dist = before.dist_to_target;
  after.dist_to_target = distance(after.pose.position(), state_.target);
  after.step_count = before.step_count + 1;
  const bool collided = check_collision(map_, after.pose);
  StepOutcome out = compute_reward(before, after, collided, reward_);
  state_ = out.new_state;
  return out;
}

}  // namespace nav::world
