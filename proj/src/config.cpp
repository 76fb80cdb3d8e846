#include "nav/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nav/errors.hpp"

namespace nav::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Sectioned key/value text; '#' and ';' start comments.
class Ini {
 public:
  static Ini parse(const std::string& text, const std::string& origin) {
    Ini ini;
    ini.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(line_no) +
                            ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      ini.values_[section + "." + key] = value;
    }
    return ini;
  }

  bool has(const std::string& sec, const std::string& key) const {
    return values_.count(sec + "." + key) > 0;
  }

  std::string str(const std::string& sec, const std::string& key,
                  const std::string& fallback) {
    const std::string full = sec + "." + key;
    consumed_.insert(full);
    auto it = values_.find(full);
    return it == values_.end() ? fallback : it->second;
  }

  std::string required(const std::string& sec, const std::string& key) {
    const std::string full = sec + "." + key;
    consumed_.insert(full);
    auto it = values_.find(full);
    if (it == values_.end())
      throw ConfigError(origin_ + ": missing required key [" + sec + "] " + key);
    return it->second;
  }

  double num(const std::string& sec, const std::string& key, double fallback) {
    const std::string s = str(sec, key, "");
    if (s.empty()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + sec + "] " + key + " = '" + s +
                        "' is not a number");
    }
  }

  int64_t integer(const std::string& sec, const std::string& key, int64_t fallback) {
    const std::string s = str(sec, key, "");
    if (s.empty()) return fallback;
    try {
      size_t pos = 0;
      const int64_t v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + sec + "] " + key + " = '" + s +
                        "' is not an integer");
    }
  }

  uint64_t uinteger(const std::string& sec, const std::string& key,
                    uint64_t fallback) {
    const std::string s = str(sec, key, "");
    if (s.empty()) return fallback;
    try {
      size_t pos = 0;
      const uint64_t v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + sec + "] " + key + " = '" + s +
                        "' is not an unsigned integer");
    }
  }

  bool boolean(const std::string& sec, const std::string& key, bool fallback) {
    const std::string s = str(sec, key, "");
    if (s.empty()) return fallback;
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ConfigError(origin_ + ": [" + sec + "] " + key + " = '" + s +
                      "' is not a boolean");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

Color parse_color_triplet(const std::string& s, const std::string& what) {
  int r, g, b;
  if (std::sscanf(s.c_str(), "%d,%d,%d", &r, &g, &b) != 3 || r < 0 || r > 255 ||
      g < 0 || g > 255 || b < 0 || b > 255)
    throw ConfigError(what + " = '" + s + "' is not an r,g,b triple");
  return {uint8_t(r), uint8_t(g), uint8_t(b)};
}

// "8x5s2,16x5s2,32x3s2" -> channels x kernel s stride per layer.
std::vector<policy::ConvSpec> parse_conv_spec(const std::string& s) {
  std::vector<policy::ConvSpec> layers;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    policy::ConvSpec spec;
    if (std::sscanf(part.c_str(), "%dx%ds%d", &spec.out_channels, &spec.kernel,
                    &spec.stride) != 3)
      throw ConfigError("network: conv layer '" + part +
                        "' must look like <channels>x<kernel>s<stride>");
    layers.push_back(spec);
  }
  if (layers.empty()) throw ConfigError("network: conv must list at least one layer");
  return layers;
}

std::string conv_spec_string(const std::vector<policy::ConvSpec>& conv) {
  std::string s;
  for (size_t i = 0; i < conv.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(conv[i].out_channels) + "x" + std::to_string(conv[i].kernel) +
         "s" + std::to_string(conv[i].stride);
  }
  return s;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::string& base_dir) {
  Ini ini = Ini::parse(text, origin);
  RunConfig cfg;

  cfg.mode = ini.str("run", "mode", cfg.mode);
  if (cfg.mode != "navigate" && cfg.mode != "bandit")
    throw ConfigError(origin + ": [run] mode must be navigate or bandit");
  cfg.seed = ini.uinteger("run", "seed", cfg.seed);
  cfg.max_episodes = ini.integer("run", "max_episodes", cfg.max_episodes);
  cfg.out_dir = ini.str("run", "out_dir", cfg.out_dir);
  cfg.checkpoint_every = ini.integer("run", "checkpoint_every", cfg.checkpoint_every);
  cfg.workers = int(ini.integer("run", "workers", cfg.workers));

  if (cfg.mode == "navigate") {
    std::string spec = ini.required("env", "spec");
    std::filesystem::path p(spec);
    if (p.is_relative() && !base_dir.empty())
      p = std::filesystem::path(base_dir) / p;
    cfg.env_spec = p.lexically_normal().string();
  } else {
    cfg.env_spec = ini.str("env", "spec", "");
  }
  cfg.dt = ini.num("env", "dt", cfg.dt);
  cfg.odometry_noise_std =
      ini.num("env", "odometry_noise_std", cfg.odometry_noise_std);

  cfg.reward.r_collision = ini.num("reward", "r_collision", cfg.reward.r_collision);
  cfg.reward.r_arrival = ini.num("reward", "r_arrival", cfg.reward.r_arrival);
  cfg.reward.arrival_radius =
      ini.num("reward", "arrival_radius", cfg.reward.arrival_radius);
  cfg.reward.progress_gain =
      ini.num("reward", "progress_gain", cfg.reward.progress_gain);
  cfg.reward.step_penalty = ini.num("reward", "step_penalty", cfg.reward.step_penalty);
  cfg.reward.max_steps = int(ini.integer("reward", "max_steps", cfg.reward.max_steps));

  cfg.render.width = int(ini.integer("render", "width", cfg.render.width));
  cfg.render.height = int(ini.integer("render", "height", cfg.render.height));
  cfg.render.fov =
      ini.num("render", "fov_deg", cfg.render.fov * 180.0 / std::numbers::pi) *
      std::numbers::pi / 180.0;
  cfg.render.height_scale =
      ini.num("render", "height_scale", cfg.render.height_scale);
  cfg.render.shade_k = ini.num("render", "shade_k", cfg.render.shade_k);
  if (ini.has("render", "ceiling"))
    cfg.render.ceiling =
        parse_color_triplet(ini.str("render", "ceiling", ""), "render: ceiling");
  else
    ini.str("render", "ceiling", "");
  if (ini.has("render", "floor"))
    cfg.render.floor =
        parse_color_triplet(ini.str("render", "floor", ""), "render: floor");
  else
    ini.str("render", "floor", "");

  if (ini.has("network", "conv"))
    cfg.network.conv = parse_conv_spec(ini.str("network", "conv", ""));
  else
    ini.str("network", "conv", "");
  cfg.network.image_width = cfg.render.width;
  cfg.network.image_height = cfg.render.height;
  cfg.network.image_features =
      int(ini.integer("network", "image_features", cfg.network.image_features));
  cfg.network.lstm_units =
      int(ini.integer("network", "lstm_units", cfg.network.lstm_units));
  cfg.network.trunk_units =
      int(ini.integer("network", "trunk_units", cfg.network.trunk_units));
  cfg.network.log_std_init =
      ini.num("network", "log_std_init", cfg.network.log_std_init);
  cfg.network.goal_dist_scale = ini.num("network", "goal_dist_scale", 0.0);

  cfg.ppo.clip_eps = ini.num("ppo", "clip_eps", cfg.ppo.clip_eps);
  cfg.ppo.epochs = int(ini.integer("ppo", "epochs", cfg.ppo.epochs));
  cfg.ppo.episodes_per_update =
      int(ini.integer("ppo", "episodes_per_update", cfg.ppo.episodes_per_update));
  cfg.ppo.gamma = ini.num("ppo", "gamma", cfg.ppo.gamma);
  cfg.ppo.lambda = ini.num("ppo", "lambda", cfg.ppo.lambda);
  cfg.ppo.learning_rate = ini.num("ppo", "learning_rate", cfg.ppo.learning_rate);
  cfg.ppo.value_coef = ini.num("ppo", "value_coef", cfg.ppo.value_coef);
  cfg.ppo.entropy_coef = ini.num("ppo", "entropy_coef", cfg.ppo.entropy_coef);
  cfg.ppo.bptt_chunk = int(ini.integer("ppo", "bptt_chunk", cfg.ppo.bptt_chunk));
  cfg.ppo.minibatch_chunks =
      int(ini.integer("ppo", "minibatch_chunks", cfg.ppo.minibatch_chunks));
  cfg.ppo.grad_clip = ini.num("ppo", "grad_clip", cfg.ppo.grad_clip);
  cfg.ppo.normalize_advantages =
      ini.boolean("ppo", "normalize_advantages", cfg.ppo.normalize_advantages);

  cfg.ppo.target_success_rate =
      ini.num("train", "target_success_rate", cfg.ppo.target_success_rate);
  cfg.early_stop = ini.boolean("train", "early_stop", cfg.early_stop);

  cfg.windows.train_window =
      int(ini.integer("eval", "train_window", cfg.windows.train_window));
  cfg.windows.test_window =
      int(ini.integer("eval", "test_window", cfg.windows.test_window));

  cfg.bandit_target_linear =
      ini.num("bandit", "target_linear", cfg.bandit_target_linear);
  cfg.bandit_target_angular =
      ini.num("bandit", "target_angular", cfg.bandit_target_angular);

  ini.reject_unknown();
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (mode == "navigate" && env_spec.empty())
    throw ConfigError("config: [env] spec is required in navigate mode");
  if (workers < 1) throw ConfigError("config: [run] workers must be >= 1");
  if (max_episodes < 1) throw ConfigError("config: [run] max_episodes must be >= 1");
  if (checkpoint_every < 1)
    throw ConfigError("config: [run] checkpoint_every must be >= 1");
  if (dt <= 0.0) throw ConfigError("config: [env] dt must be positive");
  if (odometry_noise_std < 0.0)
    throw ConfigError("config: [env] odometry_noise_std must be >= 0");
  if (render.width < 2 || render.height < 2)
    throw ConfigError("config: [render] image must be at least 2x2");
  if (!(render.fov > 0.0 && render.fov < std::numbers::pi))
    throw ConfigError("config: [render] fov_deg must be in (0, 180)");
  reward.validate();
  ppo.validate();
  windows.validate();
  network.conv_flat_size();  // throws if a layer underruns its kernel
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "[run]\n"
     << "mode = " << mode << "\n"
     << "seed = " << seed << "\n"
     << "max_episodes = " << max_episodes << "\n"
     << "out_dir = " << out_dir << "\n"
     << "checkpoint_every = " << checkpoint_every << "\n"
     << "workers = " << workers << "\n\n";
  os << "[env]\n"
     << "spec = " << env_spec << "\n"
     << "dt = " << fmt_double(dt) << "\n"
     << "odometry_noise_std = " << fmt_double(odometry_noise_std) << "\n\n";
  os << "[reward]\n"
     << "r_collision = " << fmt_double(reward.r_collision) << "\n"
     << "r_arrival = " << fmt_double(reward.r_arrival) << "\n"
     << "arrival_radius = " << fmt_double(reward.arrival_radius) << "\n"
     << "progress_gain = " << fmt_double(reward.progress_gain) << "\n"
     << "step_penalty = " << fmt_double(reward.step_penalty) << "\n"
     << "max_steps = " << reward.max_steps << "\n\n";
  os << "[render]\n"
     << "width = " << render.width << "\n"
     << "height = " << render.height << "\n"
     << "fov_deg = " << fmt_double(render.fov * 180.0 / std::numbers::pi) << "\n"
     << "height_scale = " << fmt_double(render.height_scale) << "\n"
     << "shade_k = " << fmt_double(render.shade_k) << "\n"
     << "ceiling = " << int(render.ceiling.r) << "," << int(render.ceiling.g) << ","
     << int(render.ceiling.b) << "\n"
     << "floor = " << int(render.floor.r) << "," << int(render.floor.g) << ","
     << int(render.floor.b) << "\n\n";
  os << "[network]\n"
     << "conv = " << conv_spec_string(network.conv) << "\n"
     << "image_features = " << network.image_features << "\n"
     << "lstm_units = " << network.lstm_units << "\n"
     << "trunk_units = " << network.trunk_units << "\n"
     << "log_std_init = " << fmt_double(network.log_std_init) << "\n"
     << "goal_dist_scale = " << fmt_double(network.goal_dist_scale) << "\n\n";
  os << "[ppo]\n"
     << "clip_eps = " << fmt_double(ppo.clip_eps) << "\n"
     << "epochs = " << ppo.epochs << "\n"
     << "episodes_per_update = " << ppo.episodes_per_update << "\n"
     << "gamma = " << fmt_double(ppo.gamma) << "\n"
     << "lambda = " << fmt_double(ppo.lambda) << "\n"
     << "learning_rate = " << fmt_double(ppo.learning_rate) << "\n"
     << "value_coef = " << fmt_double(ppo.value_coef) << "\n"
     << "entropy_coef = " << fmt_double(ppo.entropy_coef) << "\n"
     << "bptt_chunk = " << ppo.bptt_chunk << "\n"
     << "minibatch_chunks = " << ppo.minibatch_chunks << "\n"
     << "grad_clip = " << fmt_double(ppo.grad_clip) << "\n"
     << "normalize_advantages = " << (ppo.normalize_advantages ? "true" : "false")
     << "\n\n";
  os << "[train]\n"
     << "target_success_rate = " << fmt_double(ppo.target_success_rate) << "\n"
     << "early_stop = " << (early_stop ? "true" : "false") << "\n\n";
  os << "[eval]\n"
     << "train_window = " << windows.train_window << "\n"
     << "test_window = " << windows.test_window << "\n\n";
  os << "[bandit]\n"
     << "target_linear = " << fmt_double(bandit_target_linear) << "\n"
     << "target_angular = " << fmt_double(bandit_target_angular) << "\n";
  return os.str();
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string base =
      std::filesystem::path(path).parent_path().string();
  return parse_run_config(ss.str(), path, base);
}

void apply_seed_env_override(RunConfig& cfg) {
  const char* env = std::getenv("NAVLEARN_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    size_t pos = 0;
    cfg.seed = std::stoull(env, &pos);
    if (env[pos] != '\0') throw std::invalid_argument(env);
  } catch (const std::exception&) {
    throw ConfigError(std::string("NAVLEARN_SEED = '") + env +
                      "' is not an unsigned integer");
  }
}

}  // namespace nav::cli
