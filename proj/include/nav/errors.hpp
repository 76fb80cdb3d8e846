#pragma once

#include <stdexcept>
#include <string>

namespace nav {

// Exit codes used by the CLI: 0 ok, 2 config, 3 checkpoint, 4 divergence.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nav
