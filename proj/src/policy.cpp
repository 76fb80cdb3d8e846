#include "nav/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "nav/errors.hpp"

namespace nav::policy {

int NetworkConfig::conv_flat_size() const {
  int c = 3, h = image_height, w = image_width;
  for (size_t i = 0; i < conv.size(); ++i) {
    const auto& layer = conv[i];
    if (layer.out_channels < 1 || layer.kernel < 1 || layer.stride < 1)
      throw ConfigError("network: conv layer " + std::to_string(i) +
                        " has non-positive dimensions");
    if (h < layer.kernel || w < layer.kernel)
      throw ConfigError("network: conv layer " + std::to_string(i) + " input " +
                        std::to_string(h) + "x" + std::to_string(w) +
                        " smaller than kernel " + std::to_string(layer.kernel));
    h = (h - layer.kernel) / layer.stride + 1;
    w = (w - layer.kernel) / layer.stride + 1;
    c = layer.out_channels;
  }
  return c * h * w;
}

namespace {

double softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double stable_sigmoid_d(double x) { return ad::detail::stable_sigmoid(x); }

}  // namespace

world::Action squash_action(double u_linear, double u_angular) {
  return {kMaxLinear * stable_sigmoid_d(u_linear), std::tanh(u_angular)};
}

double squash_log_jacobian(double u_linear, double u_angular) {
  // d(0.3 sigmoid)/du = 0.3 s(u)(1-s(u));  d tanh/du = 1 - tanh^2.
  const double lin = std::log(kMaxLinear) - softplus(u_linear) - softplus(-u_linear);
  const double ang = 2.0 * (std::log(2.0) - u_angular - softplus(-2.0 * u_angular));
  return lin + ang;
}

std::array<double, 2> sample_pre_squash(const ActionDistribution& dist,
                                        RngStream& rng) {
  std::array<double, 2> u;
  for (int i = 0; i < 2; ++i) {
    const double v = dist.mu[i] + std::exp(dist.log_std[i]) * rng.gaussian();
    u[i] = std::clamp(v, -kSquashClamp, kSquashClamp);
  }
  return u;
}

world::Action mean_action(const ActionDistribution& dist) {
  return squash_action(std::clamp(dist.mu[0], -kSquashClamp, kSquashClamp),
                       std::clamp(dist.mu[1], -kSquashClamp, kSquashClamp));
}

double log_prob_of_pre_squash(const ActionDistribution& dist,
                              const std::array<double, 2>& u) {
  double lp = -std::log(2.0 * std::numbers::pi);  // -D/2 log(2pi), D = 2
  for (int i = 0; i < 2; ++i) {
    const double z = (u[i] - dist.mu[i]) * std::exp(-dist.log_std[i]);
    lp += -0.5 * z * z - dist.log_std[i];
  }
  return lp - squash_log_jacobian(u[0], u[1]);
}

std::pair<world::Action, double> sample_action(const ActionDistribution& dist,
                                               RngStream& rng) {
  const std::array<double, 2> u = sample_pre_squash(dist, rng);
  return {squash_action(u[0], u[1]), log_prob_of_pre_squash(dist, u)};
}

double log_prob(const ActionDistribution& dist, const world::Action& action) {
  if (!(action.linear > 0.0 && action.linear < kMaxLinear))
    throw std::domain_error("log_prob: linear velocity outside (0, 0.3)");
  if (!(action.angular > -1.0 && action.angular < 1.0))
    throw std::domain_error("log_prob: angular velocity outside (-1, 1)");
  const double p = action.linear / kMaxLinear;
  const std::array<double, 2> u{std::log(p / (1.0 - p)), std::atanh(action.angular)};
  return log_prob_of_pre_squash(dist, u);
}

double entropy(const ActionDistribution& dist) {
  const double c = 0.5 * (std::log(2.0 * std::numbers::pi) + 1.0);
  return dist.log_std[0] + dist.log_std[1] + 2.0 * c;
}

}  // namespace nav::policy
