// Template definitions for policy.hpp; kept out of line for readability.
#pragma once

#include <stdexcept>

#include "nav/errors.hpp"
#include "nav/policy.hpp"

namespace nav::policy {

// ---- ParameterSet ----

template <class S>
ad::Tensor<S>& ParameterSet<S>::add(const std::string& name, std::vector<int> shape) {
  items_.push_back({name, ad::Tensor<S>::zeros(std::move(shape), true)});
  return items_.back().tensor;
}

template <class S>
ad::Tensor<S>& ParameterSet<S>::find(const std::string& name) {
  for (auto& it : items_)
    if (it.name == name) return it.tensor;
  throw std::out_of_range("parameter '" + name + "' not found");
}

template <class S>
const ad::Tensor<S>& ParameterSet<S>::find(const std::string& name) const {
  for (const auto& it : items_)
    if (it.name == name) return it.tensor;
  throw std::out_of_range("parameter '" + name + "' not found");
}

template <class S>
int64_t ParameterSet<S>::total_size() const {
  int64_t n = 0;
  for (const auto& it : items_) n += it.tensor.size();
  return n;
}

template <class S>
void ParameterSet<S>::zero_grads() {
  for (auto& it : items_) it.tensor.zero_grad();
}

template <class S>
bool ParameterSet<S>::all_finite() const {
  for (const auto& it : items_)
    for (int64_t i = 0; i < it.tensor.size(); ++i)
      if (!std::isfinite(it.tensor.data()[i])) return false;
  return true;
}

template <class S>
std::vector<std::vector<S>> ParameterSet<S>::snapshot() const {
  std::vector<std::vector<S>> snap;
  snap.reserve(items_.size());
  for (const auto& it : items_) snap.push_back(it.tensor.values());
  return snap;
}

template <class S>
void ParameterSet<S>::restore(const std::vector<std::vector<S>>& snap) {
  if (snap.size() != items_.size())
    throw std::invalid_argument("parameter snapshot size mismatch");
  for (size_t i = 0; i < items_.size(); ++i) items_[i].tensor.values() = snap[i];
}

template <class S>
std::vector<float> ParameterSet<S>::to_flat() const {
  std::vector<float> flat;
  flat.reserve(size_t(total_size()));
  for (const auto& it : items_)
    for (int64_t i = 0; i < it.tensor.size(); ++i)
      flat.push_back(float(it.tensor.data()[i]));
  return flat;
}

template <class S>
void ParameterSet<S>::from_flat(const std::vector<float>& flat) {
  if (int64_t(flat.size()) != total_size())
    throw std::invalid_argument("flat parameter payload length mismatch");
  size_t k = 0;
  for (auto& it : items_)
    for (int64_t i = 0; i < it.tensor.size(); ++i)
      it.tensor.data()[i] = S(flat[k++]);
}

// ---- init ----

template <class S>
void orthogonal_init(ad::Tensor<S>& w, double gain, RngStream& rng) {
  const int rows = w.shape()[0];
  const int cols = int(w.size()) / rows;
  const bool wide = rows <= cols;
  const int nvec = wide ? rows : cols;
  const int dim = wide ? cols : rows;

  // Gaussian matrix, then modified Gram-Schmidt over the shorter side.
  std::vector<double> m(size_t(nvec) * dim);
  for (auto& v : m) v = rng.gaussian();
  for (int i = 0; i < nvec; ++i) {
    double* vi = m.data() + size_t(i) * dim;
    for (int j = 0; j < i; ++j) {
      const double* vj = m.data() + size_t(j) * dim;
      double proj = 0.0;
      for (int k = 0; k < dim; ++k) proj += vi[k] * vj[k];
      for (int k = 0; k < dim; ++k) vi[k] -= proj * vj[k];
    }
    double n2 = 0.0;
    for (int k = 0; k < dim; ++k) n2 += vi[k] * vi[k];
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < dim; ++k) vi[k] *= inv;
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = wide ? m[size_t(r) * cols + c] : m[size_t(c) * rows + r];
      w.data()[int64_t(r) * cols + c] = S(gain * v);
    }
}

// ---- Network ----

template <class S>
Network<S>::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  const int flat = cfg_.conv_flat_size();
  const int units = cfg_.lstm_units;
  int in_ch = 3;
  for (size_t i = 0; i < cfg_.conv.size(); ++i) {
    const auto& l = cfg_.conv[i];
    params_.add("conv" + std::to_string(i) + ".w",
                {l.out_channels, in_ch, l.kernel, l.kernel});
    params_.add("conv" + std::to_string(i) + ".b", {l.out_channels});
    in_ch = l.out_channels;
  }
  params_.add("fc_img.w", {cfg_.image_features, flat});
  params_.add("fc_img.b", {cfg_.image_features});
  params_.add("lstm1.w", {4 * units, cfg_.image_features + 2 + units});
  params_.add("lstm1.b", {4 * units});
  params_.add("lstm2.w", {4 * units, units + 3 + units});
  params_.add("lstm2.b", {4 * units});
  params_.add("trunk.w", {cfg_.trunk_units, units});
  params_.add("trunk.b", {cfg_.trunk_units});
  params_.add("actor_mu.w", {2, cfg_.trunk_units});
  params_.add("actor_mu.b", {2});
  params_.add("value.w", {1, cfg_.trunk_units});
  params_.add("value.b", {1});
  params_.add("log_std", {2});
}

template <class S>
void Network<S>::init_weights(RngStream& rng) {
  const int units = cfg_.lstm_units;
  for (auto& item : params_.items()) {
    auto& t = item.tensor;
    const auto& name = item.name;
    if (name.starts_with("conv") && name.ends_with(".w")) {
      const int fan_in = t.shape()[1] * t.shape()[2] * t.shape()[3];
      const double bound = 1.0 / std::sqrt(double(fan_in));
      for (int64_t i = 0; i < t.size(); ++i)
        t.data()[i] = S(rng.uniform(-bound, bound));
    } else if (name.starts_with("lstm") && name.ends_with(".w")) {
      // Orthogonal per gate block, order i, f, g, o.
      const int cols = t.shape()[1];
      for (int gate = 0; gate < 4; ++gate) {
        ad::Tensor<S> block = ad::Tensor<S>::zeros({units, cols});
        orthogonal_init(block, 1.0, rng);
        std::copy(block.data(), block.data() + block.size(),
                  t.data() + int64_t(gate) * units * cols);
      }
    } else if (name == "actor_mu.w" || name == "value.w") {
      orthogonal_init(t, 0.01, rng);
    } else if (name.ends_with(".w")) {
      orthogonal_init(t, 1.0, rng);
    } else if (name.starts_with("lstm") && name.ends_with(".b")) {
      for (int u = 0; u < units; ++u) t.data()[units + u] = S(1);  // forget gate
    } else if (name == "log_std") {
      t.data()[0] = S(cfg_.log_std_init);
      t.data()[1] = S(cfg_.log_std_init);
    }
    // remaining biases stay zero
  }
}

template <class S>
LstmState<S> Network<S>::zero_state() const {
  const int units = cfg_.lstm_units;
  return {ad::Tensor<S>::zeros({units}), ad::Tensor<S>::zeros({units}),
          ad::Tensor<S>::zeros({units}), ad::Tensor<S>::zeros({units})};
}

template <class S>
LstmState<S> Network<S>::state_from_values(const LstmStateValues& v) const {
  const int units = cfg_.lstm_units;
  auto mk = [&](const std::vector<float>& src) {
    std::vector<S> vals(src.begin(), src.end());
    return ad::Tensor<S>::from({units}, std::move(vals));
  };
  return {mk(v.h1), mk(v.c1), mk(v.h2), mk(v.c2)};
}

template <class S>
LstmStateValues Network<S>::state_values(const LstmState<S>& s) const {
  auto mk = [](const ad::Tensor<S>& t) {
    std::vector<float> out(size_t(t.size()));
    for (int64_t i = 0; i < t.size(); ++i) out[i] = float(t.data()[i]);
    return out;
  };
  return {mk(s.h1), mk(s.c1), mk(s.h2), mk(s.c2)};
}

template <class S>
ObsTensors<S> Network<S>::make_inputs(const Observation& obs) const {
  const int h = cfg_.image_height, w = cfg_.image_width;
  if (obs.image.width != w || obs.image.height != h)
    throw std::invalid_argument("observation image size mismatch");
  ObsTensors<S> out;
  out.image = ad::Tensor<S>::zeros({3, h, w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.image.data()[(int64_t(c) * h + y) * w + x] =
            S(obs.image.pixels[(size_t(y) * w + x) * 3 + c]) / S(255);
  out.goal = ad::Tensor<S>::from(
      {2}, {S(float(obs.goal_dist / cfg_.goal_dist_scale)),
            S(float(obs.goal_angle / std::numbers::pi))});
  out.prev = ad::Tensor<S>::from({3}, {S(float(obs.prev_linear)),
                                       S(float(obs.prev_angular)),
                                       S(float(obs.prev_reward))});
  return out;
}

template <class S>
typename Network<S>::Forward Network<S>::forward(ad::Tape<S>& tape,
                                                 const ObsTensors<S>& obs,
                                                 const LstmState<S>& state) const {
  ad::Tensor<S> x = obs.image;
  for (size_t i = 0; i < cfg_.conv.size(); ++i) {
    const std::string base = "conv" + std::to_string(i);
    x = ad::conv2d(tape, x, params_.find(base + ".w"), cfg_.conv[i].stride);
    x = ad::bias_channels(tape, x, params_.find(base + ".b"));
    x = ad::relu(tape, x);
  }
  x = ad::reshape(tape, x, {int(x.size())});
  ad::Tensor<S> feat = ad::relu(
      tape, ad::dense(tape, x, params_.find("fc_img.w"), params_.find("fc_img.b")));

  ad::Tensor<S> in1 = ad::concat(tape, {feat, obs.goal});
  auto [h1, c1] = ad::lstm_cell(tape, in1, state.h1, state.c1,
                                params_.find("lstm1.w"), params_.find("lstm1.b"));
  ad::Tensor<S> in2 = ad::concat(tape, {h1, obs.prev});
  auto [h2, c2] = ad::lstm_cell(tape, in2, state.h2, state.c2,
                                params_.find("lstm2.w"), params_.find("lstm2.b"));
  ad::Tensor<S> trunk = ad::relu(
      tape, ad::dense(tape, h2, params_.find("trunk.w"), params_.find("trunk.b")));

  Forward out;
  out.mu = ad::dense(tape, trunk, params_.find("actor_mu.w"),
                     params_.find("actor_mu.b"));
  out.value =
      ad::dense(tape, trunk, params_.find("value.w"), params_.find("value.b"));
  out.log_std =
      ad::clamp(tape, params_.find("log_std"), S(kLogStdMin), S(kLogStdMax));
  out.state = {h1, c1, h2, c2};
  return out;
}

template <class S>
typename Network<S>::EvalOut Network<S>::evaluate(const Observation& obs,
                                                  const LstmState<S>& state) const {
  ad::Tape<S> tape(false);
  Forward f = forward(tape, make_inputs(obs), state);
  EvalOut out;
  out.dist.mu = {double(f.mu.data()[0]), double(f.mu.data()[1])};
  out.dist.log_std = {double(f.log_std.data()[0]), double(f.log_std.data()[1])};
  out.value = double(f.value.data()[0]);
  out.state = f.state;
  if (!std::isfinite(out.dist.mu[0]) || !std::isfinite(out.dist.mu[1]) ||
      !std::isfinite(out.value))
    throw DivergenceError("policy forward produced non-finite outputs");
  return out;
}

}  // namespace nav::policy
