#include "nav/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nav/errors.hpp"

namespace nav::ppo {

void ExperienceBuffer::push(Episode ep) { episodes_.push_back(std::move(ep)); }

std::vector<Episode> ExperienceBuffer::take_all() {
  std::vector<Episode> out;
  out.swap(episodes_);
  return out;
}

void PPOConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0))
    throw ConfigError("ppo: clip_eps must be in (0, 1)");
  if (epochs < 1) throw ConfigError("ppo: epochs must be >= 1");
  if (episodes_per_update < 1)
    throw ConfigError("ppo: episodes_per_update must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must be in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("ppo: lambda must be in [0, 1]");
  if (learning_rate < 0.0) throw ConfigError("ppo: learning_rate must be >= 0");
  if (bptt_chunk < 1) throw ConfigError("ppo: bptt_chunk must be >= 1");
  if (minibatch_chunks < 1) throw ConfigError("ppo: minibatch_chunks must be >= 1");
  if (grad_clip <= 0.0) throw ConfigError("ppo: grad_clip must be positive");
  if (!(target_success_rate >= 0.0 && target_success_rate <= 1.0))
    throw ConfigError("ppo: target_success_rate must be in [0, 1]");
}

void compute_gae(Episode& episode, double gamma, double lambda) {
  const int n = int(episode.steps.size());
  if (n == 0) throw std::invalid_argument("compute_gae: empty episode");
  double adv_next = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    Transition& tr = episode.steps[t];
    const double not_done = tr.done ? 0.0 : 1.0;
    const double v_next =
        t == n - 1 ? double(episode.bootstrap_value) : double(episode.steps[t + 1].value_old);
    const double delta =
        double(tr.reward) + gamma * v_next * not_done - double(tr.value_old);
    const double adv = delta + gamma * lambda * not_done * adv_next;
    tr.advantage = float(adv);
    tr.ret = float(adv + double(tr.value_old));
    adv_next = adv;
  }
}

void normalize_advantages(std::vector<Episode>& episodes) {
  int64_t n = 0;
  double mean = 0.0;
  for (const auto& ep : episodes)
    for (const auto& tr : ep.steps) {
      mean += double(tr.advantage);
      ++n;
    }
  if (n == 0) return;
  mean /= double(n);
  double var = 0.0;
  for (const auto& ep : episodes)
    for (const auto& tr : ep.steps) {
      const double d = double(tr.advantage) - mean;
      var += d * d;
    }
  const double std_dev = std::max(std::sqrt(var / double(n)), 1e-8);
  for (auto& ep : episodes)
    for (auto& tr : ep.steps)
      tr.advantage = float((double(tr.advantage) - mean) / std_dev);
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

std::vector<Chunk> make_chunks(std::span<const Episode> episodes, int chunk_len) {
  std::vector<Chunk> chunks;
  for (const auto& ep : episodes)
    for (int b = 0; b < int(ep.steps.size()); b += chunk_len)
      chunks.push_back(
          {&ep, b, std::min(b + chunk_len, int(ep.steps.size()))});
  return chunks;
}

SurrogateResult surrogate_loss(ad::Tape<float>& tape, const policy::Network<float>& net,
                               std::span<const Chunk> chunks, const PPOConfig& cfg,
                               bool keep_per_sample) {
  SurrogateResult out;
  ad::Tensor<float> policy_acc = ad::Tensor<float>::scalar(0.0f);
  ad::Tensor<float> value_acc = ad::Tensor<float>::scalar(0.0f);
  ad::Tensor<float> ent;

  const float lo = float(1.0 - cfg.clip_eps);
  const float hi = float(1.0 + cfg.clip_eps);
  for (const Chunk& ch : chunks) {
    policy::LstmState<float> state =
        net.state_from_values(ch.episode->steps[ch.begin].state_in);
    for (int t = ch.begin; t < ch.end; ++t) {
      const Transition& tr = ch.episode->steps[t];
      auto f = net.forward(tape, net.make_inputs(tr.obs), state);
      state = f.state;
      if (!ent.defined()) ent = policy::entropy_tensor(tape, f.log_std);

      ad::Tensor<float> lp = policy::action_logprob_tensor(tape, f.mu, f.log_std, tr.u);
      ad::Tensor<float> ratio =
          ad::exp(tape, ad::affine(tape, lp, 1.0f, -tr.log_prob_old));
      ad::Tensor<float> surr = ad::affine(tape, ratio, tr.advantage, 0.0f);
      ad::Tensor<float> surr_clip =
          ad::affine(tape, ad::clamp(tape, ratio, lo, hi), tr.advantage, 0.0f);
      ad::Tensor<float> per_sample = ad::min(tape, surr, surr_clip);
      policy_acc = ad::add(tape, policy_acc, per_sample);

      ad::Tensor<float> verr = ad::affine(tape, f.value, 1.0f, -tr.ret);
      value_acc = ad::add(tape, value_acc, ad::mul(tape, verr, verr));

      out.max_abs_ratio_minus_one = std::max(
          out.max_abs_ratio_minus_one, std::abs(double(ratio.item()) - 1.0));
      if (keep_per_sample) {
        out.per_sample_surrogate.push_back(double(per_sample.item()));
        out.per_sample_ratio.push_back(double(ratio.item()));
      }
      ++out.samples;
    }
  }

  const float inv_n = 1.0f / float(out.samples);
  ad::Tensor<float> policy_loss = ad::affine(tape, policy_acc, -inv_n, 0.0f);
  ad::Tensor<float> value_loss = ad::affine(tape, value_acc, inv_n, 0.0f);
  ad::Tensor<float> total =
      ad::add(tape, policy_loss,
              ad::affine(tape, value_loss, float(cfg.value_coef), 0.0f));
  total = ad::add(tape, total,
                  ad::affine(tape, ent, -float(cfg.entropy_coef), 0.0f));
  out.total = total;
  out.policy_loss = double(policy_loss.item());
  out.value_loss = double(value_loss.item());
  out.entropy = double(ent.item());
  return out;
}

AdamOptimizer::AdamOptimizer(const policy::ParameterSet<float>& params,
                             double learning_rate)
    : lr_(learning_rate) {
  for (const auto& it : params.items()) {
    m_.emplace_back(size_t(it.tensor.size()), 0.0f);
    v_.emplace_back(size_t(it.tensor.size()), 0.0f);
  }
}

void AdamOptimizer::step(policy::ParameterSet<float>& params) {
  ++t_;
  const float bc1 = float(1.0 - std::pow(beta1_, double(t_)));
  const float bc2 = float(1.0 - std::pow(beta2_, double(t_)));
  const float b1 = float(beta1_), b2 = float(beta2_);
  const float lr = float(lr_), eps = float(eps_);
  auto& items = params.items();
  for (size_t p = 0; p < items.size(); ++p) {
    auto& t = items[p].tensor;
    float* m = m_[p].data();
    float* v = v_[p].data();
    const float* g = t.grad();
    float* w = t.data();
    for (int64_t i = 0; i < t.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const float mh = m[i] / bc1;
      const float vh = v[i] / bc2;
      w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

std::vector<float> AdamOptimizer::flat_moments() const {
  std::vector<float> flat;
  for (const auto& m : m_) flat.insert(flat.end(), m.begin(), m.end());
  for (const auto& v : v_) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

void AdamOptimizer::restore(int64_t t, const std::vector<float>& flat) {
  size_t total = 0;
  for (const auto& m : m_) total += m.size();
  if (flat.size() != 2 * total)
    throw std::invalid_argument("optimizer moment payload length mismatch");
  t_ = t;
  size_t k = 0;
  for (auto& m : m_)
    for (auto& x : m) x = flat[k++];
  for (auto& v : v_)
    for (auto& x : v) x = flat[k++];
}

namespace {

// Global L2 clip; returns false on non-finite gradients.
bool clip_gradients(policy::ParameterSet<float>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& it : params.items())
    for (int64_t i = 0; i < it.tensor.size(); ++i) {
      const double g = double(it.tensor.grad()[i]);
      sq += g * g;
    }
  if (!std::isfinite(sq)) return false;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const float scale = float(max_norm / norm);
    for (auto& it : params.items())
      for (int64_t i = 0; i < it.tensor.size(); ++i) it.tensor.grad()[i] *= scale;
  }
  return true;
}

}  // namespace

UpdateStats update(ExperienceBuffer& buffer, policy::Network<float>& net,
                   AdamOptimizer& opt, const PPOConfig& cfg, RngStream& rng) {
  if (buffer.size() < size_t(cfg.episodes_per_update))
    throw std::invalid_argument("ppo update: insufficient episodes in buffer");
  std::vector<Episode> episodes = buffer.take_all();
  for (auto& ep : episodes) compute_gae(ep, cfg.gamma, cfg.lambda);
  if (cfg.normalize_advantages) normalize_advantages(episodes);

  const std::vector<Chunk> chunks = make_chunks(episodes, cfg.bptt_chunk);
  const auto snapshot = net.params().snapshot();
  const auto moments_snapshot = opt.flat_moments();
  const int64_t t_snapshot = opt.step_count();

  auto restore = [&]() {
    net.params().restore(snapshot);
    opt.restore(t_snapshot, moments_snapshot);
  };

  UpdateStats stats;
  stats.episodes_consumed = int64_t(episodes.size());
  std::vector<size_t> order(chunks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates off the update stream keeps runs reproducible.
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(rng.uniform_int(i))]);

    for (size_t start = 0; start < order.size();
         start += size_t(cfg.minibatch_chunks)) {
      const size_t stop =
          std::min(start + size_t(cfg.minibatch_chunks), order.size());
      std::vector<Chunk> group;
      group.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) group.push_back(chunks[order[i]]);

      net.params().zero_grads();
      ad::Tape<float> tape;
      SurrogateResult sr = surrogate_loss(tape, net, group, cfg);
      if (!std::isfinite(sr.total.item())) {
        restore();
        throw DivergenceError("ppo update: non-finite loss");
      }
      if (epoch == 0)
        stats.first_epoch_max_abs_ratio_minus_one =
            std::max(stats.first_epoch_max_abs_ratio_minus_one,
                     sr.max_abs_ratio_minus_one);
      tape.backward(sr.total);
      if (!clip_gradients(net.params(), cfg.grad_clip)) {
        restore();
        throw DivergenceError("ppo update: non-finite gradients");
      }
      opt.step(net.params());
      stats.policy_loss = sr.policy_loss;
      stats.value_loss = sr.value_loss;
      stats.entropy = sr.entropy;
      stats.samples = sr.samples;
    }
  }
  return stats;
}

uint64_t params_hash(const policy::ParameterSet<float>& params) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the float bits
  for (const auto& it : params.items())
    for (int64_t i = 0; i < it.tensor.size(); ++i) {
      uint32_t bits;
      static_assert(sizeof(bits) == sizeof(float));
      std::memcpy(&bits, &it.tensor.data()[i], sizeof(bits));
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ull;
      }
    }
  return h;
}

}  // namespace nav::ppo
