#include "dualteacher/seg_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dt {

void ModelConfig::validate() const {
  if (num_blocks < 1) throw std::invalid_argument("ModelConfig: num_blocks must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("ModelConfig: num_classes must be >= 2");
  if (hidden_channels < 1 || in_channels < 1)
    throw std::invalid_argument("ModelConfig: channels must be >= 1");
}

std::int64_t ModelConfig::param_count() const {
  std::int64_t stem = static_cast<std::int64_t>(hidden_channels) * in_channels * 9 + hidden_channels;
  std::int64_t block = static_cast<std::int64_t>(hidden_channels) * hidden_channels * 9 + hidden_channels;
  std::int64_t head = static_cast<std::int64_t>(num_classes) * hidden_channels * 9 + num_classes;
  return stem + num_blocks * block + head;
}

double DecayRule::drop_prob(int block, int total) const {
  if (rate < 0.0f || rate >= 1.0f) throw std::invalid_argument("DecayRule: rate must be in [0,1)");
  if (kind == Kind::Uniform) return rate;
  return static_cast<double>(rate) * block / total;
}

namespace {
Tensor he_conv(int cout, int cin, Rng& rng, double gain) {
  Tensor w({cout, cin, 3, 3});
  const double bound = gain * std::sqrt(6.0 / (cin * 9.0));
  for (float& v : w.data) v = static_cast<float>((rng.uniform() * 2.0 - 1.0) * bound);
  return w;
}
}  // namespace

ParamSet init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  ParamSet ps;
  // Residual branches and the head are scaled down so the initial logits sit
  // near zero (initial loss ~ ln C); a unit-gain stack saturates the softmax
  // at depth 4+ and destabilises the first epochs.
  ps.add("stem.w", he_conv(config.hidden_channels, config.in_channels, rng, 1.0));
  ps.add("stem.b", Tensor({config.hidden_channels}));
  for (int l = 0; l < config.num_blocks; ++l) {
    std::string prefix = "block" + std::to_string(l);
    ps.add(prefix + ".w", he_conv(config.hidden_channels, config.hidden_channels, rng, 0.5));
    ps.add(prefix + ".b", Tensor({config.hidden_channels}));
  }
  ps.add("head.w", he_conv(config.num_classes, config.hidden_channels, rng, 0.1));
  ps.add("head.b", Tensor({config.num_classes}));
  return ps;
}

std::vector<Tape::NodeId> params_on_tape(Tape& tape, const ParamSet& params) {
  std::vector<Tape::NodeId> ids;
  ids.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) ids.push_back(tape.leaf(params.tensor(i)));
  return ids;
}

Tape::NodeId model_forward(Tape& tape, const ModelConfig& config,
                           const std::vector<Tape::NodeId>& params, Tape::NodeId image,
                           const DepthMask& mask) {
  if (static_cast<int>(mask.keep.size()) != config.num_blocks)
    throw std::invalid_argument("model_forward: depth mask length != num_blocks");
  std::size_t p = 0;
  Tape::NodeId x = tape.conv2d(image, params[p], params[p + 1]);
  p += 2;
  for (int l = 0; l < config.num_blocks; ++l, p += 2) {
    if (!mask.keep[l]) continue;  // dropped block is the identity
    x = tape.add(x, tape.relu(tape.conv2d(x, params[p], params[p + 1])));
  }
  return tape.conv2d(x, params[p], params[p + 1]);
}

Tensor infer(const ModelConfig& config, const ParamSet& params, const Tensor& images) {
  Tape tape;
  auto ids = params_on_tape(tape, params);
  Tape::NodeId logits =
      model_forward(tape, config, ids, tape.leaf(images), DepthMask::all_keep(config.num_blocks));
  return tape.value(logits);
}

DepthMask sample_depth_mask(const DecayRule& rule, int blocks, Rng& rng) {
  DepthMask mask;
  mask.keep.resize(blocks);
  for (int l = 0; l < blocks; ++l) mask.keep[l] = !rng.bernoulli(rule.drop_prob(l + 1, blocks));
  return mask;
}

void accumulate_grads(const Tape& tape, const std::vector<Tape::NodeId>& ids, ParamSet& params) {
  if (ids.size() != params.count()) throw std::invalid_argument("accumulate_grads: id count mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Tensor& t = params.tensor(i);
    t.ensure_grad();
    auto g = tape.grad(ids[i]);
    for (std::size_t j = 0; j < t.grad.size(); ++j) t.grad[j] += g[j];
  }
}

}  // namespace dt
