#pragma once

#include <cstdint>
#include <vector>

#include "dualteacher/rng.hpp"
#include "dualteacher/tape.hpp"
#include "dualteacher/tensor.hpp"

namespace dt {

// Tiny residual fully-convolutional net: stem conv (in -> hidden),
// num_blocks residual blocks (x + relu(conv(x))), head conv (hidden -> C).
// All convs 3x3 stride 1 same-padding, so logits keep the input resolution.
struct ModelConfig {
  int in_channels = 3;
  int hidden_channels = 16;
  int num_blocks = 4;
  int num_classes = 4;

  void validate() const;
  std::int64_t param_count() const;
};

// Per-block keep/drop vector; a dropped block contributes identity.
struct DepthMask {
  std::vector<bool> keep;

  static DepthMask all_keep(int blocks) { return DepthMask{std::vector<bool>(blocks, true)}; }
  bool full() const {
    for (bool k : keep)
      if (!k) return false;
    return true;
  }
};

struct DecayRule {
  enum class Kind { Uniform, Linear };
  Kind kind = Kind::Uniform;
  float rate = 0.1f;  // tau in [0,1)

  // Drop probability of block l (1-based) out of total blocks.
  // uniform: tau; linear: tau * l / L (deeper blocks dropped more).
  double drop_prob(int block, int total) const;
};

// He-style fan-in scaled uniform weights, zero biases. Deterministic per seed.
ParamSet init_model(const ModelConfig& config, std::uint64_t seed);

// Parameter tensors mirrored onto a tape as leaves, in ParamSet order.
std::vector<Tape::NodeId> params_on_tape(Tape& tape, const ParamSet& params);

// Builds the forward graph; image node must be [N,in_channels,H,W].
Tape::NodeId model_forward(Tape& tape, const ModelConfig& config,
                           const std::vector<Tape::NodeId>& params, Tape::NodeId image,
                           const DepthMask& mask);

// Gradient-free full-model inference returning logits [N,C,H,W].
Tensor infer(const ModelConfig& config, const ParamSet& params, const Tensor& images);

DepthMask sample_depth_mask(const DecayRule& rule, int blocks, Rng& rng);

// After Tape::backward, add tape leaf gradients into the ParamSet grads.
void accumulate_grads(const Tape& tape, const std::vector<Tape::NodeId>& ids, ParamSet& params);

}  // namespace dt
