#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dualteacher/tensor.hpp"

namespace dt {

// Reverse-mode autodiff over a linear tape. Nodes are appended in
// topological order by construction; backward() seeds the loss gradient
// with 1 and sweeps the tape once in reverse, accumulating into each
// node's gradient buffer. Single-threaded per tape.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(Tensor value);

  // 3x3 conv, stride 1, zero same-padding. Rejects non-finite inputs.
  NodeId conv2d(NodeId input, NodeId weight, NodeId bias);
  NodeId relu(NodeId x);
  NodeId add(NodeId a, NodeId b);

  // Mean over non-ignored pixels of -log softmax(logits)[target].
  // Throws if every pixel carries ignore_label.
  NodeId pixel_cross_entropy(NodeId logits, const LabelMap& target, int ignore_label = kIgnoreLabel);

  // Soft-target variant: targets [N,C,H,W], each pixel's mass summing to 1.
  NodeId soft_cross_entropy(NodeId logits, const Tensor& targets);

  // Scalar combination sum_i coeff_i * part_i. Parts must be scalars.
  NodeId weighted_sum(std::span<const std::pair<float, NodeId>> parts);

  // Populates gradients of every node reachable from loss; loss must be scalar.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  std::span<const float> grad(NodeId id) const { return nodes_[id].grad; }
  float scalar(NodeId id) const;

 private:
  struct Node {
    Tensor value;
    std::vector<float> grad;
    std::function<void()> back;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void()> back = {});
  std::vector<float>& grad_buf(NodeId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace dt
