#include "dualteacher/tape.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "dualteacher/kernels.hpp"

namespace dt {

namespace {
void require_finite(const Tensor& t, const char* what) {
  for (float v : t.data)
    if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite values in ") + what);
}
}  // namespace

Tape::NodeId Tape::push(Tensor value, std::function<void()> back) {
  Node node;
  node.value = std::move(value);
  node.grad.assign(node.value.data.size(), 0.0f);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Tensor value) { return push(std::move(value)); }

float Tape::scalar(NodeId id) const {
  if (nodes_[id].value.size() != 1) throw std::runtime_error("Tape: node is not scalar");
  return nodes_[id].value.data[0];
}

Tape::NodeId Tape::conv2d(NodeId input, NodeId weight, NodeId bias) {
  const Tensor& x = nodes_[input].value;
  const Tensor& w = nodes_[weight].value;
  const Tensor& b = nodes_[bias].value;
  if (x.shape.size() != 4 || w.shape.size() != 4 || b.shape.size() != 1)
    throw std::invalid_argument("conv2d: expected input[N,Cin,H,W], weight[Cout,Cin,3,3], bias[Cout]");
  if (w.shape[2] != 3 || w.shape[3] != 3) throw std::invalid_argument("conv2d: kernel must be 3x3");
  if (w.shape[1] != x.shape[1] || b.shape[0] != w.shape[0])
    throw std::invalid_argument("conv2d: channel mismatch");
  require_finite(x, "conv2d input");
  require_finite(w, "conv2d weight");
  require_finite(b, "conv2d bias");

  const int n = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const int cout = w.shape[0];
  Tensor out({n, cout, h, wd});
  kernels::conv3x3_forward(x.data.data(), w.data.data(), b.data.data(), out.data.data(), n, cin,
                           cout, h, wd);

  NodeId id = push(std::move(out));
  nodes_[id].back = [this, id, input, weight, bias, n, cin, cout, h, wd]() {
    const float* go = nodes_[id].grad.data();
    kernels::conv3x3_backward_input(go, nodes_[weight].value.data.data(),
                                    nodes_[input].grad.data(), n, cin, cout, h, wd);
    kernels::conv3x3_backward_weight(go, nodes_[input].value.data.data(),
                                     nodes_[weight].grad.data(), n, cin, cout, h, wd);
    kernels::conv3x3_backward_bias(go, nodes_[bias].grad.data(), n, cout, h, wd);
  };
  return id;
}

Tape::NodeId Tape::relu(NodeId x) {
  const Tensor& in = nodes_[x].value;
  Tensor out = in;
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  NodeId id = push(std::move(out));
  nodes_[id].back = [this, id, x]() {
    const auto& go = nodes_[id].grad;
    const auto& xv = nodes_[x].value.data;
    auto& gx = nodes_[x].grad;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0f) gx[i] += go[i];
  };
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (!av.same_shape(bv)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  NodeId id = push(std::move(out));
  nodes_[id].back = [this, id, a, b]() {
    const auto& go = nodes_[id].grad;
    auto& ga = nodes_[a].grad;
    auto& gb = nodes_[b].grad;
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  };
  return id;
}

Tape::NodeId Tape::pixel_cross_entropy(NodeId logits, const LabelMap& target, int ignore_label) {
  const Tensor& lg = nodes_[logits].value;
  if (lg.shape.size() != 4) throw std::invalid_argument("pixel_cross_entropy: logits must be [N,C,H,W]");
  const int n = lg.shape[0], c = lg.shape[1], h = lg.shape[2], w = lg.shape[3];
  if (target.n != n || target.h != h || target.w != w)
    throw std::invalid_argument("pixel_cross_entropy: target shape mismatch");
  for (std::uint8_t t : target.data)
    if (t != ignore_label && t >= c)
      throw std::invalid_argument("pixel_cross_entropy: target class out of range");

  auto probs = std::make_shared<std::vector<float>>(lg.data.size());
  kernels::softmax_nchw(lg.data.data(), probs->data(), n, c, h, w);

  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  double sum = 0.0;
  std::int64_t counted = 0;
  for (int i = 0; i < n; ++i) {
    const float* pp = probs->data() + static_cast<std::int64_t>(i) * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) {
      std::uint8_t t = target.data[static_cast<std::int64_t>(i) * plane + p];
      if (t == ignore_label) continue;
      sum += -std::log(std::max(static_cast<double>(pp[t * plane + p]), 1e-300));
      ++counted;
    }
  }
  if (counted == 0) throw std::runtime_error("pixel_cross_entropy: all pixels ignored");

  Tensor out({1}, {static_cast<float>(sum / static_cast<double>(counted))});
  NodeId id = push(std::move(out));
  LabelMap tgt = target;  // keep a copy alive for the backward pass
  nodes_[id].back = [this, id, logits, probs, tgt = std::move(tgt), ignore_label, n, c, plane,
                     counted]() {
    const float go = nodes_[id].grad[0];
    if (go == 0.0f) return;
    auto& gl = nodes_[logits].grad;
    const float inv = go / static_cast<float>(counted);
    for (int i = 0; i < n; ++i) {
      const std::int64_t base = static_cast<std::int64_t>(i) * c * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        std::uint8_t t = tgt.data[static_cast<std::int64_t>(i) * plane + p];
        if (t == ignore_label) continue;
        for (int k = 0; k < c; ++k) {
          float pk = (*probs)[base + k * plane + p];
          gl[base + k * plane + p] += inv * (pk - (k == t ? 1.0f : 0.0f));
        }
      }
    }
  };
  return id;
}

Tape::NodeId Tape::soft_cross_entropy(NodeId logits, const Tensor& targets) {
  const Tensor& lg = nodes_[logits].value;
  if (!lg.same_shape(targets)) throw std::invalid_argument("soft_cross_entropy: shape mismatch");
  const int n = lg.shape[0], c = lg.shape[1], h = lg.shape[2], w = lg.shape[3];
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t pixels = static_cast<std::int64_t>(n) * plane;

  auto probs = std::make_shared<std::vector<float>>(lg.data.size());
  kernels::softmax_nchw(lg.data.data(), probs->data(), n, c, h, w);

  // Pixels whose target mass is zero are treated as ignored, mirroring the
  // hard-label variant.
  double sum = 0.0;
  std::int64_t counted = 0;
  for (int i = 0; i < n; ++i) {
    const std::int64_t base = static_cast<std::int64_t>(i) * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) {
      double mass = 0.0;
      for (int k = 0; k < c; ++k) {
        double tk = targets.data[base + k * plane + p];
        mass += tk;
        if (tk != 0.0)
          sum += -tk * std::log(std::max(static_cast<double>((*probs)[base + k * plane + p]), 1e-300));
      }
      if (mass > 0.0) ++counted;
    }
  }
  if (counted == 0) throw std::runtime_error("soft_cross_entropy: all pixels ignored");
  (void)pixels;

  Tensor out({1}, {static_cast<float>(sum / static_cast<double>(counted))});
  NodeId id = push(std::move(out));
  auto tgt = std::make_shared<Tensor>(targets);
  nodes_[id].back = [this, id, logits, probs, tgt, n, c, plane, counted]() {
    const float go = nodes_[id].grad[0];
    if (go == 0.0f) return;
    auto& gl = nodes_[logits].grad;
    const float inv = go / static_cast<float>(counted);
    for (int i = 0; i < n; ++i) {
      const std::int64_t base = static_cast<std::int64_t>(i) * c * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        float mass = 0.0f;
        for (int k = 0; k < c; ++k) mass += tgt->data[base + k * plane + p];
        if (mass <= 0.0f) continue;
        for (int k = 0; k < c; ++k) {
          const std::int64_t off = base + k * plane + p;
          gl[off] += inv * (mass * (*probs)[off] - tgt->data[off]);
        }
      }
    }
  };
  return id;
}

Tape::NodeId Tape::weighted_sum(std::span<const std::pair<float, NodeId>> parts) {
  double acc = 0.0;
  for (const auto& [coeff, part] : parts) acc += static_cast<double>(coeff) * scalar(part);
  Tensor out({1}, {static_cast<float>(acc)});
  NodeId id = push(std::move(out));
  std::vector<std::pair<float, NodeId>> ps(parts.begin(), parts.end());
  nodes_[id].back = [this, id, ps = std::move(ps)]() {
    const float go = nodes_[id].grad[0];
    for (const auto& [coeff, part] : ps) nodes_[part].grad[0] += coeff * go;
  };
  return id;
}

void Tape::backward(NodeId loss) {
  if (nodes_[loss].value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  nodes_[loss].grad[0] += 1.0f;
  for (NodeId id = loss; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back();
}

}  // namespace dt
