#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dt {

// Class id marking pixels excluded from every loss and metric.
inline constexpr int kIgnoreLabel = 255;

// Dense row-major float32 array. Gradients live in a lazily allocated
// same-shape buffer; reductions inside ops accumulate in float64.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), 0.0f) {}
  Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != count(shape))
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int e : s) {
      if (e <= 0) throw std::invalid_argument("Tensor: nonpositive extent");
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Per-pixel class ids, shape [N, H, W]. Values are classes or kIgnoreLabel.
struct LabelMap {
  int n = 0, h = 0, w = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_)
      : n(n_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * h_ * w_, 0) {}

  std::uint8_t& at(int i, int y, int x) {
    return data[(static_cast<std::size_t>(i) * h + y) * w + x];
  }
  std::uint8_t at(int i, int y, int x) const {
    return data[(static_cast<std::size_t>(i) * h + y) * w + x];
  }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
};

// Named parameter tensors with stable iteration order.
class ParamSet {
 public:
  void add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
    index_[name] = names_.size();
    names_.push_back(name);
    tensors_.push_back(std::move(t));
  }

  std::size_t count() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

  Tensor& at(const std::string& name) { return tensors_[idx(name)]; }
  const Tensor& at(const std::string& name) const { return tensors_[idx(name)]; }
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::int64_t flat_size() const {
    std::int64_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  void zero_grads() {
    for (auto& t : tensors_) {
      t.ensure_grad();
      t.zero_grad();
    }
  }

  bool same_structure(const ParamSet& o) const {
    if (names_ != o.names_) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].shape != o.tensors_[i].shape) return false;
    return true;
  }

 private:
  std::size_t idx(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: unknown name " + name);
    return it->second;
  }

  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// theta <- theta - lr * (grad + weight_decay * theta), optional momentum.
// Gradients are cleared afterwards.
void sgd_step(ParamSet& params, float lr, float weight_decay, float momentum = 0.0f,
              std::vector<std::vector<float>>* velocity = nullptr);

}  // namespace dt
