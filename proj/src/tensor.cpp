#include "dualteacher/tensor.hpp"

namespace dt {

void sgd_step(ParamSet& params, float lr, float weight_decay, float momentum,
              std::vector<std::vector<float>>* velocity) {
  if (momentum != 0.0f && velocity == nullptr)
    throw std::invalid_argument("sgd_step: momentum requires a velocity state");
  if (velocity && velocity->empty()) {
    velocity->resize(params.count());
    for (std::size_t i = 0; i < params.count(); ++i)
      (*velocity)[i].assign(params.tensor(i).data.size(), 0.0f);
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    Tensor& t = params.tensor(i);
    if (t.grad.size() != t.data.size())
      throw std::runtime_error("sgd_step: missing gradients for " + params.name(i));
    for (std::size_t j = 0; j < t.data.size(); ++j) {
      float g = t.grad[j] + weight_decay * t.data[j];
      if (momentum != 0.0f) {
        float& v = (*velocity)[i][j];
        v = momentum * v + g;
        g = v;
      }
      t.data[j] -= lr * g;
    }
    t.zero_grad();
  }
}

}  // namespace dt
