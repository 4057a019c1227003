#include "dualteacher/teacher_bank.hpp"

#include <stdexcept>

#include "dualteacher/kernels.hpp"

namespace dt {

double alpha_at(long long step, double alpha_max) {
  if (step < 0) throw std::invalid_argument("alpha_at: negative step");
  return std::min(1.0 - 1.0 / (static_cast<double>(step) + 1.0), alpha_max);
}

void ema_update(ParamSet& teacher, const ParamSet& student, double alpha) {
  if (!teacher.same_structure(student)) throw std::invalid_argument("ema_update: structure mismatch");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("ema_update: alpha out of [0,1]");
  const float a = static_cast<float>(alpha);
  for (std::size_t i = 0; i < teacher.count(); ++i) {
    auto& td = teacher.tensor(i).data;
    const auto& sd = student.tensor(i).data;
    for (std::size_t j = 0; j < td.size(); ++j) td[j] = a * td[j] + (1.0f - a) * sd[j];
  }
}

PseudoLabels labels_from_softmax(const Tensor& probs) {
  const int n = probs.shape[0], c = probs.shape[1], h = probs.shape[2], w = probs.shape[3];
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  PseudoLabels out;
  out.labels = LabelMap(n, h, w);
  out.confidence = Tensor({n, h, w});
  out.softmax = probs;
  for (int i = 0; i < n; ++i) {
    const float* pp = probs.data.data() + static_cast<std::int64_t>(i) * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) {
      int best = 0;
      float bv = pp[p];
      for (int k = 1; k < c; ++k) {
        float v = pp[k * plane + p];
        if (v > bv) {  // strict: ties stay at the lowest class index
          bv = v;
          best = k;
        }
      }
      out.labels.data[i * plane + p] = static_cast<std::uint8_t>(best);
      out.confidence.data[i * plane + p] = bv;
    }
  }
  return out;
}

TeacherBank::TeacherBank(const ModelConfig& config, const ParamSet& student_init, int teacher_count,
                         SwitchPolicy policy, double alpha_max)
    : config_(config), policy_(policy), alpha_max_(alpha_max) {
  if (teacher_count < 1 || teacher_count > 3)
    throw std::invalid_argument("TeacherBank: teacher count must be in {1,2,3}");
  // Teachers start as exact copies of the initial student.
  teachers_.assign(teacher_count, student_init);
  counters_.assign(teacher_count, 0);
}

void TeacherBank::update(int k, const ParamSet& student) {
  ema_update(teachers_[k], student, alpha_at(counters_[k], alpha_max_));
  ++counters_[k];
}

PseudoLabels TeacherBank::pseudo_label(const Tensor& weak_images, int epoch) const {
  const int n = weak_images.shape[0], h = weak_images.shape[2], w = weak_images.shape[3];
  const int c = config_.num_classes;
  Tensor probs({n, c, h, w});
  if (policy_ == SwitchPolicy::RoundRobin) {
    Tensor logits = infer(config_, teachers_[active_teacher(epoch)], weak_images);
    kernels::softmax_nchw(logits.data.data(), probs.data.data(), n, c, h, w);
  } else {
    Tensor tmp({n, c, h, w});
    for (const ParamSet& t : teachers_) {
      Tensor logits = infer(config_, t, weak_images);
      kernels::softmax_nchw(logits.data.data(), tmp.data.data(), n, c, h, w);
      for (std::size_t j = 0; j < probs.data.size(); ++j) probs.data[j] += tmp.data[j];
    }
    const float inv = 1.0f / static_cast<float>(teachers_.size());
    for (float& v : probs.data) v *= inv;
  }
  return labels_from_softmax(probs);
}

}  // namespace dt
