#pragma once

#include <vector>

#include "dualteacher/seg_model.hpp"
#include "dualteacher/tensor.hpp"

namespace dt {

enum class SwitchPolicy { RoundRobin, Ensemble };

// Warm-up smoothing coefficient: min(1 - 1/(step + 1), alpha_max).
double alpha_at(long long step, double alpha_max);

// theta_t <- alpha * theta_t + (1 - alpha) * theta_s, elementwise.
void ema_update(ParamSet& teacher, const ParamSet& student, double alpha);

struct PseudoLabels {
  LabelMap labels;     // per-pixel argmax, ties toward the lowest class index
  Tensor confidence;   // [N,H,W] softmax probability of the argmax class
  Tensor softmax;      // [N,C,H,W] the distribution the labels came from
};

// Argmax labels from softmax probabilities [N,C,H,W].
PseudoLabels labels_from_softmax(const Tensor& probs);

// Holds the temporary teachers, their EMA step counters, and the switch policy.
// Round-robin: only the epoch's active teacher is updated and labels; the
// others stay frozen. Ensemble: all teachers' softmax outputs are averaged
// in equal proportions.
class TeacherBank {
 public:
  TeacherBank(const ModelConfig& config, const ParamSet& student_init, int teacher_count,
              SwitchPolicy policy, double alpha_max);

  int count() const { return static_cast<int>(teachers_.size()); }
  SwitchPolicy policy() const { return policy_; }
  int active_teacher(int epoch) const { return epoch % count(); }

  const ParamSet& teacher(int k) const { return teachers_[k]; }
  ParamSet& teacher(int k) { return teachers_[k]; }
  long long update_count(int k) const { return counters_[k]; }

  // EMA-updates teacher k with alpha_at(its own counter) and bumps the counter.
  void update(int k, const ParamSet& student);

  // Weak-view pseudo-labels per the policy for the given epoch.
  PseudoLabels pseudo_label(const Tensor& weak_images, int epoch) const;

 private:
  ModelConfig config_;
  std::vector<ParamSet> teachers_;
  std::vector<long long> counters_;
  SwitchPolicy policy_;
  double alpha_max_;
};

}  // namespace dt
