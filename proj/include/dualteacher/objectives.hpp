#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dualteacher/tape.hpp"
#include "dualteacher/tensor.hpp"

namespace dt {

struct LossWeights {
  float lambda_u = 1.0f;  // unsupervised weight
  float lambda_c = 1.0f;  // consistency weight
  float w_l = 2.0f;       // labeled-term multiplier (2:1 labeled:unlabeled)
};

// The three loss terms are all pixel cross-entropies over different views;
// the wrappers exist to keep call sites aligned with the training recipe.
Tape::NodeId sup_loss(Tape& tape, Tape::NodeId student_logits_labeled, const LabelMap& labels,
                      int ignore_label = kIgnoreLabel);
Tape::NodeId unsup_loss(Tape& tape, Tape::NodeId student_logits_strong,
                        const LabelMap& pseudo_labels_mixed, int ignore_label = kIgnoreLabel);
Tape::NodeId unsup_loss_soft(Tape& tape, Tape::NodeId student_logits_strong,
                             const Tensor& soft_labels_mixed);
Tape::NodeId cons_loss(Tape& tape, Tape::NodeId sub_model_logits_weak,
                       const LabelMap& teacher_labels_weak, int ignore_label = kIgnoreLabel);

// w_l * L_sup + lambda_u * L_unsup + lambda_c * L_cons over scalar nodes;
// parts with a negative id are absent and contribute nothing.
Tape::NodeId total_loss(Tape& tape, Tape::NodeId sup, Tape::NodeId unsup, Tape::NodeId cons,
                        const LossWeights& weights);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes) : c_(num_classes), counts_(num_classes * num_classes, 0) {}

  void update(const LabelMap& predicted, const LabelMap& truth, int ignore_label = kIgnoreLabel);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return c_; }
  std::int64_t at(int pred, int truth) const { return counts_[pred * c_ + truth]; }
  std::int64_t& at(int pred, int truth) { return counts_[pred * c_ + truth]; }
  std::int64_t total() const;

 private:
  int c_;
  std::vector<std::int64_t> counts_;
};

// Per-class IoU and their mean; classes with zero union are excluded from
// the mean and reported as -1.
std::pair<std::vector<double>, double> miou(const ConfusionMatrix& cm);

// Mean squared difference between two softmax fields of identical shape.
double prediction_distance(const Tensor& teacher_softmax, const Tensor& student_softmax);

struct ClassDivergence {
  int cls;
  double iou_a, iou_b, delta;
};

// Top-k classes by |IoU_a - IoU_b|, descending; k clamps to the class count.
std::vector<ClassDivergence> class_iou_divergence(std::span<const double> iou_a,
                                                  std::span<const double> iou_b, int k);

struct WindowStat {
  int first_epoch, last_epoch;
  double mean, stddev;
};

// Contiguous non-overlapping windows of the per-epoch series (population std).
std::vector<WindowStat> windowed_stats(std::span<const double> per_epoch, int width);

}  // namespace dt
