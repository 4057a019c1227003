#include "dualteacher/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dt {

Tape::NodeId sup_loss(Tape& tape, Tape::NodeId student_logits_labeled, const LabelMap& labels,
                      int ignore_label) {
  if (labels.n == 0) throw std::invalid_argument("sup_loss: empty labeled batch");
  return tape.pixel_cross_entropy(student_logits_labeled, labels, ignore_label);
}

Tape::NodeId unsup_loss(Tape& tape, Tape::NodeId student_logits_strong,
                        const LabelMap& pseudo_labels_mixed, int ignore_label) {
  return tape.pixel_cross_entropy(student_logits_strong, pseudo_labels_mixed, ignore_label);
}

Tape::NodeId unsup_loss_soft(Tape& tape, Tape::NodeId student_logits_strong,
                             const Tensor& soft_labels_mixed) {
  return tape.soft_cross_entropy(student_logits_strong, soft_labels_mixed);
}

Tape::NodeId cons_loss(Tape& tape, Tape::NodeId sub_model_logits_weak,
                       const LabelMap& teacher_labels_weak, int ignore_label) {
  return tape.pixel_cross_entropy(sub_model_logits_weak, teacher_labels_weak, ignore_label);
}

Tape::NodeId total_loss(Tape& tape, Tape::NodeId sup, Tape::NodeId unsup, Tape::NodeId cons,
                        const LossWeights& weights) {
  if (weights.lambda_u < 0 || weights.lambda_c < 0 || weights.w_l < 0)
    throw std::invalid_argument("total_loss: weights must be nonnegative");
  std::vector<std::pair<float, Tape::NodeId>> parts;
  if (sup >= 0) parts.emplace_back(weights.w_l, sup);
  if (unsup >= 0) parts.emplace_back(weights.lambda_u, unsup);
  if (cons >= 0) parts.emplace_back(weights.lambda_c, cons);
  return tape.weighted_sum(parts);
}

void ConfusionMatrix::update(const LabelMap& predicted, const LabelMap& truth, int ignore_label) {
  if (predicted.data.size() != truth.data.size())
    throw std::invalid_argument("ConfusionMatrix: shape mismatch");
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    int t = truth.data[i];
    if (t == ignore_label) continue;
    int p = predicted.data[i];
    if (t >= c_ || p >= c_) throw std::invalid_argument("ConfusionMatrix: class out of range");
    ++counts_[p * c_ + t];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.c_ != c_) throw std::invalid_argument("ConfusionMatrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::pair<std::vector<double>, double> miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("miou: empty confusion matrix");
  const int c = cm.num_classes();
  std::vector<double> ious(c, -1.0);
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < c; ++k) {
    std::int64_t tp = cm.at(k, k);
    std::int64_t fp = 0, fn = 0;
    for (int j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += cm.at(k, j);
      fn += cm.at(j, k);
    }
    std::int64_t uni = tp + fp + fn;
    if (uni == 0) continue;  // class absent everywhere, excluded from the mean
    ious[k] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += ious[k];
    ++counted;
  }
  return {ious, counted ? sum / counted : 0.0};
}

double prediction_distance(const Tensor& teacher_softmax, const Tensor& student_softmax) {
  if (!teacher_softmax.same_shape(student_softmax))
    throw std::invalid_argument("prediction_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < teacher_softmax.data.size(); ++i) {
    double d = static_cast<double>(teacher_softmax.data[i]) - student_softmax.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(teacher_softmax.data.size());
}

std::vector<ClassDivergence> class_iou_divergence(std::span<const double> iou_a,
                                                  std::span<const double> iou_b, int k) {
  if (iou_a.size() != iou_b.size())
    throw std::invalid_argument("class_iou_divergence: class count mismatch");
  std::vector<ClassDivergence> out;
  for (std::size_t c = 0; c < iou_a.size(); ++c)
    out.push_back({static_cast<int>(c), iou_a[c], iou_b[c], std::abs(iou_a[c] - iou_b[c])});
  std::stable_sort(out.begin(), out.end(),
                   [](const ClassDivergence& x, const ClassDivergence& y) { return x.delta > y.delta; });
  if (k < static_cast<int>(out.size())) out.resize(k);
  return out;
}

std::vector<WindowStat> windowed_stats(std::span<const double> per_epoch, int width) {
  if (width <= 0) throw std::invalid_argument("windowed_stats: width must be positive");
  std::vector<WindowStat> out;
  for (std::size_t start = 0; start + width <= per_epoch.size(); start += width) {
    double mean = 0.0;
    for (int i = 0; i < width; ++i) mean += per_epoch[start + i];
    mean /= width;
    double var = 0.0;
    for (int i = 0; i < width; ++i) {
      double d = per_epoch[start + i] - mean;
      var += d * d;
    }
    out.push_back({static_cast<int>(start) + 1, static_cast<int>(start) + width, mean,
                   std::sqrt(var / width)});
  }
  return out;
}

}  // namespace dt
