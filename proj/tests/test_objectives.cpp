#include <doctest.h>

#include <cmath>
#include <vector>

#include "dualteacher/objectives.hpp"

using dt::ConfusionMatrix;
using dt::LabelMap;
using dt::Tensor;

TEST_CASE("miou on a hand confusion matrix") {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 2;
  cm.at(0, 1) = 1;
  cm.at(1, 0) = 1;
  cm.at(1, 1) = 2;
  auto [ious, mean] = dt::miou(cm);
  CHECK(ious[0] == doctest::Approx(0.5));  // 2 / (2 + 1 + 1)
  CHECK(ious[1] == doctest::Approx(0.5));
  CHECK(mean == doctest::Approx(0.5));
}

TEST_CASE("classes with zero union are reported as -1 and excluded from the mean") {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 10;
  cm.at(1, 1) = 10;
  auto [ious, mean] = dt::miou(cm);
  CHECK(ious[2] == -1.0);
  CHECK(mean == doctest::Approx(1.0));
  ConfusionMatrix empty(3);
  CHECK_THROWS(dt::miou(empty));
}

TEST_CASE("confusion matrix update skips ignored pixels and validates ranges") {
  ConfusionMatrix cm(2);
  LabelMap pred(1, 1, 3), truth(1, 1, 3);
  pred.data = {0, 1, 1};
  truth.data = {0, 255, 1};
  cm.update(pred, truth);
  CHECK(cm.total() == 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(1, 1) == 1);

  LabelMap bad(1, 1, 3);
  bad.data = {0, 7, 1};
  CHECK_THROWS(cm.update(bad, bad));

  ConfusionMatrix other(2);
  other.at(1, 0) = 5;
  cm.merge(other);
  CHECK(cm.at(1, 0) == 5);
  ConfusionMatrix wrong(3);
  CHECK_THROWS(cm.merge(wrong));
}

TEST_CASE("prediction distance is a symmetric MSE that vanishes on identical fields") {
  Tensor a({1, 2, 1, 2}, {0.7f, 0.3f, 0.2f, 0.8f});
  Tensor b({1, 2, 1, 2}, {0.5f, 0.5f, 0.4f, 0.6f});
  CHECK(dt::prediction_distance(a, a) == 0.0);
  CHECK(dt::prediction_distance(a, b) == doctest::Approx(dt::prediction_distance(b, a)));
  // mean of (0.2^2, 0.2^2, 0.2^2, 0.2^2)
  CHECK(dt::prediction_distance(a, b) == doctest::Approx(0.04).epsilon(1e-5));
  Tensor c({1, 2, 2, 1});
  CHECK_THROWS(dt::prediction_distance(a, c));
}

TEST_CASE("class IoU divergence ranks by absolute gap, descending, clamped to k") {
  std::vector<double> a = {0.90, 0.40, 0.75, 0.10};
  std::vector<double> b = {0.88, 0.60, 0.75, 0.29};
  auto top = dt::class_iou_divergence(a, b, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].cls == 1);
  CHECK(top[0].delta == doctest::Approx(0.20));
  CHECK(top[1].cls == 3);
  CHECK(top[1].delta == doctest::Approx(0.19));

  auto all = dt::class_iou_divergence(a, b, 99);
  CHECK(all.size() == 4);
  CHECK(all[3].delta == doctest::Approx(0.0));

  // identical inputs -> all-zero deltas in class order (stable sort)
  auto zero = dt::class_iou_divergence(a, a, 4);
  for (int c = 0; c < 4; ++c) {
    CHECK(zero[c].cls == c);
    CHECK(zero[c].delta == 0.0);
  }
}

TEST_CASE("windowed stats: width 5 over 20 epochs yields exactly 4 windows") {
  std::vector<double> series(20);
  for (int i = 0; i < 20; ++i) series[i] = i;
  auto ws = dt::windowed_stats(series, 5);
  REQUIRE(ws.size() == 4);
  CHECK(ws[0].first_epoch == 1);
  CHECK(ws[0].last_epoch == 5);
  CHECK(ws[3].first_epoch == 16);
  CHECK(ws[3].last_epoch == 20);
  CHECK(ws[0].mean == doctest::Approx(2.0));
  CHECK(ws[0].stddev == doctest::Approx(std::sqrt(2.0)));  // population std of 0..4

  CHECK(dt::windowed_stats(std::vector<double>(3), 5).empty());
  CHECK_THROWS(dt::windowed_stats(series, 0));
}

TEST_CASE("total_loss composes present parts with their weights") {
  dt::Tape tape;
  auto s = tape.leaf(Tensor({1}, {1.0f}));
  auto u = tape.leaf(Tensor({1}, {3.0f}));
  auto c = tape.leaf(Tensor({1}, {5.0f}));
  dt::LossWeights w;  // w_l = 2, lambda_u = 1, lambda_c = 1
  CHECK(tape.scalar(dt::total_loss(tape, s, u, c, w)) == doctest::Approx(2 + 3 + 5));
  CHECK(tape.scalar(dt::total_loss(tape, s, -1, -1, w)) == doctest::Approx(2.0));
  dt::LossWeights bad;
  bad.lambda_u = -1.0f;
  CHECK_THROWS(dt::total_loss(tape, s, u, c, bad));
}
