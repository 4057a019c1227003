#include <doctest.h>

#include <cmath>

#include "dualteacher/seg_model.hpp"
#include "dualteacher/tape.hpp"
#include "oracle.hpp"

using dt::DecayRule;
using dt::DepthMask;
using dt::ModelConfig;
using dt::Rng;
using dt::Tape;
using dt::Tensor;

TEST_CASE("param_count matches the hand-derived formula for the reference net") {
  ModelConfig cfg{3, 16, 4, 4};
  // stem 3->16, 4 blocks 16->16, head 16->4, all 3x3 with bias
  const std::int64_t expect = (16 * 3 * 9 + 16) + 4 * (16 * 16 * 9 + 16) + (4 * 16 * 9 + 4);
  CHECK(cfg.param_count() == expect);
  CHECK(dt::init_model(cfg, 1).flat_size() == expect);
}

TEST_CASE("init_model is deterministic per seed and seed-sensitive") {
  ModelConfig cfg{3, 8, 2, 4};
  auto a = dt::init_model(cfg, 7);
  auto b = dt::init_model(cfg, 7);
  auto c = dt::init_model(cfg, 8);
  CHECK(a.same_structure(b));
  bool equal = true, differs = false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    if (a.tensor(i).data != b.tensor(i).data) equal = false;
    if (a.tensor(i).data != c.tensor(i).data) differs = true;
  }
  CHECK(equal);
  CHECK(differs);
}

TEST_CASE("a full depth mask and DepthMask::all_keep produce identical logits") {
  ModelConfig cfg{3, 6, 3, 4};
  auto params = dt::init_model(cfg, 3);
  Rng rng(4);
  Tensor img({2, 3, 8, 8});
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());

  Tape t1, t2;
  auto ids1 = dt::params_on_tape(t1, params);
  auto ids2 = dt::params_on_tape(t2, params);
  DepthMask manual{std::vector<bool>(3, true)};
  auto o1 = dt::model_forward(t1, cfg, ids1, t1.leaf(img), DepthMask::all_keep(3));
  auto o2 = dt::model_forward(t2, cfg, ids2, t2.leaf(img), manual);
  CHECK(t1.value(o1).data == t2.value(o2).data);
  CHECK(manual.full());
}

TEST_CASE("a dropped block is the identity: forward equals a model without it") {
  ModelConfig two{3, 6, 2, 4};
  ModelConfig one{3, 6, 1, 4};
  auto params2 = dt::init_model(two, 11);
  // reuse block0 + head weights in a 1-block model
  dt::ParamSet params1;
  params1.add("stem.w", params2.at("stem.w"));
  params1.add("stem.b", params2.at("stem.b"));
  params1.add("block0.w", params2.at("block0.w"));
  params1.add("block0.b", params2.at("block0.b"));
  params1.add("head.w", params2.at("head.w"));
  params1.add("head.b", params2.at("head.b"));

  Rng rng(12);
  Tensor img({1, 3, 6, 6});
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());

  Tape t1, t2;
  auto ids2 = dt::params_on_tape(t1, params2);
  auto ids1 = dt::params_on_tape(t2, params1);
  auto drop2 = dt::model_forward(t1, two, ids2, t1.leaf(img), DepthMask{{true, false}});
  auto full1 = dt::model_forward(t2, one, ids1, t2.leaf(img), DepthMask::all_keep(1));
  CHECK(t1.value(drop2).data == t2.value(full1).data);
}

TEST_CASE("dropped blocks receive zero gradient") {
  ModelConfig cfg{3, 6, 3, 4};
  auto params = dt::init_model(cfg, 5);
  Rng rng(6);
  Tensor img({1, 3, 6, 6});
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  dt::LabelMap target(1, 6, 6);
  for (auto& t : target.data) t = static_cast<std::uint8_t>(rng.uniform_int(4));

  Tape tape;
  auto ids = dt::params_on_tape(tape, params);
  auto logits = dt::model_forward(tape, cfg, ids, tape.leaf(img), DepthMask{{true, false, true}});
  tape.backward(tape.pixel_cross_entropy(logits, target));
  params.zero_grads();
  dt::accumulate_grads(tape, ids, params);

  auto max_abs = [](const Tensor& t) {
    float m = 0.0f;
    for (float g : t.grad) m = std::max(m, std::abs(g));
    return m;
  };
  CHECK(max_abs(params.at("block1.w")) == 0.0f);
  CHECK(max_abs(params.at("block1.b")) == 0.0f);
  CHECK(max_abs(params.at("block0.w")) > 0.0f);
  CHECK(max_abs(params.at("block2.w")) > 0.0f);
  CHECK(max_abs(params.at("stem.w")) > 0.0f);
}

TEST_CASE("composed model gradients match finite differences of a double reference") {
  ModelConfig cfg{2, 3, 2, 3};
  auto params = dt::init_model(cfg, 21);
  Rng rng(22);
  const int h = 5, w = 5;
  Tensor img({1, 2, h, w});
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  dt::LabelMap target(1, h, w);
  for (auto& t : target.data) t = static_cast<std::uint8_t>(rng.uniform_int(3));
  std::vector<int> tgt(target.data.begin(), target.data.end());

  Tape tape;
  auto ids = dt::params_on_tape(tape, params);
  auto logits =
      dt::model_forward(tape, cfg, ids, tape.leaf(img), dt::DepthMask::all_keep(cfg.num_blocks));
  tape.backward(tape.pixel_cross_entropy(logits, target));

  // double-precision forward with one parameter tensor substituted
  auto forward = [&](std::size_t which, const oracle::Vec& sub) {
    auto get = [&](std::size_t i) {
      if (i == which) return sub;
      const auto& d = params.tensor(i).data;
      return oracle::Vec(d.begin(), d.end());
    };
    oracle::Vec x(img.data.begin(), img.data.end());
    x = oracle::conv3x3(x, get(0), get(1), 1, 2, 3, h, w);
    for (int l = 0; l < cfg.num_blocks; ++l) {
      auto branch = oracle::relu(oracle::conv3x3(x, get(2 + 2 * l), get(3 + 2 * l), 1, 3, 3, h, w));
      x = oracle::add(x, branch);
    }
    x = oracle::conv3x3(x, get(2 + 2 * cfg.num_blocks), get(3 + 2 * cfg.num_blocks), 1, 3, 3, h, w);
    return oracle::pixel_cross_entropy(x, tgt, 1, 3, h, w);
  };

  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& d = params.tensor(i).data;
    oracle::Vec theta(d.begin(), d.end());
    auto fd = oracle::finite_diff([&](const oracle::Vec& v) { return forward(i, v); }, theta);
    auto g = tape.grad(ids[i]);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < fd.size(); ++j) {
      num += (g[j] - fd[j]) * (g[j] - fd[j]);
      den += fd[j] * fd[j];
    }
    CHECK(std::sqrt(num) / std::max(std::sqrt(den), 1e-12) < 1e-3);
  }
}

TEST_CASE("decay rules give the documented drop probabilities") {
  DecayRule uni{DecayRule::Kind::Uniform, 0.1f};
  DecayRule lin{DecayRule::Kind::Linear, 0.4f};
  for (int l = 1; l <= 4; ++l) CHECK(uni.drop_prob(l, 4) == doctest::Approx(0.1));
  CHECK(lin.drop_prob(1, 4) == doctest::Approx(0.1));
  CHECK(lin.drop_prob(2, 4) == doctest::Approx(0.2));
  CHECK(lin.drop_prob(4, 4) == doctest::Approx(0.4));
  DecayRule bad{DecayRule::Kind::Uniform, 1.0f};
  CHECK_THROWS(bad.drop_prob(1, 4));
}

TEST_CASE("sampled depth masks hit the decay-rule rates within 3 sigma") {
  const int trials = 10000, blocks = 4;
  for (DecayRule rule : {DecayRule{DecayRule::Kind::Uniform, 0.1f},
                         DecayRule{DecayRule::Kind::Linear, 0.4f}}) {
    Rng rng(99);
    std::vector<int> dropped(blocks, 0);
    for (int t = 0; t < trials; ++t) {
      auto mask = dt::sample_depth_mask(rule, blocks, rng);
      for (int l = 0; l < blocks; ++l)
        if (!mask.keep[l]) ++dropped[l];
    }
    for (int l = 0; l < blocks; ++l) {
      double p = rule.drop_prob(l + 1, blocks);
      double sigma = std::sqrt(p * (1 - p) * trials);
      CHECK(std::abs(dropped[l] - p * trials) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("a tau = 0 rule never drops") {
  Rng rng(1);
  DecayRule rule{DecayRule::Kind::Linear, 0.0f};
  for (int t = 0; t < 100; ++t) CHECK(dt::sample_depth_mask(rule, 4, rng).full());
}
