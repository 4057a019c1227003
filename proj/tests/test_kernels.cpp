#include <doctest.h>

#include <cstring>
#include <vector>

#include "dualteacher/kernels.hpp"
#include "dualteacher/rng.hpp"
#include "oracle.hpp"

namespace k = dt::kernels;

namespace {

std::vector<float> rand_vec(std::size_t n, dt::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform() * 2.0 - 1.0);
  return v;
}

}  // namespace

TEST_CASE("serial and parallel conv kernels are bit-identical") {
  dt::Rng rng(5);
  for (int inst = 0; inst < 8; ++inst) {
    const int n = 1 + static_cast<int>(rng.uniform_int(3));
    const int cin = 1 + static_cast<int>(rng.uniform_int(4));
    const int cout = 1 + static_cast<int>(rng.uniform_int(4));
    const int h = 4 + static_cast<int>(rng.uniform_int(9));
    const int w = 4 + static_cast<int>(rng.uniform_int(9));
    const std::size_t xs = static_cast<std::size_t>(n) * cin * h * w;
    const std::size_t os = static_cast<std::size_t>(n) * cout * h * w;
    auto x = rand_vec(xs, rng);
    auto wt = rand_vec(static_cast<std::size_t>(cout) * cin * 9, rng);
    auto b = rand_vec(cout, rng);
    auto gout = rand_vec(os, rng);

    std::vector<float> o1(os), o2(os);
    k::conv3x3_forward_serial(x.data(), wt.data(), b.data(), o1.data(), n, cin, cout, h, w);
    k::conv3x3_forward_parallel(x.data(), wt.data(), b.data(), o2.data(), n, cin, cout, h, w);
    CHECK(std::memcmp(o1.data(), o2.data(), os * sizeof(float)) == 0);

    std::vector<float> gi1(xs, 0.125f), gi2(xs, 0.125f);
    k::conv3x3_backward_input_serial(gout.data(), wt.data(), gi1.data(), n, cin, cout, h, w);
    k::conv3x3_backward_input_parallel(gout.data(), wt.data(), gi2.data(), n, cin, cout, h, w);
    CHECK(std::memcmp(gi1.data(), gi2.data(), xs * sizeof(float)) == 0);

    std::vector<float> gw1(wt.size(), -0.5f), gw2(wt.size(), -0.5f);
    k::conv3x3_backward_weight_serial(gout.data(), x.data(), gw1.data(), n, cin, cout, h, w);
    k::conv3x3_backward_weight_parallel(gout.data(), x.data(), gw2.data(), n, cin, cout, h, w);
    CHECK(std::memcmp(gw1.data(), gw2.data(), gw1.size() * sizeof(float)) == 0);

    std::vector<float> s1(xs), s2(xs);
    k::softmax_nchw_serial(x.data(), s1.data(), n, cin, h, w);
    k::softmax_nchw_parallel(x.data(), s2.data(), n, cin, h, w);
    CHECK(std::memcmp(s1.data(), s2.data(), s1.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("the dispatch flag selects between variants without changing results") {
  dt::Rng rng(6);
  auto x = rand_vec(2 * 3 * 6 * 6, rng);
  auto wt = rand_vec(4 * 3 * 9, rng);
  auto b = rand_vec(4, rng);
  std::vector<float> o1(2 * 4 * 6 * 6), o2(o1.size());

  const bool before = k::parallel_enabled();
  k::set_parallel(false);
  CHECK_FALSE(k::parallel_enabled());
  k::conv3x3_forward(x.data(), wt.data(), b.data(), o1.data(), 2, 3, 4, 6, 6);
  k::set_parallel(true);
  CHECK(k::parallel_enabled());
  k::conv3x3_forward(x.data(), wt.data(), b.data(), o2.data(), 2, 3, 4, 6, 6);
  k::set_parallel(before);
  CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(float)) == 0);
}

TEST_CASE("conv forward matches the double-precision reference") {
  dt::Rng rng(7);
  const int n = 2, cin = 3, cout = 4, h = 7, w = 5;
  auto x = rand_vec(static_cast<std::size_t>(n) * cin * h * w, rng);
  auto wt = rand_vec(static_cast<std::size_t>(cout) * cin * 9, rng);
  auto b = rand_vec(cout, rng);
  std::vector<float> out(static_cast<std::size_t>(n) * cout * h * w);
  k::conv3x3_forward(x.data(), wt.data(), b.data(), out.data(), n, cin, cout, h, w);

  auto ref = oracle::conv3x3(oracle::Vec(x.begin(), x.end()), oracle::Vec(wt.begin(), wt.end()),
                             oracle::Vec(b.begin(), b.end()), n, cin, cout, h, w);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-5));
}

TEST_CASE("softmax outputs are normalized and order-preserving") {
  dt::Rng rng(8);
  const int n = 2, c = 5, h = 3, w = 3;
  auto x = rand_vec(static_cast<std::size_t>(n) * c * h * w, rng);
  std::vector<float> s(x.size());
  k::softmax_nchw(x.data(), s.data(), n, c, h, w);
  const int plane = h * w;
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < plane; ++p) {
      double sum = 0.0;
      for (int kk = 0; kk < c; ++kk) sum += s[(i * c + kk) * plane + p];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      for (int a = 0; a < c; ++a)
        for (int b2 = 0; b2 < c; ++b2)
          if (x[(i * c + a) * plane + p] > x[(i * c + b2) * plane + p])
            CHECK(s[(i * c + a) * plane + p] >= s[(i * c + b2) * plane + p]);
    }
}

TEST_CASE("backward_bias accumulates per-channel sums") {
  const int n = 1, cout = 2, h = 2, w = 2;
  std::vector<float> gout = {1, 2, 3, 4, 10, 20, 30, 40};
  std::vector<float> gb = {0.5f, 0.5f};
  k::conv3x3_backward_bias(gout.data(), gb.data(), n, cout, h, w);
  CHECK(gb[0] == doctest::Approx(10.5f));
  CHECK(gb[1] == doctest::Approx(100.5f));
}
