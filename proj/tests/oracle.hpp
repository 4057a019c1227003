#pragma once

// Test-only double-precision reference math, independent of the library's
// forward/backward path. Used as the finite-difference oracle for gradient
// checks and as a brute-force loss reference.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

// 3x3 cross-correlation, stride 1, zero same-padding, all doubles.
inline Vec conv3x3(const Vec& in, const Vec& w, const Vec& b, int n, int cin, int cout, int h,
                   int wd) {
  Vec out(static_cast<std::size_t>(n) * cout * h * wd, 0.0);
  const std::size_t plane = static_cast<std::size_t>(h) * wd;
  for (int i = 0; i < n; ++i)
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) {
          double acc = b[co];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                int iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += in[(static_cast<std::size_t>(i) * cin + ci) * plane + iy * wd + ix] *
                       w[(static_cast<std::size_t>(co) * cin + ci) * 9 + ky * 3 + kx];
              }
          out[(static_cast<std::size_t>(i) * cout + co) * plane + y * wd + x] = acc;
        }
  return out;
}

inline Vec relu(const Vec& x) {
  Vec out = x;
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

// Mean over non-ignored pixels of -log softmax(logits)[target].
inline double pixel_cross_entropy(const Vec& logits, const std::vector<int>& target, int n, int c,
                                  int h, int w, int ignore_label = 255) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  double sum = 0.0;
  long counted = 0;
  for (int i = 0; i < n; ++i)
    for (std::size_t p = 0; p < plane; ++p) {
      int t = target[i * plane + p];
      if (t == ignore_label) continue;
      double mx = logits[static_cast<std::size_t>(i) * c * plane + p];
      for (int k = 1; k < c; ++k)
        mx = std::max(mx, logits[(static_cast<std::size_t>(i) * c + k) * plane + p]);
      double z = 0.0;
      for (int k = 0; k < c; ++k)
        z += std::exp(logits[(static_cast<std::size_t>(i) * c + k) * plane + p] - mx);
      sum += -(logits[(static_cast<std::size_t>(i) * c + t) * plane + p] - mx - std::log(z));
      ++counted;
    }
  if (counted == 0) throw std::runtime_error("oracle: all pixels ignored");
  return sum / counted;
}

// Central finite differences of f at x, step h.
inline Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-3) {
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    double fp = f(probe);
    probe[i] = x[i] - h;
    double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Relative error with an absolute floor; matches |a-b| <= tol*max(|a|,|b|) + floor.
inline bool grads_close(const Vec& analytic, const Vec& fd, double tol = 1e-3,
                        double floor_ = 1e-6) {
  if (analytic.size() != fd.size()) return false;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double a = analytic[i], b = fd[i];
    if (std::abs(a - b) > tol * std::max(std::abs(a), std::abs(b)) + floor_) return false;
  }
  return true;
}

}  // namespace oracle
