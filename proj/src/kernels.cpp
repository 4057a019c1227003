#include "dualteacher/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dt::kernels {

namespace {
std::atomic<bool> g_parallel{true};

inline double conv_tap(const float* img, const float* kw, int h, int w, int y, int x) {
  // 3x3 window around (y, x) with zero padding, fixed accumulation order.
  double acc = 0.0;
  for (int ky = 0; ky < 3; ++ky) {
    int iy = y + ky - 1;
    if (iy < 0 || iy >= h) continue;
    const float* row = img + static_cast<std::int64_t>(iy) * w;
    for (int kx = 0; kx < 3; ++kx) {
      int ix = x + kx - 1;
      if (ix < 0 || ix >= w) continue;
      acc += static_cast<double>(row[ix]) * static_cast<double>(kw[ky * 3 + kx]);
    }
  }
  return acc;
}
}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

void conv3x3_forward_serial(const float* in, const float* w, const float* b, float* out, int n,
                            int cin, int cout, int h, int wd) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  for (int i = 0; i < n; ++i) {
    for (int co = 0; co < cout; ++co) {
      float* op = out + (static_cast<std::int64_t>(i) * cout + co) * plane;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) {
          double acc = static_cast<double>(b[co]);
          for (int ci = 0; ci < cin; ++ci) {
            const float* ip = in + (static_cast<std::int64_t>(i) * cin + ci) * plane;
            const float* kw = w + (static_cast<std::int64_t>(co) * cin + ci) * 9;
            acc += conv_tap(ip, kw, h, wd, y, x);
          }
          op[static_cast<std::int64_t>(y) * wd + x] = static_cast<float>(acc);
        }
      }
    }
  }
}

void conv3x3_forward_parallel(const float* in, const float* w, const float* b, float* out, int n,
                              int cin, int cout, int h, int wd) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int co = 0; co < cout; ++co) {
      float* op = out + (static_cast<std::int64_t>(i) * cout + co) * plane;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) {
          double acc = static_cast<double>(b[co]);
          for (int ci = 0; ci < cin; ++ci) {
            const float* ip = in + (static_cast<std::int64_t>(i) * cin + ci) * plane;
            const float* kw = w + (static_cast<std::int64_t>(co) * cin + ci) * 9;
            acc += conv_tap(ip, kw, h, wd, y, x);
          }
          op[static_cast<std::int64_t>(y) * wd + x] = static_cast<float>(acc);
        }
      }
    }
  }
}

void conv3x3_forward(const float* in, const float* w, const float* b, float* out, int n, int cin,
                     int cout, int h, int wd) {
  if (parallel_enabled())
    conv3x3_forward_parallel(in, w, b, out, n, cin, cout, h, wd);
  else
    conv3x3_forward_serial(in, w, b, out, n, cin, cout, h, wd);
}

namespace {
// gin[i,ci,y,x] += sum_co sum_k gout[i,co,y+1-ky,x+1-kx] * w[co,ci,ky,kx]
inline void backward_input_plane(const float* gout, const float* w, float* gin, int ci, int i,
                                 int cin, int cout, int h, int wd) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  float* gp = gin + (static_cast<std::int64_t>(i) * cin + ci) * plane;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      double acc = 0.0;
      for (int co = 0; co < cout; ++co) {
        const float* go = gout + (static_cast<std::int64_t>(i) * cout + co) * plane;
        const float* kw = w + (static_cast<std::int64_t>(co) * cin + ci) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          int oy = y + 1 - ky;
          if (oy < 0 || oy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            int ox = x + 1 - kx;
            if (ox < 0 || ox >= wd) continue;
            acc += static_cast<double>(go[static_cast<std::int64_t>(oy) * wd + ox]) *
                   static_cast<double>(kw[ky * 3 + kx]);
          }
        }
      }
      gp[static_cast<std::int64_t>(y) * wd + x] += static_cast<float>(acc);
    }
  }
}
}  // namespace

void conv3x3_backward_input_serial(const float* gout, const float* w, float* gin, int n, int cin,
                                   int cout, int h, int wd) {
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < cin; ++ci) backward_input_plane(gout, w, gin, ci, i, cin, cout, h, wd);
}

void conv3x3_backward_input_parallel(const float* gout, const float* w, float* gin, int n, int cin,
                                     int cout, int h, int wd) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < cin; ++ci) backward_input_plane(gout, w, gin, ci, i, cin, cout, h, wd);
}

void conv3x3_backward_input(const float* gout, const float* w, float* gin, int n, int cin, int cout,
                            int h, int wd) {
  if (parallel_enabled())
    conv3x3_backward_input_parallel(gout, w, gin, n, cin, cout, h, wd);
  else
    conv3x3_backward_input_serial(gout, w, gin, n, cin, cout, h, wd);
}

namespace {
// gw[co,ci,ky,kx] += sum_i sum_{y,x} gout[i,co,y,x] * in[i,ci,y+ky-1,x+kx-1]
inline void backward_weight_tap(const float* gout, const float* in, float* gw, int co, int ci,
                                int n, int cin, int cout, int h, int wd) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* go = gout + (static_cast<std::int64_t>(i) * cout + co) * plane;
        const float* ip = in + (static_cast<std::int64_t>(i) * cin + ci) * plane;
        int y0 = (ky == 0) ? 1 : 0;
        int y1 = (ky == 2) ? h - 1 : h;
        int x0 = (kx == 0) ? 1 : 0;
        int x1 = (kx == 2) ? wd - 1 : wd;
        for (int y = y0; y < y1; ++y) {
          const float* gr = go + static_cast<std::int64_t>(y) * wd;
          const float* ir = ip + static_cast<std::int64_t>(y + ky - 1) * wd + (kx - 1);
          for (int x = x0; x < x1; ++x)
            acc += static_cast<double>(gr[x]) * static_cast<double>(ir[x]);
        }
      }
      gw[(static_cast<std::int64_t>(co) * cin + ci) * 9 + ky * 3 + kx] += static_cast<float>(acc);
    }
  }
}
}  // namespace

void conv3x3_backward_weight_serial(const float* gout, const float* in, float* gw, int n, int cin,
                                    int cout, int h, int wd) {
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci) backward_weight_tap(gout, in, gw, co, ci, n, cin, cout, h, wd);
}

void conv3x3_backward_weight_parallel(const float* gout, const float* in, float* gw, int n, int cin,
                                      int cout, int h, int wd) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci) backward_weight_tap(gout, in, gw, co, ci, n, cin, cout, h, wd);
}

void conv3x3_backward_weight(const float* gout, const float* in, float* gw, int n, int cin,
                             int cout, int h, int wd) {
  if (parallel_enabled())
    conv3x3_backward_weight_parallel(gout, in, gw, n, cin, cout, h, wd);
  else
    conv3x3_backward_weight_serial(gout, in, gw, n, cin, cout, h, wd);
}

void conv3x3_backward_bias(const float* gout, float* gb, int n, int cout, int h, int wd) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  for (int co = 0; co < cout; ++co) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const float* go = gout + (static_cast<std::int64_t>(i) * cout + co) * plane;
      for (std::int64_t p = 0; p < plane; ++p) acc += static_cast<double>(go[p]);
    }
    gb[co] += static_cast<float>(acc);
  }
}

namespace {
inline void softmax_pixel(const float* logits, float* out, int c, std::int64_t stride) {
  double mx = logits[0];
  for (int k = 1; k < c; ++k) mx = std::max(mx, static_cast<double>(logits[k * stride]));
  double sum = 0.0;
  for (int k = 0; k < c; ++k) sum += std::exp(static_cast<double>(logits[k * stride]) - mx);
  for (int k = 0; k < c; ++k)
    out[k * stride] = static_cast<float>(std::exp(static_cast<double>(logits[k * stride]) - mx) / sum);
}
}  // namespace

void softmax_nchw_serial(const float* logits, float* out, int n, int c, int h, int w) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int i = 0; i < n; ++i) {
    const float* lp = logits + static_cast<std::int64_t>(i) * c * plane;
    float* op = out + static_cast<std::int64_t>(i) * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) softmax_pixel(lp + p, op + p, c, plane);
  }
}

void softmax_nchw_parallel(const float* logits, float* out, int n, int c, int h, int w) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const float* lp = logits + static_cast<std::int64_t>(i) * c * plane;
    float* op = out + static_cast<std::int64_t>(i) * c * plane;
    for (std::int64_t p = 0; p < plane; ++p) softmax_pixel(lp + p, op + p, c, plane);
  }
}

void softmax_nchw(const float* logits, float* out, int n, int c, int h, int w) {
  if (parallel_enabled())
    softmax_nchw_parallel(logits, out, n, c, h, w);
  else
    softmax_nchw_serial(logits, out, n, c, h, w);
}

}  // namespace dt::kernels
