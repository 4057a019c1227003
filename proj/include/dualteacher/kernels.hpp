#pragma once

#include <cstdint>

namespace dt::kernels {

// Compute kernels behind the tape ops. Every kernel has a serial reference
// and an OpenMP variant; both produce bit-identical results because each
// output element is accumulated by exactly one thread in a fixed order
// (float64 accumulators throughout). The dispatcher picks the variant from
// the process-wide flag below; tests compare the two directly.

void set_parallel(bool enabled);
bool parallel_enabled();

// 3x3 cross-correlation, stride 1, zero same-padding.
// in:  [N,Cin,H,W]  w: [Cout,Cin,3,3]  b: [Cout]  out: [N,Cout,H,W]
void conv3x3_forward(const float* in, const float* w, const float* b, float* out, int n, int cin,
                     int cout, int h, int wd);
void conv3x3_forward_serial(const float* in, const float* w, const float* b, float* out, int n,
                            int cin, int cout, int h, int wd);
void conv3x3_forward_parallel(const float* in, const float* w, const float* b, float* out, int n,
                              int cin, int cout, int h, int wd);

// Accumulate (+=) gradients. gout: [N,Cout,H,W].
void conv3x3_backward_input(const float* gout, const float* w, float* gin, int n, int cin, int cout,
                            int h, int wd);
void conv3x3_backward_input_serial(const float* gout, const float* w, float* gin, int n, int cin,
                                   int cout, int h, int wd);
void conv3x3_backward_input_parallel(const float* gout, const float* w, float* gin, int n, int cin,
                                     int cout, int h, int wd);

void conv3x3_backward_weight(const float* gout, const float* in, float* gw, int n, int cin,
                             int cout, int h, int wd);
void conv3x3_backward_weight_serial(const float* gout, const float* in, float* gw, int n, int cin,
                                    int cout, int h, int wd);
void conv3x3_backward_weight_parallel(const float* gout, const float* in, float* gw, int n, int cin,
                                      int cout, int h, int wd);

void conv3x3_backward_bias(const float* gout, float* gb, int n, int cout, int h, int wd);

// Per-pixel channel softmax. logits/out: [N,C,H,W] with P = N*H*W pixels.
void softmax_nchw(const float* logits, float* out, int n, int c, int h, int w);
void softmax_nchw_serial(const float* logits, float* out, int n, int c, int h, int w);
void softmax_nchw_parallel(const float* logits, float* out, int n, int c, int h, int w);

}  // namespace dt::kernels
