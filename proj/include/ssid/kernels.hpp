#pragma once

// Spatial kernels behind the conv2d and pool ops. Two implementations share
// one contract: `reference` is a direct serial loop nest kept as the testing
// oracle, `parallel` uses im2col + BLAS GEMM with OpenMP over output rows.
// Backward kernels accumulate into their gradient outputs.

#include <vector>

namespace ssid::kernels {

// SAME padding: out = ceil(in / stride); total padding is split with the
// surplus zero on the bottom/right.
struct SameAxis {
  int in = 0, kernel = 0, stride = 0, out = 0, pad_before = 0;
  static SameAxis make(int in, int kernel, int stride);
};

struct ConvGeometry {
  SameAxis y, x;
  int in_channels = 0;
  int out_channels = 0;

  static ConvGeometry make(int in_h, int in_w, int in_c, int k_h, int k_w, int out_c, int s_h,
                           int s_w);
  int patch_size() const { return y.kernel * x.kernel * in_channels; }
  int out_pixels() const { return y.out * x.out; }
};

struct PoolGeometry {
  SameAxis y, x;
  int channels = 0;

  static PoolGeometry make(int in_h, int in_w, int c, int k_h, int k_w, int s_h, int s_w);
};

enum class PoolKind { max, avg };

namespace reference {

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* filters, const T* bias,
                    T* output);

template <class T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* filters, const T* d_output,
                     T* d_input, T* d_filters, T* d_bias);

// `argmax` (one entry per output element, may be null for avg) receives the
// flat input index of the first maximal element in row-major window order.
template <class T>
void pool_forward(const PoolGeometry& g, PoolKind kind, const T* input, T* output, int* argmax);

template <class T>
void pool_backward(const PoolGeometry& g, PoolKind kind, const T* d_output, const int* argmax,
                   T* d_input);

}  // namespace reference

namespace parallel {

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* filters, const T* bias,
                    T* output);

template <class T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* filters, const T* d_output,
                     T* d_input, T* d_filters, T* d_bias);

template <class T>
void pool_forward(const PoolGeometry& g, PoolKind kind, const T* input, T* output, int* argmax);

template <class T>
void pool_backward(const PoolGeometry& g, PoolKind kind, const T* d_output, const int* argmax,
                   T* d_input);

}  // namespace parallel

}  // namespace ssid::kernels
