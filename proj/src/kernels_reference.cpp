#include "ssid/kernels.hpp"

#include <algorithm>
#include <limits>

#include "ssid/tensor.hpp"

namespace ssid::kernels {

SameAxis SameAxis::make(int in, int kernel, int stride) {
  SameAxis a;
  a.in = in;
  a.kernel = kernel;
  a.stride = stride;
  a.out = ceil_div(in, stride);
  const int total = std::max((a.out - 1) * stride + kernel - in, 0);
  a.pad_before = total / 2;
  return a;
}

ConvGeometry ConvGeometry::make(int in_h, int in_w, int in_c, int k_h, int k_w, int out_c,
                                int s_h, int s_w) {
  ConvGeometry g;
  g.y = SameAxis::make(in_h, k_h, s_h);
  g.x = SameAxis::make(in_w, k_w, s_w);
  g.in_channels = in_c;
  g.out_channels = out_c;
  return g;
}

PoolGeometry PoolGeometry::make(int in_h, int in_w, int c, int k_h, int k_w, int s_h, int s_w) {
  PoolGeometry g;
  g.y = SameAxis::make(in_h, k_h, s_h);
  g.x = SameAxis::make(in_w, k_w, s_w);
  g.channels = c;
  return g;
}

namespace reference {

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = 0;
      for (int p = 0; p < k; ++p) {
        const T av = trans_a ? a[p * lda + i] : a[i * lda + p];
        const T bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = alpha * acc + (beta == T(0) ? T(0) : beta * c[i * ldc + j]);
    }
  }
}

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* filters, const T* bias,
                    T* output) {
  const int cin = g.in_channels, cout = g.out_channels;
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      T* out = output + (static_cast<std::size_t>(oy) * g.x.out + ox) * cout;
      for (int co = 0; co < cout; ++co) out[co] = bias ? bias[co] : T(0);
      for (int ky = 0; ky < g.y.kernel; ++ky) {
        const int iy = oy * g.y.stride - g.y.pad_before + ky;
        if (iy < 0 || iy >= g.y.in) continue;
        for (int kx = 0; kx < g.x.kernel; ++kx) {
          const int ix = ox * g.x.stride - g.x.pad_before + kx;
          if (ix < 0 || ix >= g.x.in) continue;
          const T* in = input + (static_cast<std::size_t>(iy) * g.x.in + ix) * cin;
          const T* f = filters + (static_cast<std::size_t>(ky) * g.x.kernel + kx) * cin * cout;
          for (int ci = 0; ci < cin; ++ci) {
            for (int co = 0; co < cout; ++co) out[co] += in[ci] * f[ci * cout + co];
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* filters, const T* d_output,
                     T* d_input, T* d_filters, T* d_bias) {
  const int cin = g.in_channels, cout = g.out_channels;
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      const T* dout = d_output + (static_cast<std::size_t>(oy) * g.x.out + ox) * cout;
      if (d_bias) {
        for (int co = 0; co < cout; ++co) d_bias[co] += dout[co];
      }
      for (int ky = 0; ky < g.y.kernel; ++ky) {
        const int iy = oy * g.y.stride - g.y.pad_before + ky;
        if (iy < 0 || iy >= g.y.in) continue;
        for (int kx = 0; kx < g.x.kernel; ++kx) {
          const int ix = ox * g.x.stride - g.x.pad_before + kx;
          if (ix < 0 || ix >= g.x.in) continue;
          const std::size_t in_off = (static_cast<std::size_t>(iy) * g.x.in + ix) * cin;
          const std::size_t f_off = (static_cast<std::size_t>(ky) * g.x.kernel + kx) * cin * cout;
          for (int ci = 0; ci < cin; ++ci) {
            for (int co = 0; co < cout; ++co) {
              if (d_filters) d_filters[f_off + ci * cout + co] += input[in_off + ci] * dout[co];
              if (d_input) d_input[in_off + ci] += filters[f_off + ci * cout + co] * dout[co];
            }
          }
        }
      }
    }
  }
}

template <class T>
void pool_forward(const PoolGeometry& g, PoolKind kind, const T* input, T* output, int* argmax) {
  const int c = g.channels;
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        T best = -std::numeric_limits<T>::infinity();
        int best_at = -1;
        T sum = 0;
        int count = 0;
        for (int ky = 0; ky < g.y.kernel; ++ky) {
          const int iy = oy * g.y.stride - g.y.pad_before + ky;
          if (iy < 0 || iy >= g.y.in) continue;
          for (int kx = 0; kx < g.x.kernel; ++kx) {
            const int ix = ox * g.x.stride - g.x.pad_before + kx;
            if (ix < 0 || ix >= g.x.in) continue;
            const int at = (iy * g.x.in + ix) * c + ch;
            const T v = input[at];
            if (v > best) {
              best = v;
              best_at = at;
            }
            sum += v;
            ++count;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(oy) * g.x.out + ox) * c + ch;
        if (kind == PoolKind::max) {
          output[o] = best;
          if (argmax) argmax[o] = best_at;
        } else {
          output[o] = sum / static_cast<T>(count);
        }
      }
    }
  }
}

template <class T>
void pool_backward(const PoolGeometry& g, PoolKind kind, const T* d_output, const int* argmax,
                   T* d_input) {
  const int c = g.channels;
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t o = (static_cast<std::size_t>(oy) * g.x.out + ox) * c + ch;
        if (kind == PoolKind::max) {
          d_input[argmax[o]] += d_output[o];
          continue;
        }
        int count = 0;
        for (int pass = 0; pass < 2; ++pass) {
          for (int ky = 0; ky < g.y.kernel; ++ky) {
            const int iy = oy * g.y.stride - g.y.pad_before + ky;
            if (iy < 0 || iy >= g.y.in) continue;
            for (int kx = 0; kx < g.x.kernel; ++kx) {
              const int ix = ox * g.x.stride - g.x.pad_before + kx;
              if (ix < 0 || ix >= g.x.in) continue;
              if (pass == 0) {
                ++count;
              } else {
                d_input[(iy * g.x.in + ix) * c + ch] += d_output[o] / static_cast<T>(count);
              }
            }
          }
        }
      }
    }
  }
}

#define SSID_INSTANTIATE(T)                                                                   \
  template void gemm<T>(bool, bool, int, int, int, T, const T*, int, const T*, int, T, T*,   \
                        int);                                                                 \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);     \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*, const T*, T*, T*, \
                                   T*);                                                       \
  template void pool_forward<T>(const PoolGeometry&, PoolKind, const T*, T*, int*);           \
  template void pool_backward<T>(const PoolGeometry&, PoolKind, const T*, const int*, T*);

SSID_INSTANTIATE(float)
SSID_INSTANTIATE(double)
#undef SSID_INSTANTIATE

}  // namespace reference
}  // namespace ssid::kernels
