#include <cblas.h>

#include <algorithm>
#include <limits>
#include <vector>

#include "ssid/kernels.hpp"

namespace ssid::kernels::parallel {

namespace {

inline void blas_gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
                      const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
              k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void blas_gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a,
                      int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
              k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Per-thread scratch that only grows, so the large patch matrices are not
// reallocated and zero-filled on every call.
template <class T>
T* scratch(std::size_t n, int slot) {
  thread_local std::vector<T> buffers[2];
  std::vector<T>& b = buffers[slot];
  if (b.size() < n) b.resize(n);
  return b.data();
}

// ceil(a / b) for b > 0 and any sign of a.
inline int ceil_div_pos(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

bool is_pointwise(const ConvGeometry& g) {
  return g.y.kernel == 1 && g.x.kernel == 1 && g.y.stride == 1 && g.x.stride == 1;
}

// Rows are output pixels, columns follow the filter layout (ky, kx, c_in).
template <class T>
void im2col(const ConvGeometry& g, const T* input, T* cols) {
  const int cin = g.in_channels;
  const int patch = g.patch_size();
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      T* row = cols + (static_cast<std::size_t>(oy) * g.x.out + ox) * patch;
      for (int ky = 0; ky < g.y.kernel; ++ky) {
        const int iy = oy * g.y.stride - g.y.pad_before + ky;
        for (int kx = 0; kx < g.x.kernel; ++kx) {
          const int ix = ox * g.x.stride - g.x.pad_before + kx;
          T* dst = row + (ky * g.x.kernel + kx) * cin;
          if (iy < 0 || iy >= g.y.in || ix < 0 || ix >= g.x.in) {
            std::fill(dst, dst + cin, T(0));
          } else {
            const T* src = input + (static_cast<std::size_t>(iy) * g.x.in + ix) * cin;
            std::copy(src, src + cin, dst);
          }
        }
      }
    }
  }
}

// Gather form of col2im: each input pixel sums the patch entries that read
// it, so rows can be processed independently.
template <class T>
void col2im_add(const ConvGeometry& g, const T* cols, T* d_input) {
  const int cin = g.in_channels;
  const int patch = g.patch_size();
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < g.y.in; ++iy) {
    for (int ky = 0; ky < g.y.kernel; ++ky) {
      const int ny = iy + g.y.pad_before - ky;
      if (ny < 0 || ny % g.y.stride != 0) continue;
      const int oy = ny / g.y.stride;
      if (oy >= g.y.out) continue;
      for (int ix = 0; ix < g.x.in; ++ix) {
        T* dst = d_input + (static_cast<std::size_t>(iy) * g.x.in + ix) * cin;
        for (int kx = 0; kx < g.x.kernel; ++kx) {
          const int nx = ix + g.x.pad_before - kx;
          if (nx < 0 || nx % g.x.stride != 0) continue;
          const int ox = nx / g.x.stride;
          if (ox >= g.x.out) continue;
          const T* src = cols + (static_cast<std::size_t>(oy) * g.x.out + ox) * patch +
                         (ky * g.x.kernel + kx) * cin;
          for (int c = 0; c < cin; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

}  // namespace

template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  blas_gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* filters, const T* bias,
                    T* output) {
  const int m = g.out_pixels(), n = g.out_channels, k = g.patch_size();
  const T* cols = input;
  if (!is_pointwise(g)) {
    T* buffer = scratch<T>(static_cast<std::size_t>(m) * k, 0);
    im2col(g, input, buffer);
    cols = buffer;
  }
  if (bias) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) std::copy(bias, bias + n, output + static_cast<std::size_t>(i) * n);
  }
  blas_gemm(false, false, m, n, k, T(1), cols, k, filters, n, bias ? T(1) : T(0), output, n);
}

template <class T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* filters, const T* d_output,
                     T* d_input, T* d_filters, T* d_bias) {
  const int m = g.out_pixels(), n = g.out_channels, k = g.patch_size();
  const bool pointwise = is_pointwise(g);
  if (d_bias) {
    for (int i = 0; i < m; ++i) {
      const T* row = d_output + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) d_bias[j] += row[j];
    }
  }
  if (d_filters) {
    const T* cols = input;
    if (!pointwise) {
      T* buffer = scratch<T>(static_cast<std::size_t>(m) * k, 0);
      im2col(g, input, buffer);
      cols = buffer;
    }
    blas_gemm(true, false, k, n, m, T(1), cols, k, d_output, n, T(1), d_filters, n);
  }
  if (d_input) {
    if (pointwise) {
      blas_gemm(false, true, m, k, n, T(1), d_output, n, filters, n, T(1), d_input, k);
    } else {
      T* d_cols = scratch<T>(static_cast<std::size_t>(m) * k, 1);
      blas_gemm(false, true, m, k, n, T(1), d_output, n, filters, n, T(0), d_cols, k);
      col2im_add(g, d_cols, d_input);
    }
  }
}

template <class T>
void pool_forward(const PoolGeometry& g, PoolKind kind, const T* input, T* output, int* argmax) {
  const int c = g.channels;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < g.y.out; ++oy) {
    const int y0 = std::max(oy * g.y.stride - g.y.pad_before, 0);
    const int y1 = std::min(oy * g.y.stride - g.y.pad_before + g.y.kernel, g.y.in);
    for (int ox = 0; ox < g.x.out; ++ox) {
      const int x0 = std::max(ox * g.x.stride - g.x.pad_before, 0);
      const int x1 = std::min(ox * g.x.stride - g.x.pad_before + g.x.kernel, g.x.in);
      T* out = output + (static_cast<std::size_t>(oy) * g.x.out + ox) * c;
      int* arg = argmax ? argmax + (static_cast<std::size_t>(oy) * g.x.out + ox) * c : nullptr;
      if (kind == PoolKind::max) {
        std::fill(out, out + c, -std::numeric_limits<T>::infinity());
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            const int base = (iy * g.x.in + ix) * c;
            for (int ch = 0; ch < c; ++ch) {
              if (input[base + ch] > out[ch]) {
                out[ch] = input[base + ch];
                if (arg) arg[ch] = base + ch;
              }
            }
          }
        }
      } else {
        std::fill(out, out + c, T(0));
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            const T* in = input + (iy * g.x.in + ix) * c;
            for (int ch = 0; ch < c; ++ch) out[ch] += in[ch];
          }
        }
        const T count = static_cast<T>((y1 - y0) * (x1 - x0));
        for (int ch = 0; ch < c; ++ch) out[ch] /= count;
      }
    }
  }
}

template <class T>
void pool_backward(const PoolGeometry& g, PoolKind kind, const T* d_output, const int* argmax,
                   T* d_input) {
  const int c = g.channels;
  if (kind == PoolKind::max) {
    // Each output routes its gradient to one recorded input element.
    const std::size_t outputs = static_cast<std::size_t>(g.y.out) * g.x.out * c;
    for (std::size_t o = 0; o < outputs; ++o) d_input[argmax[o]] += d_output[o];
    return;
  }
  // Average windows overlap when stride < kernel, so gather per input row.
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < g.y.in; ++iy) {
    const int oy_lo = std::max(0, ceil_div_pos(iy + g.y.pad_before - g.y.kernel + 1, g.y.stride));
    const int oy_hi = std::min(g.y.out - 1, (iy + g.y.pad_before) / g.y.stride);
    for (int oy = oy_lo; oy <= oy_hi; ++oy) {
      const int y0 = oy * g.y.stride - g.y.pad_before;
      const int cy = std::min(y0 + g.y.kernel, g.y.in) - std::max(y0, 0);
      for (int ox = 0; ox < g.x.out; ++ox) {
        const int x0 = ox * g.x.stride - g.x.pad_before;
        const int xa = std::max(x0, 0), xb = std::min(x0 + g.x.kernel, g.x.in);
        const std::size_t o = (static_cast<std::size_t>(oy) * g.x.out + ox) * c;
        const T count = static_cast<T>(cy * (xb - xa));
        for (int ix = xa; ix < xb; ++ix) {
          T* dst = d_input + (iy * g.x.in + ix) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += d_output[o + ch] / count;
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

}  // namespace ssid::kernels::parallel
