// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "tefs/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace tefs::simd::avx2 {

namespace {

constexpr int kMr = 6;
constexpr int kNr = 16;
constexpr int kKc = 256;
constexpr int kMc = 96;
constexpr int kNc = 2048;

inline float load_a(Trans ta, const float* a, int lda, int i, int p) {
    return ta == Trans::No ? a[static_cast<std::ptrdiff_t>(i) * lda + p]
                           : a[static_cast<std::ptrdiff_t>(p) * lda + i];
}

// Packs an mc x kc block of alpha*op(A) into kMr-row slivers; each sliver is
// stored k-major with kMr contiguous values, zero padded past mc.
void pack_a(Trans ta, const float* a, int lda, int i0, int mc, int p0, int kc, float alpha,
            float* out) {
    for (int ir = 0; ir < mc; ir += kMr) {
        const int rows = std::min(kMr, mc - ir);
        for (int p = 0; p < kc; ++p) {
            for (int r = 0; r < rows; ++r) *out++ = alpha * load_a(ta, a, lda, i0 + ir + r, p0 + p);
            for (int r = rows; r < kMr; ++r) *out++ = 0.0f;
        }
    }
}

// Packs a kc x nc block of op(B) into kNr-column slivers, k-major.
void pack_b(Trans tb, const float* b, int ldb, int p0, int kc, int j0, int nc, float* out) {
    for (int jr = 0; jr < nc; jr += kNr) {
        const int cols = std::min(kNr, nc - jr);
        if (tb == Trans::No) {
            for (int p = 0; p < kc; ++p) {
                const float* src = b + static_cast<std::ptrdiff_t>(p0 + p) * ldb + j0 + jr;
                if (cols == kNr) {
                    _mm256_storeu_ps(out, _mm256_loadu_ps(src));
                    _mm256_storeu_ps(out + 8, _mm256_loadu_ps(src + 8));
                } else {
                    for (int c = 0; c < cols; ++c) out[c] = src[c];
                    for (int c = cols; c < kNr; ++c) out[c] = 0.0f;
                }
                out += kNr;
            }
        } else {
            for (int p = 0; p < kc; ++p) {
                for (int c = 0; c < cols; ++c)
                    out[c] = b[static_cast<std::ptrdiff_t>(j0 + jr + c) * ldb + p0 + p];
                for (int c = cols; c < kNr; ++c) out[c] = 0.0f;
                out += kNr;
            }
        }
    }
}

// acc(6x16) = sum_p A[:,p] * B[p,:]; then C += acc on the valid rows/cols.
void micro_kernel(int kc, const float* pa, const float* pb, float* c, int ldc, int rows,
                  int cols) {
    __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
    __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
    __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
    __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
    __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
    __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();

    for (int p = 0; p < kc; ++p) {
        const __m256 b0 = _mm256_loadu_ps(pb);
        const __m256 b1 = _mm256_loadu_ps(pb + 8);
        __m256 av = _mm256_broadcast_ss(pa + 0);
        c00 = _mm256_fmadd_ps(av, b0, c00);
        c01 = _mm256_fmadd_ps(av, b1, c01);
        av = _mm256_broadcast_ss(pa + 1);
        c10 = _mm256_fmadd_ps(av, b0, c10);
        c11 = _mm256_fmadd_ps(av, b1, c11);
        av = _mm256_broadcast_ss(pa + 2);
        c20 = _mm256_fmadd_ps(av, b0, c20);
        c21 = _mm256_fmadd_ps(av, b1, c21);
        av = _mm256_broadcast_ss(pa + 3);
        c30 = _mm256_fmadd_ps(av, b0, c30);
        c31 = _mm256_fmadd_ps(av, b1, c31);
        av = _mm256_broadcast_ss(pa + 4);
        c40 = _mm256_fmadd_ps(av, b0, c40);
        c41 = _mm256_fmadd_ps(av, b1, c41);
        av = _mm256_broadcast_ss(pa + 5);
        c50 = _mm256_fmadd_ps(av, b0, c50);
        c51 = _mm256_fmadd_ps(av, b1, c51);
        pa += kMr;
        pb += kNr;
    }

    alignas(32) float acc[kMr][kNr];
    _mm256_store_ps(acc[0], c00);
    _mm256_store_ps(acc[0] + 8, c01);
    _mm256_store_ps(acc[1], c10);
    _mm256_store_ps(acc[1] + 8, c11);
    _mm256_store_ps(acc[2], c20);
    _mm256_store_ps(acc[2] + 8, c21);
    _mm256_store_ps(acc[3], c30);
    _mm256_store_ps(acc[3] + 8, c31);
    _mm256_store_ps(acc[4], c40);
    _mm256_store_ps(acc[4] + 8, c41);
    _mm256_store_ps(acc[5], c50);
    _mm256_store_ps(acc[5] + 8, c51);

    if (cols == kNr) {
        for (int r = 0; r < rows; ++r) {
            float* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
            _mm256_storeu_ps(crow, _mm256_add_ps(_mm256_loadu_ps(crow), _mm256_load_ps(acc[r])));
            _mm256_storeu_ps(crow + 8,
                             _mm256_add_ps(_mm256_loadu_ps(crow + 8), _mm256_load_ps(acc[r] + 8)));
        }
    } else {
        for (int r = 0; r < rows; ++r) {
            float* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
            for (int j = 0; j < cols; ++j) crow[j] += acc[r][j];
        }
    }
}

void scale_c(int m, int n, float beta, float* c, int ldc) {
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        if (beta == 0.0f) {
            std::memset(crow, 0, sizeof(float) * static_cast<std::size_t>(n));
        } else if (beta != 1.0f) {
            for (int j = 0; j < n; ++j) crow[j] *= beta;
        }
    }
}

}  // namespace

void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    if (m <= 0 || n <= 0) return;
    scale_c(m, n, beta, c, ldc);
    if (k <= 0 || alpha == 0.0f) return;

    thread_local std::vector<float> abuf;
    thread_local std::vector<float> bbuf;
    abuf.resize(static_cast<std::size_t>(kMc + kMr) * kKc);
    bbuf.resize(static_cast<std::size_t>(kNc + kNr) * kKc);

    for (int j0 = 0; j0 < n; j0 += kNc) {
        const int nc = std::min(kNc, n - j0);
        for (int p0 = 0; p0 < k; p0 += kKc) {
            const int kc = std::min(kKc, k - p0);
            pack_b(tb, b, ldb, p0, kc, j0, nc, bbuf.data());
            for (int i0 = 0; i0 < m; i0 += kMc) {
                const int mc = std::min(kMc, m - i0);
                pack_a(ta, a, lda, i0, mc, p0, kc, alpha, abuf.data());
                for (int jr = 0; jr < nc; jr += kNr) {
                    const int cols = std::min(kNr, nc - jr);
                    const float* pb = bbuf.data() + static_cast<std::ptrdiff_t>(jr) * kc;
                    for (int ir = 0; ir < mc; ir += kMr) {
                        const int rows = std::min(kMr, mc - ir);
                        const float* pa = abuf.data() + static_cast<std::ptrdiff_t>(ir) * kc;
                        float* cblk = c + static_cast<std::ptrdiff_t>(i0 + ir) * ldc + j0 + jr;
                        micro_kernel(kc, pa, pb, cblk, ldc, rows, cols);
                    }
                }
            }
        }
    }
}

float dot(std::span<const float> x, std::span<const float> y) {
    const std::size_t n = x.size();
    std::size_t i = 0;
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x.data() + i), _mm256_loadu_ps(y.data() + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x.data() + i + 8), _mm256_loadu_ps(y.data() + i + 8),
                               acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x.data() + i), _mm256_loadu_ps(y.data() + i), acc0);
    acc0 = _mm256_add_ps(acc0, acc1);
    __m128 lo = _mm_add_ps(_mm256_castps256_ps128(acc0), _mm256_extractf128_ps(acc0, 1));
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_movehdup_ps(lo));
    float total = _mm_cvtss_f32(lo);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    const std::size_t n = x.size();
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y.data() + i,
                         _mm256_fmadd_ps(av, _mm256_loadu_ps(x.data() + i), _mm256_loadu_ps(y.data() + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu(std::span<float> x) {
    const __m256 zero = _mm256_setzero_ps();
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x.data() + i, _mm256_max_ps(_mm256_loadu_ps(x.data() + i), zero));
    for (; i < n; ++i) x[i] = std::max(x[i], 0.0f);
}

}  // namespace tefs::simd::avx2
