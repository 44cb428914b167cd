#pragma once

// Dense float kernels used by the network engine.
//
// Every kernel has a portable scalar reference in tefs::simd::scalar and,
// on x86-64, an AVX2/FMA variant in tefs::simd::avx2. The unqualified entry
// points dispatch once per process to the best variant the CPU supports.
// Setting TEFS_SIMD=scalar in the environment pins the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace tefs::simd {

enum class Isa { Scalar, Avx2 };

enum class Trans { No, Yes };

std::string_view isa_name(Isa isa);

// Best variant compiled in and supported by this CPU.
Isa detected_isa();

// Variant the dispatching entry points currently use.
Isa active_isa();

// Overrides dispatch; throws InvalidArgument if the variant is unavailable.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);

// Row-major C = alpha * op(A) * op(B) + beta * C, where op(A) is M x K and
// op(B) is K x N. lda/ldb/ldc are row strides of the stored matrices.
// beta == 0 overwrites C without reading it.
void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);

float dot(std::span<const float> x, std::span<const float> y);

// y += alpha * x
void axpy(float alpha, std::span<const float> x, std::span<float> y);

// x = max(x, 0)
void relu(std::span<float> x);

namespace scalar {
void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
float dot(std::span<const float> x, std::span<const float> y);
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void relu(std::span<float> x);
}  // namespace scalar

#if defined(TEFS_HAVE_AVX2)
namespace avx2 {
void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
float dot(std::span<const float> x, std::span<const float> y);
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void relu(std::span<float> x);
}  // namespace avx2
#endif

// Generic reference GEMM for any arithmetic type (double gradient checks).
template <typename T>
void gemm_ref(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b,
              int ldb, T beta, T* c, int ldc) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        if (beta == T(0)) {
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        } else if (beta != T(1)) {
            for (int j = 0; j < n; ++j) crow[j] *= beta;
        }
        for (int p = 0; p < k; ++p) {
            const T av = ta == Trans::No ? a[static_cast<std::ptrdiff_t>(i) * lda + p]
                                         : a[static_cast<std::ptrdiff_t>(p) * lda + i];
            const T s = alpha * av;
            if (tb == Trans::No) {
                const T* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
                for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += s * b[static_cast<std::ptrdiff_t>(j) * ldb + p];
            }
        }
    }
}

}  // namespace tefs::simd
