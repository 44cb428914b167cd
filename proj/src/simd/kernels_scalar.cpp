#include "tefs/simd/kernels.hpp"

#include <algorithm>

namespace tefs::simd::scalar {

void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    gemm_ref<float>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

float dot(std::span<const float> x, std::span<const float> y) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void relu(std::span<float> x) {
    for (auto& v : x) v = std::max(v, 0.0f);
}

}  // namespace tefs::simd::scalar
