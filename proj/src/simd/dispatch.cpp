#include <atomic>
#include <cstdlib>
#include <string>

#include "tefs/error.hpp"
#include "tefs/simd/kernels.hpp"

namespace tefs::simd {

namespace {

bool cpu_has_avx2() {
#if defined(TEFS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    if (const char* env = std::getenv("TEFS_SIMD")) {
        if (std::string(env) == "scalar") return Isa::Scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    return isa == Isa::Scalar || (isa == Isa::Avx2 && cpu_has_avx2());
}

Isa detected_isa() {
    static const Isa best = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return best;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa))
        throw InvalidArgument("SIMD variant not available on this CPU: " + std::string(isa_name(isa)));
    active().store(isa, std::memory_order_relaxed);
}

#if defined(TEFS_HAVE_AVX2)
#define TEFS_DISPATCH(fn, ...) \
    (active_isa() == Isa::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define TEFS_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    TEFS_DISPATCH(gemm, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

float dot(std::span<const float> x, std::span<const float> y) { return TEFS_DISPATCH(dot, x, y); }

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    TEFS_DISPATCH(axpy, alpha, x, y);
}

void relu(std::span<float> x) { TEFS_DISPATCH(relu, x); }

#undef TEFS_DISPATCH

}  // namespace tefs::simd
