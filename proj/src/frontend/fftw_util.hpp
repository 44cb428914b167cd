#pragma once

#include <fftw3.h>

#include <mutex>

namespace tefs::frontend::detail {

// FFTW's planner is not thread-safe; execution of an existing plan is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Plan {
public:
    template <typename Make>
    explicit Plan(Make&& make) {
        std::lock_guard lock(planner_mutex());
        plan_ = make();
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        if (plan_) fftw_destroy_plan(plan_);
    }
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_ = nullptr;
};

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    ~FftwBuffer() { fftw_free(data); }
    fftw_complex* data;
};

struct FftwRealBuffer {
    explicit FftwRealBuffer(std::size_t n) : data(fftw_alloc_real(n)) {}
    FftwRealBuffer(const FftwRealBuffer&) = delete;
    FftwRealBuffer& operator=(const FftwRealBuffer&) = delete;
    ~FftwRealBuffer() { fftw_free(data); }
    double* data;
};

}  // namespace tefs::frontend::detail
