#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tefs::network {

// Per-sample shape (channels, height, width).
struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

// Dense NCHW batch.
template <typename T>
struct Tensor {
    int n = 0;
    Shape3 shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int batch, Shape3 s) : n(batch), shape(s), data(static_cast<std::size_t>(batch) * s.size(), T(0)) {}

    // Resizes in place, reusing the allocation; contents are unspecified.
    void reshape(int batch, Shape3 s) {
        n = batch;
        shape = s;
        data.resize(static_cast<std::size_t>(batch) * s.size());
    }

    [[nodiscard]] std::size_t sample_size() const { return shape.size(); }
    [[nodiscard]] std::size_t size() const { return data.size(); }

    T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
    [[nodiscard]] const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }

    T& at(int i, int c, int h, int w) {
        return data[((static_cast<std::size_t>(i) * shape.c + c) * shape.h + h) * shape.w + w];
    }
    [[nodiscard]] const T& at(int i, int c, int h, int w) const {
        return data[((static_cast<std::size_t>(i) * shape.c + c) * shape.h + h) * shape.w + w];
    }
};

}  // namespace tefs::network
