#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tefs/network/tensor.hpp"
#include "tefs/random.hpp"

namespace tefs::network {

enum class Mode { Train, Eval };

struct ForwardContext {
    Mode mode = Mode::Eval;
    Rng* rng = nullptr;  // dropout masks; required in train mode
};

// Named view of a parameter (trainable) or buffer (BN running stats).
template <typename T>
struct ParamView {
    std::string name;
    std::vector<int> shape;
    std::span<T> value;
    std::span<T> grad;  // empty for buffers
    bool trainable = true;
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    [[nodiscard]] virtual std::string_view kind() const = 0;

    // Throws ShapeError if the layer cannot consume `in`.
    [[nodiscard]] virtual Shape3 output_shape(Shape3 in) const = 0;

    // The returned tensor is owned by the layer (or is `x` itself) and stays
    // valid until the next call; `x` must stay alive until backward.
    virtual const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) = 0;

    // Gradient w.r.t. the last forward input; accumulates parameter grads.
    virtual const Tensor<T>& backward(const Tensor<T>& dy) = 0;

    virtual void collect(const std::string& /*prefix*/, std::vector<ParamView<T>>& /*out*/) {}

    virtual void init(Rng& /*rng*/) {}

    std::string name;
};

// Valid (unpadded) cross-correlation. Weights are [out][in][kh][kw].
template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(int in_channels, int out_channels, int kh, int kw, int sh = 1, int sw = 1, bool input_grad = true);

    [[nodiscard]] std::string_view kind() const override { return "conv2d"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override;
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;
    void collect(const std::string& prefix, std::vector<ParamView<T>>& out) override;
    void init(Rng& rng) override;

    std::vector<T> weight, bias, weight_grad, bias_grad;
    int in_channels, out_channels, kh, kw, sh, sw;
    bool input_grad;

private:
    void im2col(const T* x, Shape3 in, Shape3 out, T* cols) const;
    void col2im(const T* cols, Shape3 in, Shape3 out, T* dx) const;
    const Tensor<T>* input_ = nullptr;
    Tensor<T> out_, dx_;
    std::vector<T> cols_, dcols_;
};

template <typename T>
class Relu final : public Layer<T> {
public:
    [[nodiscard]] std::string_view kind() const override { return "relu"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override { return in; }
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;

private:
    Tensor<T> out_, dx_;
};

// Per-channel batch normalization; momentum 0.1, eps 1e-5. Running variance
// tracks the unbiased batch variance.
template <typename T>
class BatchNorm2d final : public Layer<T> {
public:
    explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);

    [[nodiscard]] std::string_view kind() const override { return "batchnorm2d"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override;
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;
    void collect(const std::string& prefix, std::vector<ParamView<T>>& out) override;
    void init(Rng& rng) override;

    std::vector<T> gamma, beta, gamma_grad, beta_grad, running_mean, running_var;
    int channels;
    double momentum, eps;

private:
    Tensor<T> xhat_, out_, dx_;
    std::vector<T> inv_std_;
    Mode last_mode_ = Mode::Eval;
};

template <typename T>
class MaxPool2d final : public Layer<T> {
public:
    MaxPool2d(int kh = 2, int kw = 2, int sh = 2, int sw = 2);

    [[nodiscard]] std::string_view kind() const override { return "maxpool2d"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override;
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;

    int kh, kw, sh, sw;

private:
    Tensor<T> out_, dx_;
    std::vector<std::size_t> argmax_;
};

// Inverted dropout: active only in train mode, scales kept units by 1/(1-p).
template <typename T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double p);

    [[nodiscard]] std::string_view kind() const override { return "dropout"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override { return in; }
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;

    double p;

private:
    std::vector<T> mask_;
    Tensor<T> out_, dx_;
    bool active_ = false;
};

// Fully connected over the flattened per-sample input; weights are [out][in].
template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(int in_features, int out_features);

    [[nodiscard]] std::string_view kind() const override { return "dense"; }
    [[nodiscard]] Shape3 output_shape(Shape3 in) const override;
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx) override;
    const Tensor<T>& backward(const Tensor<T>& dy) override;
    void collect(const std::string& prefix, std::vector<ParamView<T>>& out) override;
    void init(Rng& rng) override;

    std::vector<T> weight, bias, weight_grad, bias_grad;
    int in_features, out_features;

private:
    const Tensor<T>* input_ = nullptr;
    Tensor<T> out_, dx_;
};

template <typename T>
class Sequential {
public:
    Sequential() = default;
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    Layer<T>& add(std::unique_ptr<Layer<T>> layer, std::string name);

    template <typename L, typename... Args>
    L& emplace(std::string name, Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(std::move(layer), std::move(name));
        return ref;
    }

    [[nodiscard]] Shape3 output_shape(Shape3 in) const;
    const Tensor<T>& forward(const Tensor<T>& x, ForwardContext& ctx);
    const Tensor<T>& backward(const Tensor<T>& dy);
    void collect(const std::string& prefix, std::vector<ParamView<T>>& out);
    void init(Rng& rng);

    [[nodiscard]] std::size_t size() const { return layers_.size(); }
    Layer<T>& operator[](std::size_t i) { return *layers_[i]; }
    const Layer<T>& operator[](std::size_t i) const { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace tefs::network
