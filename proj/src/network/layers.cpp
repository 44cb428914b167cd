#include "tefs/network/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tefs/error.hpp"
#include "tefs/network/linalg.hpp"

namespace tefs::network {

namespace {

std::string shape_str(Shape3 s) {
    return "(" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w) + ")";
}

template <typename T>
void fan_in_uniform(std::vector<T>& w, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_c, int out_c, int kh_, int kw_, int sh_, int sw_, bool input_grad_)
    : in_channels(in_c), out_channels(out_c), kh(kh_), kw(kw_), sh(sh_), sw(sw_), input_grad(input_grad_) {
    if (in_c < 1 || out_c < 1 || kh < 1 || kw < 1 || sh < 1 || sw < 1)
        throw InvalidArgument("conv2d dimensions must be positive");
    const auto wsize = static_cast<std::size_t>(out_c) * in_c * kh * kw;
    weight.assign(wsize, T(0));
    weight_grad.assign(wsize, T(0));
    bias.assign(static_cast<std::size_t>(out_c), T(0));
    bias_grad.assign(static_cast<std::size_t>(out_c), T(0));
}

template <typename T>
Shape3 Conv2d<T>::output_shape(Shape3 in) const {
    if (in.c != in_channels)
        throw ShapeError("conv2d '" + this->name + "' expects " + std::to_string(in_channels) + " channels, got " +
                         shape_str(in));
    if (in.h < kh || in.w < kw)
        throw ShapeError("conv2d '" + this->name + "' kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " larger than input " + shape_str(in));
    return {out_channels, (in.h - kh) / sh + 1, (in.w - kw) / sw + 1};
}

template <typename T>
void Conv2d<T>::im2col(const T* x, Shape3 in, Shape3 out, T* cols) const {
    const int plane = out.h * out.w;
    for (int c = 0; c < in.c; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                T* row = cols + static_cast<std::size_t>((c * kh + i) * kw + j) * plane;
                for (int oh = 0; oh < out.h; ++oh) {
                    const T* src = x + (static_cast<std::size_t>(c) * in.h + oh * sh + i) * in.w + j;
                    T* dst = row + oh * out.w;
                    if (sw == 1) {
                        std::copy(src, src + out.w, dst);
                    } else {
                        for (int ow = 0; ow < out.w; ++ow) dst[ow] = src[ow * sw];
                    }
                }
            }
}

template <typename T>
void Conv2d<T>::col2im(const T* cols, Shape3 in, Shape3 out, T* dx) const {
    const int plane = out.h * out.w;
    for (int c = 0; c < in.c; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                const T* row = cols + static_cast<std::size_t>((c * kh + i) * kw + j) * plane;
                for (int oh = 0; oh < out.h; ++oh) {
                    T* dst = dx + (static_cast<std::size_t>(c) * in.h + oh * sh + i) * in.w + j;
                    const T* src = row + oh * out.w;
                    for (int ow = 0; ow < out.w; ++ow) dst[ow * sw] += src[ow];
                }
            }
}

template <typename T>
const Tensor<T>& Conv2d<T>::forward(const Tensor<T>& x, ForwardContext& /*ctx*/) {
    const Shape3 out_shape = output_shape(x.shape);
    input_ = &x;
    out_.reshape(x.n, out_shape);
    const int patch = in_channels * kh * kw;
    const int plane = out_shape.h * out_shape.w;
    cols_.resize(static_cast<std::size_t>(patch) * plane);
    for (int n = 0; n < x.n; ++n) {
        im2col(x.sample(n), x.shape, out_shape, cols_.data());
        T* yn = out_.sample(n);
        for (int c = 0; c < out_channels; ++c) std::fill(yn + c * plane, yn + (c + 1) * plane, bias[static_cast<std::size_t>(c)]);
        gemm<T>(Trans::No, Trans::No, out_channels, plane, patch, T(1), weight.data(), patch, cols_.data(), plane, T(1),
                yn, plane);
    }
    return out_;
}

template <typename T>
const Tensor<T>& Conv2d<T>::backward(const Tensor<T>& dy) {
    if (input_ == nullptr) throw InvalidArgument("conv2d backward called before forward");
    const Tensor<T>& x = *input_;
    const Shape3 in_shape = x.shape;
    const Shape3 out_shape = dy.shape;
    const int patch = in_channels * kh * kw;
    const int plane = out_shape.h * out_shape.w;
    cols_.resize(static_cast<std::size_t>(patch) * plane);
    if (input_grad) {
        dcols_.resize(cols_.size());
        dx_.reshape(dy.n, in_shape);
        std::fill(dx_.data.begin(), dx_.data.end(), T(0));
    } else {
        dx_.reshape(0, in_shape);
    }
    for (int n = 0; n < dy.n; ++n) {
        const T* dyn = dy.sample(n);
        im2col(x.sample(n), in_shape, out_shape, cols_.data());
        gemm<T>(Trans::No, Trans::Yes, out_channels, patch, plane, T(1), dyn, plane, cols_.data(), plane, T(1),
                weight_grad.data(), patch);
        for (int c = 0; c < out_channels; ++c) {
            T acc = T(0);
            const T* row = dyn + c * plane;
#pragma omp simd reduction(+ : acc)
            for (int p = 0; p < plane; ++p) acc += row[p];
            bias_grad[static_cast<std::size_t>(c)] += acc;
        }
        if (input_grad) {
            gemm<T>(Trans::Yes, Trans::No, patch, plane, out_channels, T(1), weight.data(), patch, dyn, plane, T(0),
                    dcols_.data(), plane);
            col2im(dcols_.data(), in_shape, out_shape, dx_.sample(n));
        }
    }
    return dx_;
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, std::vector<ParamView<T>>& out) {
    out.push_back({prefix + "weight", {out_channels, in_channels, kh, kw}, weight, weight_grad, true});
    out.push_back({prefix + "bias", {out_channels}, bias, bias_grad, true});
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
    fan_in_uniform(weight, in_channels * kh * kw, rng);
    std::fill(bias.begin(), bias.end(), T(0));
}

// ---------------------------------------------------------------- Relu

template <typename T>
const Tensor<T>& Relu<T>::forward(const Tensor<T>& x, ForwardContext& /*ctx*/) {
    out_.reshape(x.n, x.shape);
    if constexpr (std::is_same_v<T, float>) {
        std::copy(x.data.begin(), x.data.end(), out_.data.begin());
        simd::relu(out_.data);
    } else {
        for (std::size_t i = 0; i < x.data.size(); ++i) out_.data[i] = std::max(x.data[i], T(0));
    }
    return out_;
}

template <typename T>
const Tensor<T>& Relu<T>::backward(const Tensor<T>& dy) {
    dx_.reshape(dy.n, dy.shape);
    const T* __restrict o = out_.data.data();
    const T* __restrict g = dy.data.data();
    T* __restrict d = dx_.data.data();
    const std::size_t n = dy.data.size();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
        const T gv = g[i];  // unconditional load lets the select vectorize
        d[i] = o[i] > T(0) ? gv : T(0);
    }
    return dx_;
}

// ---------------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels_, double momentum_, double eps_)
    : channels(channels_), momentum(momentum_), eps(eps_) {
    const auto c = static_cast<std::size_t>(channels);
    gamma.assign(c, T(1));
    beta.assign(c, T(0));
    gamma_grad.assign(c, T(0));
    beta_grad.assign(c, T(0));
    running_mean.assign(c, T(0));
    running_var.assign(c, T(1));
}

template <typename T>
Shape3 BatchNorm2d<T>::output_shape(Shape3 in) const {
    if (in.c != channels)
        throw ShapeError("batchnorm '" + this->name + "' expects " + std::to_string(channels) + " channels, got " +
                         shape_str(in));
    return in;
}

template <typename T>
const Tensor<T>& BatchNorm2d<T>::forward(const Tensor<T>& x, ForwardContext& ctx) {
    (void)output_shape(x.shape);  // validates channels
    const int plane = x.shape.h * x.shape.w;
    out_.reshape(x.n, x.shape);
    last_mode_ = ctx.mode;
    if (ctx.mode == Mode::Eval) {
        for (int c = 0; c < channels; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[ci]) + eps);
            const T scale = static_cast<T>(gamma[ci] * inv);
            const T shift = static_cast<T>(beta[ci] - running_mean[ci] * gamma[ci] * inv);
            for (int n = 0; n < x.n; ++n) {
                const T* src = x.sample(n) + static_cast<std::size_t>(c) * plane;
                T* dst = out_.sample(n) + static_cast<std::size_t>(c) * plane;
                for (int p = 0; p < plane; ++p) dst[p] = src[p] * scale + shift;
            }
        }
        return out_;
    }

    if (x.n < 2) throw InvalidArgument("batch normalization in train mode needs a batch of at least 2");
    const double count = static_cast<double>(x.n) * plane;
    xhat_.reshape(x.n, x.shape);
    inv_std_.assign(static_cast<std::size_t>(channels), T(0));
    for (int c = 0; c < channels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        // per-plane partial sums in T, accumulated across the batch in double
        double sum = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const T* src = x.sample(n) + static_cast<std::size_t>(c) * plane;
            T part = T(0);
#pragma omp simd reduction(+ : part)
            for (int p = 0; p < plane; ++p) part += src[p];
            sum += part;
        }
        const double mean = sum / count;
        const T mean_t = static_cast<T>(mean);
        double ss = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const T* src = x.sample(n) + static_cast<std::size_t>(c) * plane;
            T part = T(0);
#pragma omp simd reduction(+ : part)
            for (int p = 0; p < plane; ++p) {
                const T d = src[p] - mean_t;
                part += d * d;
            }
            ss += part;
        }
        const double var = ss / count;
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std_[ci] = static_cast<T>(inv);
        const T inv_t = static_cast<T>(inv), g = gamma[ci], bt = beta[ci];
        for (int n = 0; n < x.n; ++n) {
            const T* src = x.sample(n) + static_cast<std::size_t>(c) * plane;
            T* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * plane;
            T* dst = out_.sample(n) + static_cast<std::size_t>(c) * plane;
            for (int p = 0; p < plane; ++p) {
                xh[p] = (src[p] - mean_t) * inv_t;
                dst[p] = g * xh[p] + bt;
            }
        }
        const double unbiased = count > 1.0 ? ss / (count - 1.0) : var;
        running_mean[ci] = static_cast<T>((1.0 - momentum) * running_mean[ci] + momentum * mean);
        running_var[ci] = static_cast<T>((1.0 - momentum) * running_var[ci] + momentum * unbiased);
    }
    return out_;
}

template <typename T>
const Tensor<T>& BatchNorm2d<T>::backward(const Tensor<T>& dy) {
    if (last_mode_ != Mode::Train) throw InvalidArgument("batchnorm backward requires a train-mode forward pass");
    const int plane = dy.shape.h * dy.shape.w;
    const double count = static_cast<double>(dy.n) * plane;
    dx_.reshape(dy.n, dy.shape);
    for (int c = 0; c < channels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < dy.n; ++n) {
            const T* g = dy.sample(n) + static_cast<std::size_t>(c) * plane;
            const T* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * plane;
            T a = T(0), b = T(0);
#pragma omp simd reduction(+ : a, b)
            for (int p = 0; p < plane; ++p) {
                a += g[p];
                b += g[p] * xh[p];
            }
            sum_dy += a;
            sum_dy_xhat += b;
        }
        gamma_grad[ci] += static_cast<T>(sum_dy_xhat);
        beta_grad[ci] += static_cast<T>(sum_dy);
        const double k = gamma[ci] * inv_std_[ci] / count;
        const T scale = static_cast<T>(k * count);
        const T offset = static_cast<T>(k * sum_dy);
        const T slope = static_cast<T>(k * sum_dy_xhat);
        for (int n = 0; n < dy.n; ++n) {
            const T* g = dy.sample(n) + static_cast<std::size_t>(c) * plane;
            const T* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * plane;
            T* d = dx_.sample(n) + static_cast<std::size_t>(c) * plane;
            for (int p = 0; p < plane; ++p) d[p] = scale * g[p] - offset - xh[p] * slope;
        }
    }
    return dx_;
}

template <typename T>
void BatchNorm2d<T>::collect(const std::string& prefix, std::vector<ParamView<T>>& out) {
    out.push_back({prefix + "gamma", {channels}, gamma, gamma_grad, true});
    out.push_back({prefix + "beta", {channels}, beta, beta_grad, true});
    out.push_back({prefix + "running_mean", {channels}, running_mean, {}, false});
    out.push_back({prefix + "running_var", {channels}, running_var, {}, false});
}

template <typename T>
void BatchNorm2d<T>::init(Rng& /*rng*/) {
    std::fill(gamma.begin(), gamma.end(), T(1));
    std::fill(beta.begin(), beta.end(), T(0));
    std::fill(running_mean.begin(), running_mean.end(), T(0));
    std::fill(running_var.begin(), running_var.end(), T(1));
}

// ---------------------------------------------------------------- MaxPool2d

template <typename T>
MaxPool2d<T>::MaxPool2d(int kh_, int kw_, int sh_, int sw_) : kh(kh_), kw(kw_), sh(sh_), sw(sw_) {
    if (kh < 1 || kw < 1 || sh < 1 || sw < 1) throw InvalidArgument("pooling dimensions must be positive");
}

template <typename T>
Shape3 MaxPool2d<T>::output_shape(Shape3 in) const {
    if (in.h < kh || in.w < kw)
        throw ShapeError("maxpool '" + this->name + "' window " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " larger than input " + shape_str(in));
    return {in.c, (in.h - kh) / sh + 1, (in.w - kw) / sw + 1};
}

template <typename T>
const Tensor<T>& MaxPool2d<T>::forward(const Tensor<T>& x, ForwardContext& /*ctx*/) {
    const Shape3 out = output_shape(x.shape);
    out_.reshape(x.n, out);
    argmax_.resize(out_.size());
    const std::size_t in_plane = static_cast<std::size_t>(x.shape.h) * x.shape.w;
    std::size_t o = 0;
    if (kh == 2 && kw == 2 && sh == 2 && sw == 2) {
        for (std::size_t base = 0; base < x.data.size(); base += in_plane)
            for (int oh = 0; oh < out.h; ++oh) {
                const std::size_t r0 = base + static_cast<std::size_t>(2 * oh) * x.shape.w;
                const T* top = x.data.data() + r0;
                const T* bot = top + x.shape.w;
                for (int ow = 0; ow < out.w; ++ow, ++o) {
                    const int j = 2 * ow;
                    const T v1 = top[j + 1], v2 = bot[j], v3 = bot[j + 1];
                    T best = top[j];
                    int k = 0;
                    k = v1 > best ? 1 : k;
                    best = v1 > best ? v1 : best;
                    k = v2 > best ? 2 : k;
                    best = v2 > best ? v2 : best;
                    k = v3 > best ? 3 : k;
                    best = v3 > best ? v3 : best;
                    out_.data[o] = best;
                    argmax_[o] = r0 + static_cast<std::size_t>(k >> 1) * x.shape.w + j + (k & 1);
                }
            }
        dx_.reshape(x.n, x.shape);
        return out_;
    }
    for (std::size_t base = 0; base < x.data.size(); base += in_plane)
        for (int oh = 0; oh < out.h; ++oh)
            for (int ow = 0; ow < out.w; ++ow, ++o) {
                // first maximum in row-major window order wins ties
                std::size_t best_idx = base + static_cast<std::size_t>(oh * sh) * x.shape.w + ow * sw;
                T best = x.data[best_idx];
                for (int i = 0; i < kh; ++i) {
                    const std::size_t row = base + static_cast<std::size_t>(oh * sh + i) * x.shape.w + ow * sw;
                    for (int j = 0; j < kw; ++j) {
                        const T v = x.data[row + j];
                        if (v > best) {
                            best = v;
                            best_idx = row + j;
                        }
                    }
                }
                out_.data[o] = best;
                argmax_[o] = best_idx;
            }
    dx_.reshape(x.n, x.shape);
    return out_;
}

template <typename T>
const Tensor<T>& MaxPool2d<T>::backward(const Tensor<T>& dy) {
    std::fill(dx_.data.begin(), dx_.data.end(), T(0));
    for (std::size_t o = 0; o < dy.data.size(); ++o) dx_.data[argmax_[o]] += dy.data[o];
    return dx_;
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double p_) : p(p_) {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("dropout probability must be in [0, 1)");
}

template <typename T>
const Tensor<T>& Dropout<T>::forward(const Tensor<T>& x, ForwardContext& ctx) {
    active_ = ctx.mode == Mode::Train && p > 0.0;
    if (!active_) return x;
    if (ctx.rng == nullptr) throw InvalidArgument("train-mode dropout needs a random source");
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    mask_.resize(x.data.size());
    out_.reshape(x.n, x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        mask_[i] = ctx.rng->uniform() < p ? T(0) : keep_scale;
        out_.data[i] = x.data[i] * mask_[i];
    }
    return out_;
}

template <typename T>
const Tensor<T>& Dropout<T>::backward(const Tensor<T>& dy) {
    if (!active_) return dy;
    dx_.reshape(dy.n, dy.shape);
    for (std::size_t i = 0; i < dy.data.size(); ++i) dx_.data[i] = dy.data[i] * mask_[i];
    return dx_;
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(int in_f, int out_f) : in_features(in_f), out_features(out_f) {
    if (in_f < 1 || out_f < 1) throw InvalidArgument("dense dimensions must be positive");
    const auto wsize = static_cast<std::size_t>(in_f) * out_f;
    weight.assign(wsize, T(0));
    weight_grad.assign(wsize, T(0));
    bias.assign(static_cast<std::size_t>(out_f), T(0));
    bias_grad.assign(static_cast<std::size_t>(out_f), T(0));
}

template <typename T>
Shape3 Dense<T>::output_shape(Shape3 in) const {
    if (static_cast<int>(in.size()) != in_features)
        throw ShapeError("dense '" + this->name + "' expects " + std::to_string(in_features) + " inputs, got " +
                         shape_str(in));
    return {out_features, 1, 1};
}

template <typename T>
const Tensor<T>& Dense<T>::forward(const Tensor<T>& x, ForwardContext& /*ctx*/) {
    const Shape3 out = output_shape(x.shape);
    input_ = &x;
    out_.reshape(x.n, out);
    for (int n = 0; n < x.n; ++n) std::copy(bias.begin(), bias.end(), out_.sample(n));
    gemm<T>(Trans::No, Trans::Yes, x.n, out_features, in_features, T(1), x.data.data(), in_features, weight.data(),
            in_features, T(1), out_.data.data(), out_features);
    return out_;
}

template <typename T>
const Tensor<T>& Dense<T>::backward(const Tensor<T>& dy) {
    if (input_ == nullptr) throw InvalidArgument("dense backward called before forward");
    const Tensor<T>& x = *input_;
    gemm<T>(Trans::Yes, Trans::No, out_features, in_features, dy.n, T(1), dy.data.data(), out_features,
            x.data.data(), in_features, T(1), weight_grad.data(), in_features);
    for (int n = 0; n < dy.n; ++n)
        for (int o = 0; o < out_features; ++o) bias_grad[static_cast<std::size_t>(o)] += dy.sample(n)[o];
    dx_.reshape(dy.n, x.shape);
    gemm<T>(Trans::No, Trans::No, dy.n, in_features, out_features, T(1), dy.data.data(), out_features, weight.data(),
            in_features, T(0), dx_.data.data(), in_features);
    return dx_;
}

template <typename T>
void Dense<T>::collect(const std::string& prefix, std::vector<ParamView<T>>& out) {
    out.push_back({prefix + "weight", {out_features, in_features}, weight, weight_grad, true});
    out.push_back({prefix + "bias", {out_features}, bias, bias_grad, true});
}

template <typename T>
void Dense<T>::init(Rng& rng) {
    fan_in_uniform(weight, in_features, rng);
    std::fill(bias.begin(), bias.end(), T(0));
}

// ---------------------------------------------------------------- Sequential

template <typename T>
Layer<T>& Sequential<T>::add(std::unique_ptr<Layer<T>> layer, std::string name) {
    layer->name = std::move(name);
    layers_.push_back(std::move(layer));
    return *layers_.back();
}

template <typename T>
Shape3 Sequential<T>::output_shape(Shape3 in) const {
    for (const auto& l : layers_) in = l->output_shape(in);
    return in;
}

template <typename T>
const Tensor<T>& Sequential<T>::forward(const Tensor<T>& x, ForwardContext& ctx) {
    const Tensor<T>* h = &x;
    for (auto& l : layers_) h = &l->forward(*h, ctx);
    return *h;
}

template <typename T>
const Tensor<T>& Sequential<T>::backward(const Tensor<T>& dy) {
    const Tensor<T>* g = &dy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = &layers_[i]->backward(*g);
    return *g;
}

template <typename T>
void Sequential<T>::collect(const std::string& prefix, std::vector<ParamView<T>>& out) {
    for (auto& l : layers_) l->collect(prefix + l->name + ".", out);
}

template <typename T>
void Sequential<T>::init(Rng& rng) {
    for (auto& l : layers_) l->init(rng);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class Relu<float>;
template class Relu<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class Dropout<float>;
template class Dropout<double>;
template class Dense<float>;
template class Dense<double>;
template class Sequential<float>;
template class Sequential<double>;

}  // namespace tefs::network
