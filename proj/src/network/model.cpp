#include "tefs/network/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tefs/error.hpp"

namespace tefs::network {

namespace {

constexpr int kChannels = 64;

// Conv2D+ReLU+BN -> MaxPool stages shared by all architectures. The first
// convolution sees the raw input, so its input gradient is never needed.
template <typename T>
void add_stage(Sequential<T>& seq, int index, int in_channels, int kernel) {
    const std::string i = std::to_string(index);
    seq.template emplace<Conv2d<T>>("conv" + i, in_channels, kChannels, kernel, kernel, 1, 1, index != 1);
    seq.template emplace<Relu<T>>("relu" + i);
    seq.template emplace<BatchNorm2d<T>>("bn" + i, kChannels);
    seq.template emplace<MaxPool2d<T>>("pool" + i, 2, 2, 2, 2);
}

template <typename T>
Sequential<T> make_branch(Arch arch) {
    Sequential<T> seq;
    add_stage(seq, 1, 1, 2);
    add_stage(seq, 2, kChannels, 3);
    if (arch == Arch::A2) add_stage(seq, 3, kChannels, 4);
    seq.template emplace<Dropout<T>>("dropout", kDropout);
    return seq;
}

}  // namespace

std::string_view arch_name(Arch arch) {
    switch (arch) {
        case Arch::A1: return "A1";
        case Arch::A2: return "A2";
        case Arch::TEFS: return "TEFS";
    }
    return "unknown";
}

Arch parse_arch(std::string_view name) {
    if (name == "A1" || name == "a1") return Arch::A1;
    if (name == "A2" || name == "a2") return Arch::A2;
    if (name == "TEFS" || name == "tefs") return Arch::TEFS;
    throw InvalidArgument("unknown architecture '" + std::string(name) + "'");
}

template <typename T>
Network<T>::Network(Arch arch, int bands, int frames, std::uint64_t seed)
    : arch_(arch), bands_(bands), frames_(frames), seed_(seed) {
    if (bands < 1 || frames < 1) throw ShapeError("input geometry must be positive");
    if (arch == Arch::TEFS) {
        branch_names_ = {"envelope", "fine_structure"};
    } else {
        branch_names_ = {"features"};
    }
    for (std::size_t b = 0; b < branch_names_.size(); ++b) branches_.push_back(make_branch<T>(arch));

    const Shape3 out = branches_.front().output_shape({1, bands, frames});
    branch_features_ = static_cast<int>(out.size());
    const int concat = branch_features_ * static_cast<int>(branches_.size());
    switch (arch) {
        case Arch::A1:
            head_.template emplace<Dense<T>>("fc1", concat, 2);
            break;
        case Arch::A2:
            head_.template emplace<Dense<T>>("fc1", concat, 4096);
            head_.template emplace<Relu<T>>("relu1");
            head_.template emplace<Dense<T>>("fc2", 4096, 2);
            break;
        case Arch::TEFS:
            head_.template emplace<Dense<T>>("fc1", concat, 128);
            head_.template emplace<Relu<T>>("relu1");
            head_.template emplace<Dense<T>>("fc2", 128, 2);
            break;
    }
    (void)head_.output_shape({concat, 1, 1});

    if (bands == kDefaultBands && frames == kDefaultFrames) {
        const int expected_branch = arch == Arch::A2 ? 256 : 4224;
        if (branch_features_ != expected_branch || (arch == Arch::TEFS && concat != 8448))
            throw ShapeError("flatten size " + std::to_string(concat) + " does not match the " +
                             std::string(arch_name(arch)) + " layout");
    }
}

template <typename T>
Tensor<T> Network<T>::forward(std::span<const Tensor<T>> inputs, ForwardContext& ctx) {
    if (inputs.size() != branches_.size())
        throw ShapeError(std::string(arch_name(arch_)) + " expects " + std::to_string(branches_.size()) +
                         " input(s), got " + std::to_string(inputs.size()));
    const int n = inputs.front().n;
    for (const auto& in : inputs) {
        if (in.n != n) throw ShapeError("unpaired branch inputs: batch sizes differ");
        if (in.shape != Shape3{1, bands_, frames_})
            throw ShapeError("input shape does not match the network geometry");
    }
    const int concat = classifier_inputs();
    features_.reshape(n, {concat, 1, 1});
    for (std::size_t b = 0; b < branches_.size(); ++b) {
        const Tensor<T>& out = branches_[b].forward(inputs[b], ctx);
        for (int i = 0; i < n; ++i)
            std::copy(out.sample(i), out.sample(i) + branch_features_,
                      features_.sample(i) + static_cast<std::ptrdiff_t>(b) * branch_features_);
    }
    return head_.forward(features_, ctx);
}

template <typename T>
void Network<T>::backward(const Tensor<T>& dlogits) {
    const Tensor<T>& dfeatures = head_.backward(dlogits);
    const int n = dfeatures.n;
    const Shape3 branch_out = branches_.front().output_shape({1, bands_, frames_});
    for (std::size_t b = 0; b < branches_.size(); ++b) {
        dbranch_.reshape(n, branch_out);
        for (int i = 0; i < n; ++i) {
            const T* src = dfeatures.sample(i) + static_cast<std::ptrdiff_t>(b) * branch_features_;
            std::copy(src, src + branch_features_, dbranch_.sample(i));
        }
        branches_[b].backward(dbranch_);
    }
}

template <typename T>
std::vector<ParamView<T>> Network<T>::parameters() {
    std::vector<ParamView<T>> out;
    for (std::size_t b = 0; b < branches_.size(); ++b) branches_[b].collect(branch_names_[b] + ".", out);
    head_.collect("classifier.", out);
    return out;
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto& p : parameters())
        if (p.trainable) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
std::size_t Network<T>::trainable_count() {
    std::size_t count = 0;
    for (const auto& p : parameters())
        if (p.trainable) count += p.value.size();
    return count;
}

template <typename T>
Network<T> build_architecture(Arch arch, int bands, int frames, std::uint64_t seed) {
    Network<T> net(arch, bands, frames, seed);
    Rng rng(seed);
    for (int b = 0; b < net.input_count(); ++b) net.branch(b).init(rng);
    net.head().init(rng);
    return net;
}

std::size_t analytic_parameter_count(Arch arch, int bands, int frames) {
    // conv: out*in*kh*kw + out; BN: 2*channels; dense: in*out + out.
    const auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; };
    const auto bn = [](std::size_t c) { return 2 * c; };
    const auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
    const auto valid = [](int n, int k) { return n - k + 1; };
    const auto pool = [](int n) { return (n - 2) / 2 + 1; };

    int h = pool(valid(bands, 2)), w = pool(valid(frames, 2));
    h = pool(valid(h, 3));
    w = pool(valid(w, 3));
    std::size_t branch = conv(1, 64, 2) + bn(64) + conv(64, 64, 3) + bn(64);
    if (arch == Arch::A2) {
        h = pool(valid(h, 4));
        w = pool(valid(w, 4));
        branch += conv(64, 64, 4) + bn(64);
    }
    const auto flat = static_cast<std::size_t>(64 * h * w);
    switch (arch) {
        case Arch::A1: return branch + dense(flat, 2);
        case Arch::A2: return branch + dense(flat, 4096) + dense(4096, 2);
        case Arch::TEFS: return 2 * branch + dense(2 * flat, 128) + dense(128, 2);
    }
    return 0;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.shape.size() != 2) throw ShapeError("softmax expects two logits per sample");
    Tensor<T> p(logits.n, logits.shape);
    for (int i = 0; i < logits.n; ++i) {
        const double a = logits.sample(i)[0];
        const double b = logits.sample(i)[1];
        const double m = std::max(a, b);
        const double ea = std::exp(a - m), eb = std::exp(b - m);
        p.sample(i)[0] = static_cast<T>(ea / (ea + eb));
        p.sample(i)[1] = static_cast<T>(eb / (ea + eb));
    }
    return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    if (static_cast<int>(labels.size()) != logits.n) throw ShapeError("label count does not match batch size");
    if (logits.n == 0) throw ShapeError("empty batch");
    LossResult<T> r;
    r.probabilities = softmax(logits);
    r.dlogits = Tensor<T>(logits.n, logits.shape);
    double total = 0.0;
    for (int i = 0; i < logits.n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1, got " + std::to_string(y));
        const double a = logits.sample(i)[0];
        const double b = logits.sample(i)[1];
        const double m = std::max(a, b);
        const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
        total += lse - (y == 0 ? a : b);
        for (int c = 0; c < 2; ++c) {
            const double pc = std::exp(logits.sample(i)[c] - lse);
            r.dlogits.sample(i)[c] = static_cast<T>((pc - (c == y ? 1.0 : 0.0)) / logits.n);
        }
    }
    r.loss = total / logits.n;
    return r;
}

template <typename T>
std::vector<std::vector<T>> snapshot(Network<T>& net) {
    std::vector<std::vector<T>> out;
    for (const auto& p : net.parameters()) out.emplace_back(p.value.begin(), p.value.end());
    return out;
}

template <typename T>
void restore(Network<T>& net, const std::vector<std::vector<T>>& values) {
    auto params = net.parameters();
    if (params.size() != values.size()) throw ShapeError("snapshot does not match network layout");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].value.size() != values[i].size()) throw ShapeError("snapshot array size mismatch: " + params[i].name);
        std::copy(values[i].begin(), values[i].end(), params[i].value.begin());
    }
}

template <typename T>
std::size_t copy_prefixed(Network<T>& src, std::string_view from_prefix, Network<T>& dst, std::string_view to_prefix) {
    auto src_params = src.parameters();
    auto dst_params = dst.parameters();
    std::size_t copied = 0;
    for (const auto& s : src_params) {
        if (!s.name.starts_with(from_prefix)) continue;
        const std::string target = std::string(to_prefix) + s.name.substr(from_prefix.size());
        const auto it = std::find_if(dst_params.begin(), dst_params.end(), [&](const auto& d) { return d.name == target; });
        if (it == dst_params.end()) throw ShapeError("no destination array named " + target);
        if (it->shape != s.shape) throw ShapeError("shape mismatch copying " + s.name + " -> " + target);
        std::copy(s.value.begin(), s.value.end(), it->value.begin());
        ++copied;
    }
    return copied;
}

#define TEFS_INSTANTIATE(T)                                                                                  \
    template class Network<T>;                                                                                \
    template Network<T> build_architecture<T>(Arch, int, int, std::uint64_t);                                 \
    template Tensor<T> softmax<T>(const Tensor<T>&);                                                          \
    template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const int>);                  \
    template std::vector<std::vector<T>> snapshot<T>(Network<T>&);                                            \
    template void restore<T>(Network<T>&, const std::vector<std::vector<T>>&);                                \
    template std::size_t copy_prefixed<T>(Network<T>&, std::string_view, Network<T>&, std::string_view);

TEFS_INSTANTIATE(float)
TEFS_INSTANTIATE(double)

#undef TEFS_INSTANTIATE

}  // namespace tefs::network
