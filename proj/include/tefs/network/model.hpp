#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tefs/network/layers.hpp"

namespace tefs::network {

// A1: one convolutional branch + linear softmax classifier.
// A2: deeper three-stage branch + 4096-unit hidden layer.
// TEFS: envelope and fine-structure A1-style branches, concatenated features,
//       128-unit hidden layer.
enum class Arch { A1, A2, TEFS };

std::string_view arch_name(Arch arch);
Arch parse_arch(std::string_view name);

inline constexpr int kDefaultBands = 32;
inline constexpr int kDefaultFrames = 50;
inline constexpr double kDropout = 0.5;

template <typename T>
class Network {
public:
    Network(Arch arch, int bands, int frames, std::uint64_t seed);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    [[nodiscard]] Arch arch() const { return arch_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] int bands() const { return bands_; }
    [[nodiscard]] int frames() const { return frames_; }
    [[nodiscard]] int input_count() const { return static_cast<int>(branches_.size()); }
    [[nodiscard]] const std::vector<std::string>& branch_names() const { return branch_names_; }

    // Flattened feature size produced by each branch.
    [[nodiscard]] int branch_features() const { return branch_features_; }
    // Input width of the first fully connected layer.
    [[nodiscard]] int classifier_inputs() const { return branch_features_ * input_count(); }

    // One (n, 1, K, B) tensor per branch; returns (n, 2, 1, 1) logits. The
    // inputs must stay alive until backward.
    Tensor<T> forward(std::span<const Tensor<T>> inputs, ForwardContext& ctx);

    // Back-propagates d(loss)/d(logits) from the last forward call.
    void backward(const Tensor<T>& dlogits);

    // Parameters and buffers in a fixed order with dotted names, e.g.
    // "envelope.conv1.weight", "classifier.fc1.bias", "features.bn1.running_var".
    std::vector<ParamView<T>> parameters();

    void zero_grad();

    [[nodiscard]] std::size_t trainable_count();

    Sequential<T>& branch(int i) { return branches_[static_cast<std::size_t>(i)]; }
    Sequential<T>& head() { return head_; }

private:
    Arch arch_;
    int bands_, frames_;
    std::uint64_t seed_;
    std::vector<std::string> branch_names_;
    std::vector<Sequential<T>> branches_;
    Sequential<T> head_;
    int branch_features_ = 0;
    Tensor<T> features_, dbranch_;
};

// Builds and initializes an architecture (fan-in scaled uniform weights,
// bound sqrt(6 / fan_in); zero biases; BN gamma 1, beta 0). Throws
// ShapeError when (bands, frames) cannot pass through the layer stack.
template <typename T>
Network<T> build_architecture(Arch arch, int bands, int frames, std::uint64_t seed);

// Trainable-parameter count computed from layer hyper-parameters alone.
std::size_t analytic_parameter_count(Arch arch, int bands = kDefaultBands, int frames = kDefaultFrames);

template <typename T>
struct LossResult {
    double loss = 0.0;        // mean cross-entropy
    Tensor<T> probabilities;  // (n, 2, 1, 1), rows sum to 1
    Tensor<T> dlogits;        // gradient of the mean loss
};

// Softmax + cross-entropy; labels must be 0 or 1 (InvalidArgument otherwise).
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// Row-wise softmax of (n, 2) logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// Copies every parameter and buffer value (for snapshots) and restores them.
template <typename T>
std::vector<std::vector<T>> snapshot(Network<T>& net);
template <typename T>
void restore(Network<T>& net, const std::vector<std::vector<T>>& values);

// Copies all parameters/buffers whose names match after replacing the
// `from_prefix` with `to_prefix`. Returns the number of arrays copied.
template <typename T>
std::size_t copy_prefixed(Network<T>& src, std::string_view from_prefix, Network<T>& dst,
                          std::string_view to_prefix);

}  // namespace tefs::network
