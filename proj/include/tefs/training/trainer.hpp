#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tefs/error.hpp"
#include "tefs/network/model.hpp"
#include "tefs/simd/kernels.hpp"

namespace tefs::training {

using network::Network;
using network::ParamView;

struct TrainConfig {
    int batch_size = 128;
    double initial_lr = 0.01;
    int patience = 5;  // dev evaluations without improvement before halving
    double lr_floor = 1e-6;
    int max_epochs = 100;
    std::uint64_t seed = 0;
    bool restore_best = true;  // return the best-dev snapshot instead of the final weights
};

void validate(const TrainConfig& config);

enum class StopReason { LrFloor, MaxEpochs };
std::string_view stop_reason_name(StopReason r);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double lr = 0.0;  // rate used during this epoch
    double wall_seconds = 0.0;
    bool improved = false;
    bool halved = false;  // lr halved after this epoch's dev evaluation
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    StopReason stop = StopReason::MaxEpochs;
    int best_epoch = 0;
    double best_dev_loss = 0.0;
};

// CSV with header epoch,train_loss,dev_loss,lr.
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

// Dev-loss driven learning-rate halving. A strictly lower dev loss resets
// the stagnation counter; `patience` consecutive non-improving evaluations
// halve the rate and reset the counter. Training stops once the rate falls
// below the floor.
class LrSchedule {
public:
    explicit LrSchedule(const TrainConfig& config);

    struct Step {
        bool improved = false;
        bool halved = false;
        bool stop = false;
    };

    Step observe(double dev_loss);

    [[nodiscard]] double lr() const { return lr_; }
    [[nodiscard]] double best() const { return best_; }
    [[nodiscard]] int stagnant() const { return stagnant_; }

private:
    double lr_;
    double floor_;
    int patience_;
    int stagnant_ = 0;
    double best_;
};

// Flat labelled sample store: `inputs` aligned K x B matrices per sample
// (two for the envelope/fine-structure network).
struct SampleSet {
    int inputs = 1;
    int bands = 0;
    int frames = 0;
    std::vector<float> data;  // [sample][input][K][B]
    std::vector<int> labels;
    std::vector<std::string> speakers;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] std::size_t sample_floats() const {
        return static_cast<std::size_t>(inputs) * bands * frames;
    }

    // Appends one sample; each span holds K x B values.
    void add(std::span<const std::span<const float>> values, int label, const std::string& speaker);
};

// Builds the per-branch input tensors for the given sample indices.
std::vector<network::Tensor<float>> make_batch(const SampleSet& set, std::span<const std::size_t> indices);

// p <- p - lr * g over trainable parameters. Throws NumericError naming the
// first parameter with a non-finite gradient (nothing is updated then).
template <typename T>
void sgd_step(std::span<ParamView<T>> params, T lr) {
    for (const auto& p : params) {
        if (!p.trainable) continue;
        for (T g : p.grad)
            if (!std::isfinite(static_cast<double>(g)))
                throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
    for (auto& p : params) {
        if (!p.trainable) continue;
        if constexpr (std::is_same_v<T, float>) {
            simd::axpy(-lr, p.grad, p.value);
        } else {
            for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
        }
    }
}

void sgd_step(Network<float>& model, float lr);

// Mean cross-entropy in eval mode.
double evaluate_loss(Network<float>& model, const SampleSet& set, int batch_size = 128);

// Dysarthric-class probability per sample, eval mode.
std::vector<double> predict(Network<float>& model, const SampleSet& set, int batch_size = 128);

struct TrainHooks {
    // Replaces the measured dev loss (epoch is 1-based); for schedule studies.
    std::function<double(int epoch, double measured)> dev_loss;
    std::function<void(const EpochRecord&)> on_epoch;
};

// Mini-batch SGD with seeded shuffling and dropout. A trailing batch of one
// sample is merged into the previous batch (batch norm needs two). Throws
// InvalidArgument for an empty dev set, fewer than two training samples,
// mismatched geometry or speakers shared between train and dev.
TrainLog train(Network<float>& model, const SampleSet& train_set, const SampleSet& dev_set,
               const TrainConfig& config, const TrainHooks& hooks = {});

// TEFS network whose envelope/fine-structure branches (conv + BN, including
// running statistics) are copied from two trained A1 baselines; the fully
// connected layers are freshly initialized from `seed`.
Network<float> transfer_init_tefs(Network<float>& envelope_a1, Network<float>& fine_structure_a1, std::uint64_t seed);

}  // namespace tefs::training
