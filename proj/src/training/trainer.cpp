#include "tefs/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "tefs/random.hpp"

namespace tefs::training {

void validate(const TrainConfig& c) {
    if (c.batch_size < 2) throw InvalidArgument("batch_size must be at least 2");
    if (!(c.initial_lr >= 0.0) || !std::isfinite(c.initial_lr)) throw InvalidArgument("initial_lr must be non-negative");
    if (c.patience < 1) throw InvalidArgument("patience must be positive");
    if (!(c.lr_floor > 0.0)) throw InvalidArgument("lr_floor must be positive");
    if (c.max_epochs < 1) throw InvalidArgument("max_epochs must be positive");
}

std::string_view stop_reason_name(StopReason r) { return r == StopReason::LrFloor ? "lr_floor" : "max_epochs"; }

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw Error("cannot write " + path.string());
    std::fprintf(f, "epoch,train_loss,dev_loss,lr\n");
    for (const auto& e : log.epochs) std::fprintf(f, "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.dev_loss, e.lr);
    std::fclose(f);
}

LrSchedule::LrSchedule(const TrainConfig& config)
    : lr_(config.initial_lr),
      floor_(config.lr_floor),
      patience_(config.patience),
      best_(std::numeric_limits<double>::infinity()) {}

LrSchedule::Step LrSchedule::observe(double dev_loss) {
    Step s;
    if (dev_loss < best_) {
        best_ = dev_loss;
        stagnant_ = 0;
        s.improved = true;
    } else if (++stagnant_ >= patience_) {
        lr_ *= 0.5;
        stagnant_ = 0;
        s.halved = true;
    }
    s.stop = lr_ < floor_;
    return s;
}

void SampleSet::add(std::span<const std::span<const float>> values, int label, const std::string& speaker) {
    if (static_cast<int>(values.size()) != inputs) throw ShapeError("sample has the wrong number of inputs");
    for (const auto& v : values) {
        if (v.size() != static_cast<std::size_t>(bands) * frames) throw ShapeError("sample has the wrong geometry");
        data.insert(data.end(), v.begin(), v.end());
    }
    labels.push_back(label);
    speakers.push_back(speaker);
}

std::vector<network::Tensor<float>> make_batch(const SampleSet& set, std::span<const std::size_t> indices) {
    const auto plane = static_cast<std::size_t>(set.bands) * set.frames;
    std::vector<network::Tensor<float>> batch;
    for (int in = 0; in < set.inputs; ++in) {
        network::Tensor<float> t(static_cast<int>(indices.size()), {1, set.bands, set.frames});
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const float* src = set.data.data() + indices[i] * set.sample_floats() + static_cast<std::size_t>(in) * plane;
            std::copy(src, src + plane, t.sample(static_cast<int>(i)));
        }
        batch.push_back(std::move(t));
    }
    return batch;
}

void sgd_step(Network<float>& model, float lr) {
    auto params = model.parameters();
    sgd_step<float>(params, lr);
}

namespace {

void check_geometry(Network<float>& model, const SampleSet& set, const char* what) {
    if (set.inputs != model.input_count() || set.bands != model.bands() || set.frames != model.frames())
        throw InvalidArgument(std::string(what) + " set geometry does not match the network");
}

template <typename Fn>
void for_each_batch(std::size_t n, int batch_size, Fn&& fn) {
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        fn(std::span<const std::size_t>(idx));
    }
}

}  // namespace

double evaluate_loss(Network<float>& model, const SampleSet& set, int batch_size) {
    check_geometry(model, set, "evaluation");
    if (set.size() == 0) throw InvalidArgument("cannot evaluate on an empty set");
    network::ForwardContext ctx{network::Mode::Eval, nullptr};
    double total = 0.0;
    for_each_batch(set.size(), batch_size, [&](std::span<const std::size_t> idx) {
        const auto batch = make_batch(set, idx);
        const auto logits = model.forward(batch, ctx);
        std::vector<int> labels;
        for (auto i : idx) labels.push_back(set.labels[i]);
        total += network::softmax_cross_entropy(logits, labels).loss * static_cast<double>(idx.size());
    });
    return total / static_cast<double>(set.size());
}

std::vector<double> predict(Network<float>& model, const SampleSet& set, int batch_size) {
    check_geometry(model, set, "prediction");
    network::ForwardContext ctx{network::Mode::Eval, nullptr};
    std::vector<double> out;
    out.reserve(set.size());
    for_each_batch(set.size(), batch_size, [&](std::span<const std::size_t> idx) {
        const auto batch = make_batch(set, idx);
        const auto probs = network::softmax(model.forward(batch, ctx));
        for (int i = 0; i < probs.n; ++i) out.push_back(probs.sample(i)[1]);
    });
    return out;
}

TrainLog train(Network<float>& model, const SampleSet& train_set, const SampleSet& dev_set, const TrainConfig& config,
               const TrainHooks& hooks) {
    validate(config);
    check_geometry(model, train_set, "training");
    check_geometry(model, dev_set, "development");
    if (dev_set.size() == 0) throw InvalidArgument("development set is empty");
    if (train_set.size() < 2) throw InvalidArgument("training needs at least two samples");
    const std::set<std::string> train_speakers(train_set.speakers.begin(), train_set.speakers.end());
    for (const auto& s : dev_set.speakers)
        if (train_speakers.count(s))
            throw InvalidArgument("speaker '" + s + "' appears in both the training and development sets");

    Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
    Rng dropout_rng(derive_seed(config.seed, "dropout"));
    network::ForwardContext ctx{network::Mode::Train, &dropout_rng};
    LrSchedule schedule(config);
    TrainLog log;
    std::vector<std::vector<float>> best = snapshot(model);
    log.best_dev_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::vector<int> labels;
    const auto n = order.size();
    const auto bs = static_cast<std::size_t>(config.batch_size);

    log.stop = StopReason::MaxEpochs;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        const double lr = schedule.lr();
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n;) {
            std::size_t end = std::min(n, start + bs);
            if (n - end == 1) end = n;  // never leave a single-sample batch
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const auto batch = make_batch(train_set, idx);
            labels.clear();
            for (auto i : idx) labels.push_back(train_set.labels[i]);
            model.zero_grad();
            const auto logits = model.forward(batch, ctx);
            const auto loss = network::softmax_cross_entropy(logits, labels);
            model.backward(loss.dlogits);
            sgd_step(model, static_cast<float>(lr));
            loss_sum += loss.loss * static_cast<double>(idx.size());
            start = end;
        }

        double dev_loss = evaluate_loss(model, dev_set, config.batch_size);
        if (hooks.dev_loss) dev_loss = hooks.dev_loss(epoch, dev_loss);
        const auto step = schedule.observe(dev_loss);
        if (step.improved) {
            best = snapshot(model);
            log.best_epoch = epoch;
            log.best_dev_loss = dev_loss;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.dev_loss = dev_loss;
        rec.lr = lr;
        rec.improved = step.improved;
        rec.halved = step.halved;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec);
        if (step.stop) {
            log.stop = StopReason::LrFloor;
            break;
        }
    }
    if (config.restore_best && log.best_epoch > 0) restore(model, best);
    return log;
}

Network<float> transfer_init_tefs(Network<float>& envelope_a1, Network<float>& fine_structure_a1, std::uint64_t seed) {
    if (envelope_a1.arch() != network::Arch::A1 || fine_structure_a1.arch() != network::Arch::A1)
        throw InvalidArgument("transfer initialization needs two A1 baselines");
    if (envelope_a1.bands() != fine_structure_a1.bands() || envelope_a1.frames() != fine_structure_a1.frames())
        throw InvalidArgument("baseline geometries differ");
    auto tefs = network::build_architecture<float>(network::Arch::TEFS, envelope_a1.bands(), envelope_a1.frames(), seed);
    network::copy_prefixed(envelope_a1, "features.", tefs, "envelope.");
    network::copy_prefixed(fine_structure_a1, "features.", tefs, "fine_structure.");
    return tefs;
}

}  // namespace tefs::training
