#pragma once
// Central finite-difference gradient checks in double precision, shared by
// the network unit tests and the acceptance binary.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tefs/network/layers.hpp"
#include "tefs/network/model.hpp"
#include "tefs/random.hpp"

namespace gradcheck {

using tefs::Rng;
using namespace tefs::network;

struct ArrayReport {
    std::string name;
    std::size_t checked = 0;
    std::size_t refined = 0;  // entries re-measured with kFineDelta
    double max_rel = 0.0;
};

struct Report {
    std::vector<ArrayReport> arrays;
    [[nodiscard]] double max_rel() const {
        double m = 0.0;
        for (const auto& a : arrays) m = std::max(m, a.max_rel);
        return m;
    }
    [[nodiscard]] std::size_t checked() const {
        std::size_t n = 0;
        for (const auto& a : arrays) n += a.checked;
        return n;
    }
    [[nodiscard]] std::size_t refined() const {
        std::size_t n = 0;
        for (const auto& a : arrays) n += a.refined;
        return n;
    }
    [[nodiscard]] std::string worst() const {
        const ArrayReport* w = nullptr;
        for (const auto& a : arrays)
            if (!w || a.max_rel > w->max_rel) w = &a;
        return w ? w->name : std::string();
    }
};

inline constexpr double kDelta = 1e-3;
// ReLU and max-pool make the loss piecewise smooth; when the +-kDelta interval
// straddles a switching point the central difference is wrong, not the
// gradient. Such entries are re-measured with this step.
inline constexpr double kFineDelta = 1e-6;
inline constexpr double kTolerance = 1e-3;

// |analytic - numeric| relative to the larger magnitude; entries where both
// are below `floor` are compared against the floor instead.
inline double rel_error(double a, double n, double floor = 1e-6) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

struct Target {
    std::string name;
    std::span<double> value;
    std::vector<double> analytic;
};

// Perturbs up to `max_entries` entries per target (all of them when the array
// is smaller; a seeded sample otherwise).
inline Report check(std::vector<Target>& targets, const std::function<double()>& loss,
                    std::size_t max_entries = 400, std::uint64_t seed = 1) {
    Report report;
    Rng rng(seed);
    for (auto& t : targets) {
        ArrayReport ar{t.name};
        std::vector<std::size_t> idx(t.value.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (idx.size() > max_entries) {
            rng.shuffle(std::span<std::size_t>(idx));
            idx.resize(max_entries);
        }
        for (std::size_t i : idx) {
            const double saved = t.value[i];
            auto central = [&](double delta) {
                t.value[i] = saved + delta;
                const double up = loss();
                t.value[i] = saved - delta;
                const double down = loss();
                t.value[i] = saved;
                return (up - down) / (2.0 * delta);
            };
            double err = rel_error(t.analytic[i], central(kDelta));
            if (err > kTolerance) {
                err = rel_error(t.analytic[i], central(kFineDelta));
                ++ar.refined;
            }
            ar.max_rel = std::max(ar.max_rel, err);
            ++ar.checked;
        }
        report.arrays.push_back(ar);
    }
    return report;
}

inline std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Gradient check of one layer under L = sum(r * layer(x)).
inline Report check_layer(Layer<double>& layer, Tensor<double> x, Mode mode, std::uint64_t seed,
                          bool check_input = true) {
    Rng rng(seed);
    const Shape3 out_shape = layer.output_shape(x.shape);
    const auto r = random_values(static_cast<std::size_t>(x.n) * out_shape.size(), rng);
    const std::uint64_t mask_seed = rng.next_u64();
    auto loss = [&]() {
        Rng mask_rng(mask_seed);
        ForwardContext ctx{mode, &mask_rng};
        const auto& y = layer.forward(x, ctx);
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) s += r[i] * y.data[i];
        return s;
    };
    std::vector<ParamView<double>> params;
    layer.collect("", params);
    for (auto& p : params)
        if (p.trainable) std::fill(p.grad.begin(), p.grad.end(), 0.0);
    (void)loss();
    Tensor<double> dy(x.n, out_shape);
    std::copy(r.begin(), r.end(), dy.data.begin());
    const Tensor<double> dx = layer.backward(dy);

    std::vector<Target> targets;
    if (check_input) targets.push_back({"input", std::span<double>(x.data), dx.data});
    for (auto& p : params)
        if (p.trainable) targets.push_back({p.name, p.value, std::vector<double>(p.grad.begin(), p.grad.end())});
    return check(targets, loss, 400, seed + 1);
}

// Gradient check of a whole network under mean cross-entropy in train mode.
inline Report check_network(Network<double>& net, int batch, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor<double>> inputs;
    for (int b = 0; b < net.input_count(); ++b) {
        Tensor<double> t(batch, {1, net.bands(), net.frames()});
        t.data = random_values(t.data.size(), rng, -2.0, 2.0);
        inputs.push_back(std::move(t));
    }
    std::vector<int> labels(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
    const std::uint64_t mask_seed = rng.next_u64();
    auto run = [&](bool with_backward) {
        Rng mask_rng(mask_seed);
        ForwardContext ctx{Mode::Train, &mask_rng};
        auto logits = net.forward(inputs, ctx);
        auto lr = softmax_cross_entropy(logits, labels);
        if (with_backward) net.backward(lr.dlogits);
        return lr.loss;
    };
    net.zero_grad();
    (void)run(true);
    std::vector<Target> targets;
    for (auto& p : net.parameters())
        if (p.trainable) targets.push_back({p.name, p.value, std::vector<double>(p.grad.begin(), p.grad.end())});
    return check(targets, [&] { return run(false); }, 150, seed + 1);
}

}  // namespace gradcheck
