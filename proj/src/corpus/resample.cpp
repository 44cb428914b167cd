#include "tefs/corpus/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "tefs/error.hpp"

namespace tefs::corpus {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace

Resampler::Resampler(int source_rate, int target_rate, double stopband_db)
    : source_rate_(source_rate), target_rate_(target_rate) {
    if (source_rate <= 0 || target_rate <= 0) throw InvalidArgument("sample rates must be positive");
    if (target_rate > source_rate)
        throw InvalidArgument("upsampling is not supported (" + std::to_string(source_rate) + " -> " +
                              std::to_string(target_rate) + ")");
    if (stopband_db < 20.0) throw InvalidArgument("stopband attenuation must be at least 20 dB");
    const int g = std::gcd(source_rate, target_rate);
    up_ = target_rate / g;
    down_ = source_rate / g;

    // Stopband starts at the output Nyquist; 10% transition band below it.
    const double stop_hz = 0.5 * target_rate;
    const double pass_hz = 0.9 * stop_hz;
    const double cutoff = 0.5 * (pass_hz + stop_hz) / source_rate;  // cycles per input sample
    const double delta_w = 2.0 * std::numbers::pi * (stop_hz - pass_hz) / source_rate;
    const double beta = stopband_db > 50.0 ? 0.1102 * (stopband_db - 8.7)
                                           : 0.5842 * std::pow(stopband_db - 21.0, 0.4) +
                                                 0.07886 * (stopband_db - 21.0);
    int length = static_cast<int>(std::ceil((stopband_db - 7.95) / (2.285 * delta_w))) + 1;
    if (length % 2) ++length;
    taps_ = length;
    half_ = length / 2;

    const double i0_beta = std::cyl_bessel_i(0.0, beta);
    table_.assign(static_cast<std::size_t>(up_) * taps_, 0.0);
    for (int phase = 0; phase < up_; ++phase) {
        const double frac = static_cast<double>(phase) / up_;
        double* row = table_.data() + static_cast<std::size_t>(phase) * taps_;
        double sum = 0.0;
        for (int j = 0; j < taps_; ++j) {
            // Tap j reads input sample floor(t) + (j - half_ + 1).
            const double tau = frac - (j - half_ + 1);
            const double r = tau / half_;
            double w = 0.0;
            if (std::abs(r) <= 1.0) w = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
            row[j] = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * w;
            sum += row[j];
        }
        for (int j = 0; j < taps_; ++j) row[j] /= sum;
    }
}

std::vector<double> Resampler::process(std::span<const double> input) const {
    const auto n_in = static_cast<long long>(input.size());
    if (up_ == 1 && down_ == 1) return {input.begin(), input.end()};
    const long long n_out = (n_in * up_ + down_ - 1) / down_;
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (long long m = 0; m < n_out; ++m) {
        const long long num = m * down_;
        const long long base = num / up_;
        const auto phase = static_cast<std::size_t>(num % up_);
        const double* row = table_.data() + phase * taps_;
        const long long first = base - half_ + 1;
        double acc = 0.0;
        const long long j_lo = std::max<long long>(0, -first);
        const long long j_hi = std::min<long long>(taps_, n_in - first);
        for (long long j = j_lo; j < j_hi; ++j) acc += row[j] * input[static_cast<std::size_t>(first + j)];
        out[static_cast<std::size_t>(m)] = acc;
    }
    return out;
}

Waveform resample(const Waveform& w, int target_rate) {
    if (w.sample_rate == target_rate) return w;
    const Resampler r(w.sample_rate, target_rate);
    return Waveform{r.process(w.samples), target_rate};
}

}  // namespace tefs::corpus
