#pragma once

#include <span>
#include <vector>

#include "tefs/waveform.hpp"

namespace tefs::corpus {

// Band-limited rational-ratio downsampler: Kaiser-windowed sinc evaluated on
// a polyphase table. The low-pass corner sits below the output Nyquist so the
// stopband (at and above the output Nyquist) is attenuated by at least
// `stopband_db`.
class Resampler {
public:
    Resampler(int source_rate, int target_rate, double stopband_db = 80.0);

    [[nodiscard]] std::vector<double> process(std::span<const double> input) const;

    [[nodiscard]] int source_rate() const { return source_rate_; }
    [[nodiscard]] int target_rate() const { return target_rate_; }
    [[nodiscard]] int up() const { return up_; }
    [[nodiscard]] int down() const { return down_; }
    [[nodiscard]] int taps_per_phase() const { return taps_; }

private:
    int source_rate_;
    int target_rate_;
    int up_;
    int down_;
    int taps_;       // filter support per output sample, in input samples
    int half_;       // taps_ / 2
    std::vector<double> table_;  // up_ phases x taps_
};

// Convenience wrapper; identity when rates match.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace tefs::corpus
