#pragma once

#include <vector>

namespace tefs {

// Mono audio. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;

    [[nodiscard]] double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Throws InvalidArgument when the waveform is empty, has a non-positive rate
// or contains non-finite samples.
void validate(const Waveform& w);

}  // namespace tefs
