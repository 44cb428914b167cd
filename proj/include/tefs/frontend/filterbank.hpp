#pragma once

#include <array>
#include <span>
#include <vector>

#include "tefs/waveform.hpp"

namespace tefs::frontend {

// One second-order section, b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

struct BandFilter {
    double low_hz = 0.0;
    double high_hz = 0.0;
    std::vector<Biquad> sections;
};

// K band-pass filters whose K+1 cutoffs are equally spaced along the
// Greenwood position axis between f_lo and f_hi. Neighbouring bands share a
// cutoff. Each band is a Butterworth band-pass built from an order-`order`
// low-pass prototype (2*order poles), realized as cascaded biquads. Bands are
// meant to be run forward-backward; the design puts that zero-phase response
// at -3 dB on the cutoffs.
struct Filterbank {
    int sample_rate = 0;
    int order = 4;
    std::vector<double> cutoffs;  // K + 1 ascending, Hz
    std::vector<BandFilter> bands;

    [[nodiscard]] int size() const { return static_cast<int>(bands.size()); }

    // Single-pass magnitude response of band `k` (0-based) at `freq_hz`, in dB.
    [[nodiscard]] double response_db(int k, double freq_hz) const;
    // Response of the forward-backward application (twice the above in dB).
    [[nodiscard]] double zero_phase_response_db(int k, double freq_hz) const;
};

// Throws InvalidArgument unless 0 < f_lo < f_hi < fs/2 and K >= 1.
Filterbank design_filterbank(int K, double f_lo, double f_hi, int fs, int order = 4);

struct SubbandSignal {
    int band = 0;  // 0-based
    std::vector<double> samples;
};

// Applies one band's cascade forward then backward (zero phase).
std::vector<double> filtfilt(const BandFilter& band, std::span<const double> x);

// All K subband signals, each the length of the input. Throws InvalidArgument
// if the waveform rate differs from the filterbank rate.
std::vector<SubbandSignal> filter_subbands(const Waveform& w, const Filterbank& fb);

}  // namespace tefs::frontend
