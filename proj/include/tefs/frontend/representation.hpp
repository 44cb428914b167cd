#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tefs/frontend/filterbank.hpp"
#include "tefs/waveform.hpp"

namespace tefs::frontend {

enum class RepresentationKind { Envelope = 0, FineStructure = 1, StftLogMag = 2 };

std::string_view kind_name(RepresentationKind kind);
RepresentationKind parse_kind(std::string_view name);

inline constexpr double kLogFloor = 1e-5;

// K x L matrix, row-major (band-major).
struct Representation {
    RepresentationKind kind = RepresentationKind::Envelope;
    int bands = 0;   // K
    int frames = 0;  // L
    double frame_seconds = 0.0;
    int sample_rate = 0;
    std::vector<double> values;

    [[nodiscard]] double at(int k, int l) const {
        return values[static_cast<std::size_t>(k) * frames + l];
    }
    double& at(int k, int l) { return values[static_cast<std::size_t>(k) * frames + l]; }
};

// Number of samples in a frame of `frame_seconds` at `fs`.
int frame_samples(double frame_seconds, int fs);

// Means of consecutive non-overlapping frames; trailing partial frame
// dropped. Throws InvalidArgument when no complete frame fits.
std::vector<double> frame_average(std::span<const double> x, double frame_seconds, int fs);

// log10(max(E, 1e-5)). Input is K x L row-major.
std::vector<double> log_scale_envelope(std::span<const double> frame_envelopes);

// sgn(F) * log10(clamp(|F|, 1e-5, 1)), with sgn(0) = 0.
std::vector<double> log_scale_fine_structure(std::span<const double> frame_fine_structure);

// Hann-windowed (periodic), non-overlapping frames; one-sided magnitude,
// log10 with the 1e-5 floor. Output is (frame/2 + 1) x L.
Representation stft_log_magnitude(const Waveform& w, double frame_seconds);

struct FrontendParams {
    int bands = 32;
    double f_lo = 80.0;
    double f_hi = 7200.0;
    double frame_seconds = 0.006;
    double stft_frame_seconds = 0.003875;
    int filter_order = 4;
};

// Envelope and fine-structure representations of one waveform; they share
// the filterbank and Hilbert pass so computing both at once halves the work.
struct TemporalPair {
    Representation envelope;
    Representation fine_structure;
};

TemporalPair compute_temporal_pair(const Waveform& w, const Filterbank& fb, double frame_seconds);

Representation compute_representation(const Waveform& w, RepresentationKind kind,
                                      const FrontendParams& params = {});

}  // namespace tefs::frontend
