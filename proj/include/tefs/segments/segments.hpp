#pragma once

#include <span>
#include <string>
#include <vector>

#include "tefs/frontend/representation.hpp"

namespace tefs::segments {

using frontend::Representation;
using frontend::RepresentationKind;

// A K x B slice of a representation, row-major, with provenance.
struct Segment {
    RepresentationKind kind = RepresentationKind::Envelope;
    int bands = 0;   // K
    int frames = 0;  // B
    std::vector<float> values;
    std::string speaker_id;
    int label = 0;
    std::string utterance;  // source utterance identifier
    int start = 0;          // first column in the source representation

    [[nodiscard]] float at(int k, int b) const { return values[static_cast<std::size_t>(k) * frames + b]; }
};

// Hop between consecutive windows: round(B * (1 - overlap)), at least 1.
int segment_hop(int frames, double overlap);

// Number of windows for a representation of `length` columns; 0 if length < frames.
int segment_count(int length, int frames, double overlap);

// Windows start at 0, hop, 2*hop, ...; a trailing partial window is dropped.
// Throws InvalidArgument (naming the utterance) when L < B or overlap is
// outside [0, 1).
std::vector<Segment> segment(const Representation& rep, int frames, double overlap,
                             const std::string& speaker_id = {}, int label = 0,
                             const std::string& utterance = {});

enum class NormMode { Global, PerBand };

std::string_view norm_mode_name(NormMode mode);
NormMode parse_norm_mode(std::string_view name);

inline constexpr double kStdFloor = 1e-8;

// Z-score statistics. Global mode holds one mean/std pair; per-band mode
// holds one pair per row.
struct NormStats {
    NormMode mode = NormMode::Global;
    RepresentationKind kind = RepresentationKind::Envelope;
    std::vector<double> mean;
    std::vector<double> std;
};

// Statistics over every entry of the given (training-fold) segments.
// Throws InvalidArgument for an empty set or mixed kinds/shapes.
NormStats fit_norm(std::span<const Segment> train, NormMode mode = NormMode::Global);
NormStats fit_norm(std::span<const Segment* const> train, NormMode mode = NormMode::Global);

// (x - mean) / std. Throws InvalidArgument on kind or band-count mismatch.
Segment normalize(const NormStats& stats, const Segment& s);

// In-place variant on raw K x B values.
void normalize_values(const NormStats& stats, std::span<float> values, int bands, int frames);

}  // namespace tefs::segments
