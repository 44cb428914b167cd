#include "tefs/segments/segments.hpp"

#include <algorithm>
#include <cmath>

#include "tefs/error.hpp"

namespace tefs::segments {

int segment_hop(int frames, double overlap) {
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("segment overlap must be in [0, 1)");
    if (frames < 1) throw InvalidArgument("segment length must be at least one frame");
    return std::max(1, static_cast<int>(std::lround(frames * (1.0 - overlap))));
}

int segment_count(int length, int frames, double overlap) {
    const int hop = segment_hop(frames, overlap);
    if (length < frames) return 0;
    return (length - frames) / hop + 1;
}

std::vector<Segment> segment(const Representation& rep, int frames, double overlap, const std::string& speaker_id,
                             int label, const std::string& utterance) {
    const int hop = segment_hop(frames, overlap);
    if (rep.frames < frames)
        throw InvalidArgument("utterance '" + utterance + "' has " + std::to_string(rep.frames) +
                              " frames, fewer than the segment length " + std::to_string(frames));
    const int count = (rep.frames - frames) / hop + 1;
    std::vector<Segment> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        Segment seg;
        seg.kind = rep.kind;
        seg.bands = rep.bands;
        seg.frames = frames;
        seg.speaker_id = speaker_id;
        seg.label = label;
        seg.utterance = utterance;
        seg.start = s * hop;
        seg.values.resize(static_cast<std::size_t>(rep.bands) * frames);
        for (int k = 0; k < rep.bands; ++k)
            for (int b = 0; b < frames; ++b)
                seg.values[static_cast<std::size_t>(k) * frames + b] = static_cast<float>(rep.at(k, seg.start + b));
        out.push_back(std::move(seg));
    }
    return out;
}

std::string_view norm_mode_name(NormMode mode) { return mode == NormMode::Global ? "global" : "per-band"; }

NormMode parse_norm_mode(std::string_view name) {
    if (name == "global") return NormMode::Global;
    if (name == "per-band") return NormMode::PerBand;
    throw InvalidArgument("unknown normalization mode '" + std::string(name) + "'");
}

NormStats fit_norm(std::span<const Segment* const> train, NormMode mode) {
    if (train.empty()) throw InvalidArgument("cannot fit normalization on an empty training set");
    const Segment& first = *train.front();
    const int rows = mode == NormMode::Global ? 1 : first.bands;
    std::vector<double> sum(static_cast<std::size_t>(rows), 0.0);
    std::vector<double> count(static_cast<std::size_t>(rows), 0.0);
    for (const Segment* sp : train) {
        const Segment& s = *sp;
        if (s.kind != first.kind || s.bands != first.bands || s.frames != first.frames)
            throw InvalidArgument("normalization requires segments of one kind and shape");
        for (int k = 0; k < s.bands; ++k) {
            const auto r = static_cast<std::size_t>(mode == NormMode::Global ? 0 : k);
            for (int b = 0; b < s.frames; ++b) sum[r] += s.at(k, b);
            count[r] += s.frames;
        }
    }
    NormStats stats;
    stats.mode = mode;
    stats.kind = first.kind;
    stats.mean.resize(sum.size());
    for (std::size_t r = 0; r < sum.size(); ++r) stats.mean[r] = sum[r] / count[r];
    // Second pass around the mean keeps the variance accurate for offset data.
    std::vector<double> ss(sum.size(), 0.0);
    for (const Segment* sp : train) {
        const Segment& s = *sp;
        for (int k = 0; k < s.bands; ++k) {
            const auto r = static_cast<std::size_t>(mode == NormMode::Global ? 0 : k);
            for (int b = 0; b < s.frames; ++b) {
                const double d = s.at(k, b) - stats.mean[r];
                ss[r] += d * d;
            }
        }
    }
    stats.std.resize(sum.size());
    for (std::size_t r = 0; r < sum.size(); ++r) stats.std[r] = std::max(std::sqrt(ss[r] / count[r]), kStdFloor);
    return stats;
}

NormStats fit_norm(std::span<const Segment> train, NormMode mode) {
    std::vector<const Segment*> ptrs;
    ptrs.reserve(train.size());
    for (const auto& s : train) ptrs.push_back(&s);
    return fit_norm(std::span<const Segment* const>(ptrs), mode);
}

void normalize_values(const NormStats& stats, std::span<float> values, int bands, int frames) {
    if (stats.mode == NormMode::PerBand && static_cast<int>(stats.mean.size()) != bands)
        throw InvalidArgument("per-band statistics do not match the segment band count");
    for (int k = 0; k < bands; ++k) {
        const auto r = static_cast<std::size_t>(stats.mode == NormMode::Global ? 0 : k);
        const double m = stats.mean[r];
        const double inv = 1.0 / stats.std[r];
        float* row = values.data() + static_cast<std::size_t>(k) * frames;
        for (int b = 0; b < frames; ++b) row[b] = static_cast<float>((row[b] - m) * inv);
    }
}

Segment normalize(const NormStats& stats, const Segment& s) {
    if (s.kind != stats.kind)
        throw InvalidArgument("normalization statistics were fitted on " + std::string(frontend::kind_name(stats.kind)) +
                              " but the segment is " + std::string(frontend::kind_name(s.kind)));
    Segment out = s;
    normalize_values(stats, out.values, out.bands, out.frames);
    return out;
}

}  // namespace tefs::segments
