#include "tefs/frontend/representation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fftw_util.hpp"
#include "tefs/error.hpp"
#include "tefs/frontend/hilbert.hpp"

namespace tefs::frontend {

std::string_view kind_name(RepresentationKind kind) {
    switch (kind) {
        case RepresentationKind::Envelope: return "envelope";
        case RepresentationKind::FineStructure: return "fine-structure";
        case RepresentationKind::StftLogMag: return "stft";
    }
    return "unknown";
}

RepresentationKind parse_kind(std::string_view name) {
    if (name == "envelope" || name == "env") return RepresentationKind::Envelope;
    if (name == "fine-structure" || name == "fs") return RepresentationKind::FineStructure;
    if (name == "stft") return RepresentationKind::StftLogMag;
    throw InvalidArgument("unknown representation kind '" + std::string(name) + "'");
}

int frame_samples(double frame_seconds, int fs) {
    const double n = std::round(frame_seconds * fs);
    if (!(n >= 1.0)) throw InvalidArgument("frame length must cover at least one sample");
    return static_cast<int>(n);
}

std::vector<double> frame_average(std::span<const double> x, double frame_seconds, int fs) {
    const auto frame = static_cast<std::size_t>(frame_samples(frame_seconds, fs));
    const std::size_t count = x.size() / frame;
    if (count == 0)
        throw InvalidArgument("signal of " + std::to_string(x.size()) + " samples is shorter than one " +
                              std::to_string(frame) + "-sample frame");
    std::vector<double> out(count);
    for (std::size_t l = 0; l < count; ++l) {
        double acc = 0.0;
        for (std::size_t i = 0; i < frame; ++i) acc += x[l * frame + i];
        out[l] = acc / static_cast<double>(frame);
    }
    return out;
}

std::vector<double> log_scale_envelope(std::span<const double> frame_envelopes) {
    std::vector<double> out(frame_envelopes.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = frame_envelopes[i];
        out[i] = std::log10(v > kLogFloor ? v : kLogFloor);
    }
    return out;
}

std::vector<double> log_scale_fine_structure(std::span<const double> frame_fine_structure) {
    std::vector<double> out(frame_fine_structure.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = frame_fine_structure[i];
        if (v == 0.0 || std::isnan(v)) {
            out[i] = 0.0;
            continue;
        }
        const double sign = v > 0.0 ? 1.0 : -1.0;
        out[i] = sign * std::log10(std::clamp(std::abs(v), kLogFloor, 1.0));
    }
    return out;
}

Representation stft_log_magnitude(const Waveform& w, double frame_seconds) {
    validate(w);
    const int frame = frame_samples(frame_seconds, w.sample_rate);
    if (frame < 2) throw InvalidArgument("STFT frame must span at least two samples");
    const std::size_t count = w.samples.size() / static_cast<std::size_t>(frame);
    if (count == 0)
        throw InvalidArgument("signal of " + std::to_string(w.samples.size()) + " samples is shorter than one " +
                              std::to_string(frame) + "-sample STFT frame");
    const int bins = frame / 2 + 1;

    std::vector<double> window(static_cast<std::size_t>(frame));
    for (int i = 0; i < frame; ++i) window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / frame);

    detail::FftwRealBuffer in(static_cast<std::size_t>(frame));
    detail::FftwBuffer spec(static_cast<std::size_t>(bins));
    detail::Plan plan([&] { return fftw_plan_dft_r2c_1d(frame, in.data, spec.data, FFTW_ESTIMATE); });

    Representation rep;
    rep.kind = RepresentationKind::StftLogMag;
    rep.bands = bins;
    rep.frames = static_cast<int>(count);
    rep.frame_seconds = frame_seconds;
    rep.sample_rate = w.sample_rate;
    rep.values.resize(static_cast<std::size_t>(bins) * count);
    for (std::size_t l = 0; l < count; ++l) {
        for (int i = 0; i < frame; ++i)
            in.data[i] = w.samples[l * frame + static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
        plan.execute();
        for (int k = 0; k < bins; ++k) {
            const double mag = std::hypot(spec.data[k][0], spec.data[k][1]);
            rep.values[static_cast<std::size_t>(k) * count + l] = std::log10(mag > kLogFloor ? mag : kLogFloor);
        }
    }
    return rep;
}

TemporalPair compute_temporal_pair(const Waveform& w, const Filterbank& fb, double frame_seconds) {
    validate(w);
    if (w.sample_rate != fb.sample_rate)
        throw InvalidArgument("waveform rate does not match filterbank rate");
    const int frame = frame_samples(frame_seconds, w.sample_rate);
    const std::size_t count = w.samples.size() / static_cast<std::size_t>(frame);
    if (count == 0)
        throw InvalidArgument("signal of " + std::to_string(w.samples.size()) + " samples is shorter than one " +
                              std::to_string(frame) + "-sample frame");

    const int K = fb.size();
    const int L = static_cast<int>(count);
    std::vector<double> env(static_cast<std::size_t>(K) * count);
    std::vector<double> fine(static_cast<std::size_t>(K) * count);
    for (int k = 0; k < K; ++k) {
        const auto sub = filtfilt(fb.bands[static_cast<std::size_t>(k)], w.samples);
        const auto ef = envelope_fine_structure(sub);
        const auto e = frame_average(ef.envelope, frame_seconds, w.sample_rate);
        const auto f = frame_average(ef.fine_structure, frame_seconds, w.sample_rate);
        std::copy(e.begin(), e.end(), env.begin() + static_cast<std::ptrdiff_t>(k) * L);
        std::copy(f.begin(), f.end(), fine.begin() + static_cast<std::ptrdiff_t>(k) * L);
    }

    TemporalPair out;
    out.envelope = Representation{RepresentationKind::Envelope, K, L, frame_seconds, w.sample_rate,
                                  log_scale_envelope(env)};
    out.fine_structure = Representation{RepresentationKind::FineStructure, K, L, frame_seconds, w.sample_rate,
                                        log_scale_fine_structure(fine)};
    return out;
}

Representation compute_representation(const Waveform& w, RepresentationKind kind, const FrontendParams& params) {
    if (kind == RepresentationKind::StftLogMag) return stft_log_magnitude(w, params.stft_frame_seconds);
    const Filterbank fb = design_filterbank(params.bands, params.f_lo, params.f_hi, w.sample_rate, params.filter_order);
    auto pair = compute_temporal_pair(w, fb, params.frame_seconds);
    return kind == RepresentationKind::Envelope ? std::move(pair.envelope) : std::move(pair.fine_structure);
}

}  // namespace tefs::frontend
