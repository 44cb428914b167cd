#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tefs/corpus/manifest.hpp"
#include "tefs/waveform.hpp"

namespace tefs::corpus {

// Mean and spread of a per-speaker attribute; values are drawn as
// mean + spread * N(0, 1) and clamped to the attribute's valid range.
struct Draw {
    double mean = 0.0;
    double spread = 0.0;
};

// Class-conditional voice parameters.
struct VoiceClass {
    Draw pitch_std_hz;       // intonation: std of the f0 contour in Hz
    Draw modulation_depth;   // syllabic amplitude modulation depth, 0..1
    Draw aspiration_snr_db;  // voiced-to-aspiration power ratio in dB
};

struct SynthParams {
    VoiceClass neurotypical{{22.0, 4.0}, {0.85, 0.05}, {28.0, 3.0}};
    VoiceClass dysarthric{{7.0, 2.0}, {0.40, 0.08}, {9.0, 3.0}};
    int sample_rate = 16000;
    double seconds_per_speaker = 30.0;
    double min_utterance_seconds = 2.0;
    double max_utterance_seconds = 5.0;
    double f0_female_hz = 210.0;
    double f0_male_hz = 120.0;
    double f0_speaker_spread_hz = 12.0;
    double syllable_rate_hz = 4.0;
    double jitter = 0.005;  // relative period perturbation, both classes
};

// Throws InvalidArgument for out-of-range parameters.
void validate(const SynthParams& params);

// Loads a JSON parameter file; keys mirror SynthParams field names, with
// class blocks `neurotypical` / `dysarthric` each holding
// {pitch_std_hz, modulation_depth, aspiration_snr_db} as {mean, spread}.
// Unknown keys throw ParseError.
SynthParams load_synth_params(const std::filesystem::path& path);

// Per-speaker attributes realized by the generator.
struct VoiceDraw {
    double f0_hz = 0.0;
    double pitch_std_hz = 0.0;
    double modulation_depth = 0.0;
    double aspiration_snr_db = 0.0;
};

VoiceDraw draw_voice(const SynthParams& params, int label, Gender gender, std::uint64_t seed);

// Renders one utterance for a voice.
Waveform synth_utterance(const SynthParams& params, const VoiceDraw& voice, double seconds,
                         std::uint64_t seed);

// Writes `n_speakers` speakers (half per class, genders alternating within
// class) as 16-bit WAVs under out_dir/audio plus out_dir/manifest.csv.
// Deterministic in (n_speakers, seed, params).
CorpusManifest synth_corpus(int n_speakers, std::uint64_t seed, const SynthParams& params,
                            const std::filesystem::path& out_dir);

}  // namespace tefs::corpus
