#pragma once

#include <filesystem>
#include <vector>

#include "tefs/waveform.hpp"

namespace tefs::corpus {

// Decoded WAV contents before any channel or rate conversion.
struct WavData {
    int sample_rate = 0;
    int channels = 0;
    // Interleaved samples scaled to [-1, 1].
    std::vector<double> interleaved;

    [[nodiscard]] std::size_t frames() const {
        return channels > 0 ? interleaved.size() / static_cast<std::size_t>(channels) : 0;
    }
};

// Reads PCM (8/16/24/32-bit integer) or 32/64-bit IEEE float WAV files,
// including WAVE_FORMAT_EXTENSIBLE. Throws MissingFileError or FormatError.
WavData read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clipped to [-1, 1] and rounded.
void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w);

// Writes mono 32-bit float PCM.
void write_wav_float32(const std::filesystem::path& path, const Waveform& w);

// Averages channels into a mono waveform.
Waveform downmix(const WavData& wav);

// Reads a file, downmixes and resamples to target_rate. Equal rates pass the
// decoded samples through unchanged. Upsampling throws InvalidArgument.
Waveform load_waveform(const std::filesystem::path& path, int target_rate);

}  // namespace tefs::corpus
