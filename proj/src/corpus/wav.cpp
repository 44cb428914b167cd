#include "tefs/corpus/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tefs/corpus/resample.hpp"
#include "tefs/error.hpp"

namespace tefs {

void validate(const Waveform& w) {
    if (w.samples.empty()) throw InvalidArgument("waveform is empty");
    if (w.sample_rate <= 0) throw InvalidArgument("waveform sample rate must be positive");
    for (double v : w.samples)
        if (!std::isfinite(v)) throw InvalidArgument("waveform contains non-finite samples");
}

}  // namespace tefs

namespace tefs::corpus {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::string wav_header(int rate, std::uint16_t format, std::uint16_t bits, std::uint32_t data_bytes) {
    std::string h;
    h += "RIFF";
    put32(h, 36 + data_bytes);
    h += "WAVEfmt ";
    put32(h, 16);
    put16(h, format);
    put16(h, 1);
    put32(h, static_cast<std::uint32_t>(rate));
    put32(h, static_cast<std::uint32_t>(rate) * (bits / 8));
    put16(h, bits / 8);
    put16(h, bits);
    h += "data";
    put32(h, data_bytes);
    return h;
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open audio file: " + path.string());
    const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    const std::size_t size = raw.size();
    const auto fail = [&](const std::string& why) {
        return FormatError(path.string() + ": " + why);
    };
    if (size < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0)
        throw fail("not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    bool have_fmt = false;

    std::size_t pos = 12;
    while (pos + 8 <= size) {
        const unsigned char* chunk = bytes + pos;
        const std::uint32_t chunk_size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = std::min<std::size_t>(chunk_size, size - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) throw fail("truncated fmt chunk");
            format = le16(bytes + body);
            channels = le16(bytes + body + 2);
            rate = le32(bytes + body + 4);
            bits = le16(bytes + body + 14);
            if (format == kFormatExtensible) {
                if (avail < 26) throw fail("truncated extensible fmt chunk");
                format = le16(bytes + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes + body;
            data_size = avail;
        }
        pos = body + chunk_size + (chunk_size & 1U);
    }
    if (!have_fmt) throw fail("missing fmt chunk");
    if (data == nullptr) throw fail("missing data chunk");
    if (channels == 0 || rate == 0) throw fail("invalid channel count or sample rate");

    const bool is_int = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
    const bool is_float = format == kFormatFloat && (bits == 32 || bits == 64);
    if (!is_int && !is_float)
        throw fail("unsupported encoding (format " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits)");

    const std::size_t width = bits / 8;
    const std::size_t count = data_size / width;
    WavData out;
    out.sample_rate = static_cast<int>(rate);
    out.channels = channels;
    out.interleaved.resize(count - count % channels);
    for (std::size_t i = 0; i < out.interleaved.size(); ++i) {
        const unsigned char* p = data + i * width;
        double v = 0.0;
        if (is_float) {
            if (bits == 32) {
                v = std::bit_cast<float>(le32(p));
            } else {
                const std::uint64_t u = static_cast<std::uint64_t>(le32(p)) |
                                        (static_cast<std::uint64_t>(le32(p + 4)) << 32);
                v = std::bit_cast<double>(u);
            }
        } else if (bits == 8) {
            v = (static_cast<int>(p[0]) - 128) / 128.0;
        } else if (bits == 16) {
            v = static_cast<std::int16_t>(le16(p)) / 32768.0;
        } else if (bits == 24) {
            std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
            if (s & 0x800000) s -= 0x1000000;
            v = s / 8388608.0;
        } else {
            v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
        }
        out.interleaved[i] = v;
    }
    if (out.interleaved.empty()) throw fail("no audio frames");
    return out;
}

void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w) {
    const auto n = static_cast<std::uint32_t>(w.samples.size());
    std::string bytes = wav_header(w.sample_rate, kFormatPcm, 16, n * 2);
    bytes.reserve(bytes.size() + n * 2);
    for (double v : w.samples) {
        const double clipped = std::clamp(v, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::lround(std::clamp(clipped * 32768.0, -32768.0, 32767.0)));
        put16(bytes, static_cast<std::uint16_t>(q));
    }
    write_file(path, bytes);
}

void write_wav_float32(const std::filesystem::path& path, const Waveform& w) {
    const auto n = static_cast<std::uint32_t>(w.samples.size());
    std::string bytes = wav_header(w.sample_rate, kFormatFloat, 32, n * 4);
    bytes.reserve(bytes.size() + n * 4);
    for (double v : w.samples) put32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    write_file(path, bytes);
}

Waveform downmix(const WavData& wav) {
    Waveform w;
    w.sample_rate = wav.sample_rate;
    const std::size_t frames = wav.frames();
    w.samples.resize(frames);
    if (wav.channels == 1) {
        w.samples.assign(wav.interleaved.begin(), wav.interleaved.begin() + static_cast<std::ptrdiff_t>(frames));
        return w;
    }
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (int c = 0; c < wav.channels; ++c) acc += wav.interleaved[f * wav.channels + c];
        w.samples[f] = acc / wav.channels;
    }
    return w;
}

Waveform load_waveform(const std::filesystem::path& path, int target_rate) {
    if (target_rate <= 0) throw InvalidArgument("target rate must be positive");
    const WavData wav = read_wav(path);
    if (target_rate > wav.sample_rate)
        throw InvalidArgument(path.string() + ": upsampling from " + std::to_string(wav.sample_rate) +
                              " Hz to " + std::to_string(target_rate) + " Hz is not supported");
    Waveform mono = downmix(wav);
    validate(mono);
    return resample(mono, target_rate);
}

}  // namespace tefs::corpus
