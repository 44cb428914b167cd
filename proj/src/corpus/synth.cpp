#include "tefs/corpus/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "tefs/corpus/wav.hpp"
#include "tefs/error.hpp"
#include "tefs/random.hpp"

namespace tefs::corpus {

namespace {

using json = nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vowel {
    std::array<double, 3> formants;
};

// Adult male reference formants (Hz).
constexpr std::array<Vowel, 5> kVowels{{
    {{730.0, 1090.0, 2440.0}},
    {{270.0, 2290.0, 3010.0}},
    {{300.0, 870.0, 2240.0}},
    {{530.0, 1840.0, 2480.0}},
    {{570.0, 840.0, 2410.0}},
}};
constexpr std::array<double, 3> kBandwidths{80.0, 100.0, 120.0};

void check_draw(const Draw& d, double lo, double hi, const char* what) {
    if (!(d.mean >= lo && d.mean <= hi))
        throw InvalidArgument(std::string(what) + ".mean out of range");
    if (!(d.spread >= 0.0) || !std::isfinite(d.spread))
        throw InvalidArgument(std::string(what) + ".spread must be non-negative");
}

void check_class(const VoiceClass& c, const char* name) {
    const std::string n(name);
    check_draw(c.pitch_std_hz, 0.0, 200.0, (n + ".pitch_std_hz").c_str());
    check_draw(c.modulation_depth, 0.0, 1.0, (n + ".modulation_depth").c_str());
    check_draw(c.aspiration_snr_db, -20.0, 80.0, (n + ".aspiration_snr_db").c_str());
}

// Two-pole resonator with unity gain at DC.
struct Resonator {
    double a = 1.0, b = 0.0, c = 0.0;
    double y1 = 0.0, y2 = 0.0;

    void tune(double freq, double bw, double fs) {
        const double r = std::exp(-std::numbers::pi * bw / fs);
        b = 2.0 * r * std::cos(kTwoPi * freq / fs);
        c = -r * r;
        a = 1.0 - b - c;
    }

    double step(double x) {
        const double y = a * x + b * y1 + c * y2;
        y2 = y1;
        y1 = y;
        return y;
    }
};

Draw read_draw(const json& j, const std::string& where) {
    Draw d;
    for (auto& [key, value] : j.items()) {
        if (key == "mean") {
            d.mean = value.get<double>();
        } else if (key == "spread") {
            d.spread = value.get<double>();
        } else {
            throw ParseError("unknown key '" + where + "." + key + "'");
        }
    }
    return d;
}

VoiceClass read_class(const json& j, VoiceClass c, const std::string& where) {
    for (auto& [key, value] : j.items()) {
        if (key == "pitch_std_hz") {
            c.pitch_std_hz = read_draw(value, where + "." + key);
        } else if (key == "modulation_depth") {
            c.modulation_depth = read_draw(value, where + "." + key);
        } else if (key == "aspiration_snr_db") {
            c.aspiration_snr_db = read_draw(value, where + "." + key);
        } else {
            throw ParseError("unknown key '" + where + "." + key + "'");
        }
    }
    return c;
}

}  // namespace

void validate(const SynthParams& p) {
    check_class(p.neurotypical, "neurotypical");
    check_class(p.dysarthric, "dysarthric");
    if (p.sample_rate < 8000 || p.sample_rate > 192000) throw InvalidArgument("sample_rate must be in [8000, 192000]");
    if (!(p.seconds_per_speaker > 0.0)) throw InvalidArgument("seconds_per_speaker must be positive");
    if (!(p.min_utterance_seconds > 0.0)) throw InvalidArgument("min_utterance_seconds must be positive");
    if (!(p.max_utterance_seconds >= p.min_utterance_seconds))
        throw InvalidArgument("max_utterance_seconds must be >= min_utterance_seconds");
    if (!(p.f0_female_hz > 50.0 && p.f0_female_hz < 500.0)) throw InvalidArgument("f0_female_hz must be in (50, 500)");
    if (!(p.f0_male_hz > 50.0 && p.f0_male_hz < 500.0)) throw InvalidArgument("f0_male_hz must be in (50, 500)");
    if (!(p.f0_speaker_spread_hz >= 0.0)) throw InvalidArgument("f0_speaker_spread_hz must be non-negative");
    if (!(p.syllable_rate_hz > 0.5 && p.syllable_rate_hz < 20.0))
        throw InvalidArgument("syllable_rate_hz must be in (0.5, 20)");
    if (!(p.jitter >= 0.0 && p.jitter <= 0.2)) throw InvalidArgument("jitter must be in [0, 0.2]");
}

SynthParams load_synth_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("cannot open synth parameter file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(path.string() + ": expected a JSON object");
    SynthParams p;
    try {
        for (auto& [key, value] : j.items()) {
            if (key == "neurotypical") {
                p.neurotypical = read_class(value, p.neurotypical, key);
            } else if (key == "dysarthric") {
                p.dysarthric = read_class(value, p.dysarthric, key);
            } else if (key == "sample_rate") {
                p.sample_rate = value.get<int>();
            } else if (key == "seconds_per_speaker") {
                p.seconds_per_speaker = value.get<double>();
            } else if (key == "min_utterance_seconds") {
                p.min_utterance_seconds = value.get<double>();
            } else if (key == "max_utterance_seconds") {
                p.max_utterance_seconds = value.get<double>();
            } else if (key == "f0_female_hz") {
                p.f0_female_hz = value.get<double>();
            } else if (key == "f0_male_hz") {
                p.f0_male_hz = value.get<double>();
            } else if (key == "f0_speaker_spread_hz") {
                p.f0_speaker_spread_hz = value.get<double>();
            } else if (key == "syllable_rate_hz") {
                p.syllable_rate_hz = value.get<double>();
            } else if (key == "jitter") {
                p.jitter = value.get<double>();
            } else {
                throw ParseError("unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    validate(p);
    return p;
}

VoiceDraw draw_voice(const SynthParams& params, int label, Gender gender, std::uint64_t seed) {
    Rng rng(seed);
    const VoiceClass& c = label == 0 ? params.neurotypical : params.dysarthric;
    VoiceDraw v;
    const double base = gender == Gender::F ? params.f0_female_hz : params.f0_male_hz;
    v.f0_hz = std::clamp(rng.normal(base, params.f0_speaker_spread_hz), 60.0, 400.0);
    // Intonation range scales with the speaker's register.
    const double register_scale = v.f0_hz / 160.0;
    v.pitch_std_hz = std::max(0.5, rng.normal(c.pitch_std_hz.mean, c.pitch_std_hz.spread) * register_scale);
    v.modulation_depth = std::clamp(rng.normal(c.modulation_depth.mean, c.modulation_depth.spread), 0.0, 1.0);
    v.aspiration_snr_db = std::clamp(rng.normal(c.aspiration_snr_db.mean, c.aspiration_snr_db.spread), -20.0, 80.0);
    return v;
}

Waveform synth_utterance(const SynthParams& params, const VoiceDraw& voice, double seconds,
                         std::uint64_t seed) {
    if (!(seconds > 0.0)) throw InvalidArgument("utterance duration must be positive");
    Rng rng(seed);
    const double fs = params.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
    if (n == 0) throw InvalidArgument("utterance shorter than one sample");

    // Slow intonation contour with unit variance: three incommensurate sines.
    std::array<double, 3> contour_freq{};
    std::array<double, 3> contour_phase{};
    for (int i = 0; i < 3; ++i) {
        contour_freq[i] = rng.uniform(0.4, 2.0);
        contour_phase[i] = rng.uniform(0.0, kTwoPi);
    }
    const double contour_amp = std::sqrt(2.0 / 3.0);

    // Syllable plan: durations, vowels.
    struct Syllable {
        std::size_t start;
        std::size_t length;
        std::array<double, 3> formants;
    };
    std::vector<Syllable> syllables;
    const double formant_scale = voice.f0_hz > 165.0 ? 1.15 : 1.0;
    for (std::size_t pos = 0; pos < n;) {
        const double dur = rng.uniform(0.8, 1.2) / params.syllable_rate_hz;
        const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(dur * fs));
        const auto& vowel = kVowels[rng.below(kVowels.size())];
        Syllable s{pos, std::min(len, n - pos), {}};
        for (int f = 0; f < 3; ++f) s.formants[f] = vowel.formants[f] * formant_scale * rng.uniform(0.95, 1.05);
        syllables.push_back(s);
        pos += len;
    }

    // Voiced source: harmonic series with 1/h tilt via the sine recurrence.
    std::vector<double> voiced(n);
    const double nyquist_guard = 0.45 * fs;
    const int max_harmonics = static_cast<int>(nyquist_guard / 50.0);
    double phase = 0.0;
    double jitter_factor = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double z = 0.0;
        for (int k = 0; k < 3; ++k) z += std::sin(kTwoPi * contour_freq[k] * t + contour_phase[k]);
        const double f0 = std::max(50.0, (voice.f0_hz + voice.pitch_std_hz * contour_amp * z) * jitter_factor);
        phase += kTwoPi * f0 / fs;
        if (phase >= kTwoPi) {
            phase -= kTwoPi;
            jitter_factor = 1.0 + params.jitter * rng.normal();
        }
        const double s1 = std::sin(phase);
        const double c2 = 2.0 * std::cos(phase);
        double prev = 0.0, cur = s1, acc = 0.0;
        for (int h = 1; h <= max_harmonics; ++h) {
            const double fh = h * f0;
            if (fh >= nyquist_guard) break;
            const double taper = std::min(1.0, (nyquist_guard - fh) / 200.0);
            acc += taper * cur / h;
            const double next = c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        voiced[i] = acc;
    }

    // Aspiration: differenced white noise at the requested SNR.
    std::vector<double> noise(n);
    double last = 0.0;
    for (auto& v : noise) {
        const double w = rng.normal();
        v = w - 0.5 * last;
        last = w;
    }
    double pv = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pv += voiced[i] * voiced[i];
        pn += noise[i] * noise[i];
    }
    const double noise_gain = pn > 0.0 ? std::sqrt(pv / (pn * std::pow(10.0, voice.aspiration_snr_db / 10.0))) : 0.0;

    // Formant filtering with per-block interpolated targets and syllabic envelope.
    std::array<Resonator, 3> tract;
    std::vector<double> out(n);
    constexpr std::size_t kBlock = 32;
    std::size_t syl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (syl + 1 < syllables.size() && i >= syllables[syl + 1].start) ++syl;
        const Syllable& s = syllables[syl];
        const double u = static_cast<double>(i - s.start) / static_cast<double>(s.length);
        if (i % kBlock == 0) {
            // Glide toward the next syllable's vowel over the last 30%.
            const Syllable& next = syllables[std::min(syl + 1, syllables.size() - 1)];
            const double mix = u > 0.7 ? (u - 0.7) / 0.3 : 0.0;
            for (int f = 0; f < 3; ++f) {
                const double freq = (1.0 - mix) * s.formants[f] + mix * next.formants[f];
                tract[f].tune(freq, kBandwidths[f], fs);
            }
        }
        double x = voiced[i] + noise_gain * noise[i];
        for (auto& r : tract) x = r.step(x);
        const double env = 1.0 - voice.modulation_depth * 0.5 * (1.0 + std::cos(kTwoPi * u));
        out[i] = env * x;
    }

    // 20 ms raised-cosine fades, then peak-normalize to 0.5.
    const auto fade = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.02 * fs));
    for (std::size_t i = 0; i < fade; ++i) {
        const double g = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / fade));
        out[i] *= g;
        out[n - 1 - i] *= g;
    }
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (auto& v : out) v *= 0.5 / peak;
    return Waveform{std::move(out), params.sample_rate};
}

CorpusManifest synth_corpus(int n_speakers, std::uint64_t seed, const SynthParams& params,
                            const std::filesystem::path& out_dir) {
    if (n_speakers < 2 || n_speakers % 2 != 0)
        throw InvalidArgument("n_speakers must be a positive even number, got " + std::to_string(n_speakers));
    validate(params);

    CorpusManifest manifest;
    manifest.working_rate = params.sample_rate;
    const int per_class = n_speakers / 2;
    for (int i = 0; i < n_speakers; ++i) {
        const int label = i < per_class ? 0 : 1;
        const int within = i % per_class;
        const Gender gender = within % 2 == 0 ? Gender::F : Gender::M;
        char id[32];
        std::snprintf(id, sizeof id, "spk%03d", i);

        const std::uint64_t speaker_seed = derive_seed(seed, "speaker", {static_cast<std::uint64_t>(i)});
        const VoiceDraw voice = draw_voice(params, label, gender, derive_seed(speaker_seed, "voice"));
        Rng durations(derive_seed(speaker_seed, "durations"));
        double remaining = params.seconds_per_speaker;
        for (int u = 0; remaining > 1e-9; ++u) {
            double d = std::min(remaining, durations.uniform(params.min_utterance_seconds, params.max_utterance_seconds));
            if (remaining - d < params.min_utterance_seconds) d = remaining;
            remaining -= d;
            const Waveform w =
                synth_utterance(params, voice, d, derive_seed(speaker_seed, "utterance", {static_cast<std::uint64_t>(u)}));
            char name[64];
            std::snprintf(name, sizeof name, "%s_u%02d.wav", id, u);
            const auto path = out_dir / "audio" / name;
            write_wav_pcm16(path, w);
            manifest.entries.push_back(ManifestEntry{id, path, label, gender});
        }
    }
    save_manifest(out_dir / "manifest.csv", manifest);
    return manifest;
}

}  // namespace tefs::corpus
