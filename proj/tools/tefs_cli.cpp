// tefs: synthesize corpora, extract representations, run experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <optional>
#include <set>

#include "tefs/cli/config.hpp"
#include "tefs/cli/render.hpp"
#include "tefs/corpus/manifest.hpp"
#include "tefs/corpus/synth.hpp"
#include "tefs/corpus/wav.hpp"
#include "tefs/error.hpp"
#include "tefs/evaluation/experiment.hpp"
#include "tefs/frontend/container.hpp"
#include "tefs/frontend/representation.hpp"

namespace {

using tefs::cli::RunConfig;

// Raised for bad flag combinations detected after parsing.
struct UsageError : tefs::Error {
    using tefs::Error::Error;
};

// Options that override config-file values only when given on the command line.
class Overrides {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& storage, const std::string& desc,
                     std::function<void(RunConfig&, const T&)> set) {
        auto* opt = app->add_option(name, storage, desc)->capture_default_str();
        entries_.push_back({opt, [&storage, set](RunConfig& c) { set(c, storage); }});
        return opt;
    }

    void apply(RunConfig& c) const {
        for (const auto& e : entries_)
            if (e.opt->count() > 0) e.fn(c);
    }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(RunConfig&)> fn;
    };
    std::vector<Entry> entries_;
};

struct FlagValues {
    RunConfig defaults;
    double frame_ms = 6.0;
    double stft_frame_ms = 3.875;
    std::string norm = "global";
    std::string config;
};

void add_frontend_flags(CLI::App* app, Overrides& ov, FlagValues& f) {
    ov.add<int>(app, "--bands", f.defaults.frontend.bands, "Number of subbands K",
                [](RunConfig& c, const int& v) { c.frontend.bands = v; });
    ov.add<double>(app, "--f-lo", f.defaults.frontend.f_lo, "Lowest filterbank cutoff [Hz]",
                   [](RunConfig& c, const double& v) { c.frontend.f_lo = v; });
    ov.add<double>(app, "--f-hi", f.defaults.frontend.f_hi, "Highest filterbank cutoff [Hz]",
                   [](RunConfig& c, const double& v) { c.frontend.f_hi = v; });
    ov.add<double>(app, "--window-ms", f.frame_ms, "Envelope/fine-structure frame length [ms]",
                   [](RunConfig& c, const double& v) { c.frontend.frame_seconds = v / 1000.0; });
    ov.add<double>(app, "--stft-window-ms", f.stft_frame_ms, "STFT frame length [ms]",
                   [](RunConfig& c, const double& v) { c.frontend.stft_frame_seconds = v / 1000.0; });
    ov.add<int>(app, "--filter-order", f.defaults.frontend.filter_order, "Butterworth prototype order per band edge",
                [](RunConfig& c, const int& v) { c.frontend.filter_order = v; });
    ov.add<int>(app, "--working-rate", f.defaults.working_rate, "Working sample rate [Hz]",
                [](RunConfig& c, const int& v) { c.working_rate = v; });
    ov.add<int>(app, "--segment-frames", f.defaults.segment_frames, "Frames per segment B",
                [](RunConfig& c, const int& v) { c.segment_frames = v; });
    ov.add<double>(app, "--overlap", f.defaults.overlap, "Segment overlap fraction",
                   [](RunConfig& c, const double& v) { c.overlap = v; });
    app->add_option("--config", f.config, "JSON configuration file; flags given here win");
}

RunConfig merged_config(const FlagValues& f, const Overrides& ov) {
    RunConfig c = f.config.empty() ? RunConfig{} : tefs::cli::load_run_config(f.config);
    ov.apply(c);
    try {
        tefs::cli::validate(c);
    } catch (const tefs::InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return c;
}

std::vector<tefs::frontend::RepresentationKind> parse_kinds(const std::vector<std::string>& names) {
    using K = tefs::frontend::RepresentationKind;
    std::set<K> kinds;
    for (const auto& n : names) {
        if (n == "all") {
            kinds.insert({K::Envelope, K::FineStructure, K::StftLogMag});
            continue;
        }
        try {
            kinds.insert(tefs::frontend::parse_kind(n));
        } catch (const tefs::InvalidArgument& e) {
            throw UsageError(e.what());
        }
    }
    return {kinds.begin(), kinds.end()};
}

int cmd_synth(int speakers, std::uint64_t seed, const std::string& out, const std::string& params_path,
              double seconds) {
    tefs::corpus::SynthParams params;
    if (!params_path.empty()) params = tefs::corpus::load_synth_params(params_path);
    if (seconds > 0.0) params.seconds_per_speaker = seconds;
    const auto manifest = tefs::corpus::synth_corpus(speakers, seed, params, out);
    const auto path = std::filesystem::path(out) / "manifest.csv";
    std::printf("wrote %zu speakers, %zu utterances\n%s\n", manifest.speakers().size(), manifest.entries.size(),
                path.string().c_str());
    return 0;
}

int cmd_extract(const RunConfig& c, const std::vector<tefs::frontend::RepresentationKind>& kinds, bool render) {
    using K = tefs::frontend::RepresentationKind;
    if (c.manifest.empty()) throw UsageError("--manifest is required");
    if (c.out.empty()) throw UsageError("--out is required");
    const auto manifest = tefs::corpus::load_manifest(c.manifest, c.working_rate);
    const bool temporal = std::any_of(kinds.begin(), kinds.end(), [](K k) { return k != K::StftLogMag; });
    std::optional<tefs::frontend::Filterbank> fb;
    if (temporal)
        fb = tefs::frontend::design_filterbank(c.frontend.bands, c.frontend.f_lo, c.frontend.f_hi, c.working_rate,
                                               c.frontend.filter_order);
    int written = 0, skipped = 0;
    for (const auto& entry : manifest.entries) {
        const auto stem = entry.audio_path.stem().string();
        const auto dir = c.out / entry.speaker_id;
        std::vector<tefs::frontend::Representation> reps;
        try {
            const auto w = tefs::corpus::load_waveform(entry.audio_path, c.working_rate);
            std::optional<tefs::frontend::TemporalPair> pair;
            if (temporal) pair = tefs::frontend::compute_temporal_pair(w, *fb, c.frontend.frame_seconds);
            for (auto k : kinds) {
                if (k == K::Envelope) reps.push_back(pair->envelope);
                else if (k == K::FineStructure) reps.push_back(pair->fine_structure);
                else reps.push_back(tefs::frontend::stft_log_magnitude(w, c.frontend.stft_frame_seconds));
            }
        } catch (const tefs::InvalidArgument& e) {
            std::fprintf(stderr, "warning: skipped %s: %s\n", entry.audio_path.string().c_str(), e.what());
            ++skipped;
            continue;
        }
        const bool short_utt = std::any_of(reps.begin(), reps.end(),
                                           [&](const auto& r) { return r.frames < c.segment_frames; });
        if (short_utt) {
            std::fprintf(stderr, "warning: skipped %s: shorter than one %d-frame segment\n",
                         entry.audio_path.string().c_str(), c.segment_frames);
            ++skipped;
            continue;
        }
        std::filesystem::create_directories(dir);
        for (const auto& rep : reps) {
            const auto base = dir / (stem + "." + std::string(tefs::frontend::kind_name(rep.kind)));
            tefs::frontend::write_representation(base.string() + ".tfsr", rep);
            if (render) {
                tefs::frontend::write_representation_csv(base.string() + ".csv", rep);
                tefs::cli::render_representation_png(base.string() + ".png", rep);
            }
            ++written;
        }
    }
    std::printf("wrote %d representations to %s (%d utterances skipped)\n", written, c.out.string().c_str(), skipped);
    return 0;
}

int cmd_run(const RunConfig& c, bool quiet) {
    if (c.manifest.empty()) throw UsageError("--manifest is required");
    if (c.out.empty()) throw UsageError("--out is required");
    const auto manifest = tefs::corpus::load_manifest(c.manifest, c.working_rate);
    std::set<tefs::frontend::RepresentationKind> kinds;
    for (const auto& s : c.systems)
        for (auto k : tefs::evaluation::find_system(s).kinds) kinds.insert(k);
    const std::vector<tefs::frontend::RepresentationKind> kind_list(kinds.begin(), kinds.end());
    const auto corpus =
        tefs::evaluation::prepare_corpus(manifest, kind_list, c.frontend, c.segment_frames, c.overlap, c.jobs);
    for (const auto& w : corpus.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    auto config = tefs::cli::experiment_config(c);
    if (!quiet) config.progress = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
    const auto report = tefs::evaluation::run_experiment(corpus, c.systems, config);

    std::filesystem::create_directories(c.out);
    tefs::evaluation::write_report_json(c.out / "report.json", report, tefs::cli::to_json(c));
    const auto table = tefs::evaluation::format_table(report);
    {
        std::FILE* f = std::fopen((c.out / "table.txt").string().c_str(), "wb");
        if (!f) throw tefs::Error("cannot write " + (c.out / "table.txt").string());
        std::fputs(table.c_str(), f);
        std::fclose(f);
    }
    std::fputs(table.c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dysarthric speech detection from temporal envelope and fine structure"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tefs 1.0");

    auto* synth = app.add_subcommand("synth", "Write a synthetic labelled corpus and its manifest");
    int speakers = 20;
    std::uint64_t synth_seed = 0;
    std::string synth_out, synth_params;
    double synth_seconds = 0.0;
    synth->add_option("--speakers", speakers, "Number of speakers (even; half per class)")
        ->capture_default_str()
        ->check([](const std::string& v) -> std::string {
            try {
                const long n = std::stol(v);
                return n >= 2 && n % 2 == 0 ? "" : "speaker count must be a positive even number";
            } catch (...) {
                return "speaker count must be an integer";
            }
        });
    synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--params", synth_params, "JSON file with generator parameters");
    synth->add_option("--seconds", synth_seconds, "Audio per speaker in seconds (default from parameters: 30)");

    auto* extract = app.add_subcommand("extract", "Compute representation containers for every utterance");
    FlagValues ext_flags;
    Overrides ext_ov;
    add_frontend_flags(extract, ext_ov, ext_flags);
    std::string ext_manifest, ext_out;
    ext_ov.add<std::string>(extract, "--manifest", ext_manifest, "Corpus manifest CSV",
                            [](RunConfig& c, const std::string& v) { c.manifest = v; });
    ext_ov.add<std::string>(extract, "--out", ext_out, "Output directory",
                            [](RunConfig& c, const std::string& v) { c.out = v; });
    std::vector<std::string> ext_kinds = {"all"};
    extract->add_option("--kind", ext_kinds, "envelope, fine-structure, stft or all (repeatable, comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    bool render = false;
    extract->add_flag("--render", render, "Also write CSV matrices and PNG images");

    auto* run = app.add_subcommand("run", "Cross-validated training and evaluation of the selected systems");
    FlagValues run_flags;
    Overrides run_ov;
    add_frontend_flags(run, run_ov, run_flags);
    std::string run_manifest, run_out;
    run_ov.add<std::string>(run, "--manifest", run_manifest, "Corpus manifest CSV",
                            [](RunConfig& c, const std::string& v) { c.manifest = v; });
    run_ov.add<std::string>(run, "--out", run_out, "Output directory for report.json and table.txt",
                            [](RunConfig& c, const std::string& v) { c.out = v; });
    auto& d = run_flags.defaults;
    run_ov.add<std::vector<std::string>>(run, "--systems", d.systems, "Comma-separated systems",
                                         [](RunConfig& c, const std::vector<std::string>& v) { c.systems = v; })
        ->delimiter(',');
    run_ov.add<int>(run, "--splits", d.splits, "Speaker splits", [](RunConfig& c, const int& v) { c.splits = v; });
    run_ov.add<int>(run, "--seeds", d.seeds, "Seeds per fold", [](RunConfig& c, const int& v) { c.seeds = v; });
    run_ov.add<int>(run, "--folds", d.folds, "Cross-validation folds", [](RunConfig& c, const int& v) { c.folds = v; });
    run_ov.add<std::uint64_t>(run, "--seed", d.master_seed, "Master seed",
                              [](RunConfig& c, const std::uint64_t& v) { c.master_seed = v; });
    run_ov.add<int>(run, "--jobs", d.jobs, "Parallel training jobs", [](RunConfig& c, const int& v) { c.jobs = v; });
    run_ov.add<int>(run, "--batch-size", d.train.batch_size, "Mini-batch size",
                    [](RunConfig& c, const int& v) { c.train.batch_size = v; });
    run_ov.add<double>(run, "--lr", d.train.initial_lr, "Initial learning rate",
                       [](RunConfig& c, const double& v) { c.train.initial_lr = v; });
    run_ov.add<int>(run, "--patience", d.train.patience, "Epochs without dev improvement before halving the rate",
                    [](RunConfig& c, const int& v) { c.train.patience = v; });
    run_ov.add<double>(run, "--lr-floor", d.train.lr_floor, "Stop once the rate falls below this",
                       [](RunConfig& c, const double& v) { c.train.lr_floor = v; });
    run_ov.add<int>(run, "--max-epochs", d.train.max_epochs, "Epoch cap",
                    [](RunConfig& c, const int& v) { c.train.max_epochs = v; });
    run_ov.add<std::string>(run, "--norm", run_flags.norm, "Z-score statistics: global or per-band",
                            [](RunConfig& c, const std::string& v) { c.norm = tefs::segments::parse_norm_mode(v); });
    bool quiet = false;
    run->add_flag("--quiet", quiet, "No per-model progress on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*synth) return cmd_synth(speakers, synth_seed, synth_out, synth_params, synth_seconds);
        if (*extract) return cmd_extract(merged_config(ext_flags, ext_ov), parse_kinds(ext_kinds), render);
        if (*run) return cmd_run(merged_config(run_flags, run_ov), quiet);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\nRun with --help for usage.\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
