#include "tefs/evaluation/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "tefs/corpus/wav.hpp"
#include "tefs/error.hpp"
#include "tefs/evaluation/folds.hpp"
#include "tefs/random.hpp"

namespace tefs::evaluation {

using frontend::Representation;
using network::Arch;
using segments::Segment;

const std::vector<SystemSpec>& system_catalog() {
    using K = RepresentationKind;
    static const std::vector<SystemSpec> catalog = {
        {"a1-stft", "A1 - Magnitude of STFT", Arch::A1, {K::StftLogMag}},
        {"a2-stft", "A2 - Magnitude of STFT", Arch::A2, {K::StftLogMag}},
        {"a1-env", "A1 - Envelope", Arch::A1, {K::Envelope}},
        {"a2-env", "A2 - Envelope", Arch::A2, {K::Envelope}},
        {"a1-fs", "A1 - Fine structure", Arch::A1, {K::FineStructure}},
        {"a2-fs", "A2 - Fine structure", Arch::A2, {K::FineStructure}},
        {"tefs", "TEFS", Arch::TEFS, {K::Envelope, K::FineStructure}},
    };
    return catalog;
}

const SystemSpec& find_system(std::string_view name) {
    for (const auto& s : system_catalog())
        if (s.name == name) return s;
    throw InvalidArgument("unknown system '" + std::string(name) +
                          "' (expected a1-stft, a2-stft, a1-env, a2-env, a1-fs, a2-fs or tefs)");
}

namespace {

std::size_t catalog_index(const std::string& name) {
    const auto& c = system_catalog();
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i].name == name) return i;
    throw InvalidArgument("unknown system '" + name + "'");
}

std::size_t kind_index(RepresentationKind k) { return static_cast<std::size_t>(k); }

}  // namespace

PreparedCorpus prepare_corpus(const corpus::CorpusManifest& manifest, std::span<const RepresentationKind> kinds,
                              const frontend::FrontendParams& frontend, int segment_frames, double overlap,
                              int jobs) {
    if (kinds.empty()) throw InvalidArgument("no representation kinds requested");
    if (segment_frames < 1) throw InvalidArgument("segment length must be positive");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");
    bool need_temporal = false, need_stft = false;
    std::set<RepresentationKind> wanted(kinds.begin(), kinds.end());
    for (auto k : wanted) (k == RepresentationKind::StftLogMag ? need_stft : need_temporal) = true;

    std::unique_ptr<frontend::Filterbank> fb;
    if (need_temporal)
        fb = std::make_unique<frontend::Filterbank>(frontend::design_filterbank(
            frontend.bands, frontend.f_lo, frontend.f_hi, manifest.working_rate, frontend.filter_order));

    const auto speakers = manifest.speakers();
    std::vector<SpeakerData> data(speakers.size());
    std::vector<std::vector<std::string>> warnings(speakers.size());

    detail::parallel_for(speakers.size(), jobs, [&](std::size_t i) {
        const auto& sp = speakers[i];
        data[i].speaker = sp;
        auto utts = manifest.utterances(sp.id);
        std::sort(utts.begin(), utts.end(),
                  [](const auto& a, const auto& b) { return a.audio_path.generic_string() < b.audio_path.generic_string(); });
        for (const auto& u : utts) {
            const std::string utt_id = u.audio_path.filename().string();
            std::array<Representation, 3> reps;
            try {
                const Waveform w = corpus::load_waveform(u.audio_path, manifest.working_rate);
                if (need_temporal) {
                    auto pair = frontend::compute_temporal_pair(w, *fb, frontend.frame_seconds);
                    reps[0] = std::move(pair.envelope);
                    reps[1] = std::move(pair.fine_structure);
                }
                if (need_stft) reps[2] = frontend::stft_log_magnitude(w, frontend.stft_frame_seconds);
            } catch (const InvalidArgument& e) {
                warnings[i].push_back("skipped " + sp.id + "/" + utt_id + ": " + e.what());
                continue;
            } catch (const std::exception& e) {
                throw Error("speaker " + sp.id + ", utterance " + u.audio_path.string() + ": " + e.what());
            }
            bool too_short = false;
            for (auto k : wanted)
                if (segments::segment_count(reps[kind_index(k)].frames, segment_frames, overlap) == 0) too_short = true;
            if (too_short) {
                warnings[i].push_back("skipped " + sp.id + "/" + utt_id + ": shorter than one segment");
                continue;
            }
            for (auto k : wanted) {
                auto segs = segments::segment(reps[kind_index(k)], segment_frames, overlap, sp.id, sp.label, utt_id);
                auto& dst = data[i].segments[kind_index(k)];
                for (auto& s : segs) dst.push_back(std::move(s));
            }
        }
    });

    PreparedCorpus out;
    out.frontend = frontend;
    out.segment_frames = segment_frames;
    out.overlap = overlap;
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (auto& w : warnings[i]) out.warnings.push_back(std::move(w));
        bool empty = false;
        for (auto k : wanted) empty = empty || data[i].segments[kind_index(k)].empty();
        if (empty) {
            out.warnings.push_back("speaker " + data[i].speaker.id + " has no segments and is excluded");
            continue;
        }
        out.speakers.push_back(std::move(data[i]));
    }
    return out;
}

void validate(const ExperimentConfig& c) {
    training::validate(c.train);
    if (c.n_splits < 1) throw InvalidArgument("number of splits must be positive");
    if (c.n_seeds < 1) throw InvalidArgument("number of seeds must be positive");
    if (c.n_folds < 2) throw InvalidArgument("number of folds must be at least 2");
    if (c.jobs < 1) throw InvalidArgument("jobs must be positive");
}

namespace {

struct JobSets {
    training::SampleSet train, dev, test;
    std::vector<std::string> test_speakers;  // one per test sample
};

class Job {
public:
    Job(const PreparedCorpus& corpus, const ExperimentConfig& config, const FoldPlan& plan, int split, int fold,
        int seed)
        : corpus_(corpus), config_(config), split_(split), fold_(fold), seed_(seed) {
        for (const auto& sd : corpus.speakers) by_id_[sd.speaker.id] = &sd;
        test_ = plan.folds[static_cast<std::size_t>(fold)];
        const std::set<std::string> test_set(test_.begin(), test_.end());
        std::vector<corpus::Speaker> pool;
        for (const auto& sd : corpus.speakers)
            if (!test_set.count(sd.speaker.id)) pool.push_back(sd.speaker);
        auto split_dev = carve_dev(pool, static_cast<int>(test_.size()),
                                   derive_seed(config.master_seed, "dev",
                                               {static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(fold)}));
        train_ = std::move(split_dev.train);
        dev_ = std::move(split_dev.dev);
    }

    ModelRun run(const SystemSpec& spec) {
        auto& net = model(spec);
        const auto& sets = sample_sets(spec.kinds);
        ModelRun r;
        r.split = split_;
        r.fold = fold_;
        r.seed = seed_;
        const auto& log = logs_.at(spec.name);
        r.epochs = static_cast<int>(log.epochs.size());
        r.best_epoch = log.best_epoch;
        r.best_dev_loss = log.best_dev_loss;
        r.stop_reason = std::string(training::stop_reason_name(log.stop));
        r.train_speakers = static_cast<int>(train_.size());
        r.dev_speakers = static_cast<int>(dev_.size());
        r.train_ids = train_;
        r.dev_ids = dev_;

        const auto probs = training::predict(net, sets.test, config_.train.batch_size);
        std::map<std::string, std::vector<double>> per_speaker;
        for (std::size_t i = 0; i < probs.size(); ++i) per_speaker[sets.test.speakers[i]].push_back(probs[i]);
        for (const auto& id : test_) {
            auto it = per_speaker.find(id);
            if (it == per_speaker.end()) continue;  // cannot happen after prepare_corpus filtering
            r.scores.push_back({id, soft_vote(it->second), by_id_.at(id)->speaker.label});
        }
        r.auc = auc(r.scores);
        r.accuracy = accuracy(r.scores);
        return r;
    }

private:
    network::Network<float>& model(const SystemSpec& spec) {
        if (auto it = models_.find(spec.name); it != models_.end()) return *it->second;
        const std::uint64_t model_seed =
            derive_seed(config_.master_seed, "model",
                        {static_cast<std::uint64_t>(split_), static_cast<std::uint64_t>(fold_),
                         static_cast<std::uint64_t>(seed_), catalog_index(spec.name)});
        const auto& sets = sample_sets(spec.kinds);
        std::unique_ptr<network::Network<float>> net;
        if (spec.arch == Arch::TEFS) {
            auto& env = model(find_system("a1-env"));
            auto& fs = model(find_system("a1-fs"));
            net = std::make_unique<network::Network<float>>(training::transfer_init_tefs(env, fs, model_seed));
        } else {
            net = std::make_unique<network::Network<float>>(
                network::build_architecture<float>(spec.arch, sets.train.bands, sets.train.frames, model_seed));
        }
        training::TrainConfig tc = config_.train;
        tc.seed = derive_seed(model_seed, "train");
        logs_[spec.name] = training::train(*net, sets.train, sets.dev, tc);
        auto& ref = *net;
        models_[spec.name] = std::move(net);
        return ref;
    }

    const segments::NormStats& norm(RepresentationKind kind) {
        const auto k = kind_index(kind);
        if (!norms_[k]) {
            std::vector<const Segment*> ptrs;
            for (const auto& id : train_)
                for (const auto& s : by_id_.at(id)->segments[k]) ptrs.push_back(&s);
            norms_[k] = std::make_unique<segments::NormStats>(
                segments::fit_norm(std::span<const Segment* const>(ptrs), config_.norm));
        }
        return *norms_[k];
    }

    training::SampleSet build(const std::vector<RepresentationKind>& kinds, const std::vector<std::string>& ids) {
        training::SampleSet set;
        set.inputs = static_cast<int>(kinds.size());
        const auto& probe = by_id_.at(ids.front())->segments[kind_index(kinds.front())].front();
        set.bands = probe.bands;
        set.frames = probe.frames;
        for (auto k : kinds) {
            const auto& s = by_id_.at(ids.front())->segments[kind_index(k)].front();
            if (s.bands != set.bands || s.frames != set.frames)
                throw ShapeError("representations of one system must share a geometry");
        }
        std::vector<std::vector<float>> buf(kinds.size());
        std::vector<std::span<const float>> views(kinds.size());
        for (const auto& id : ids) {
            const SpeakerData& sd = *by_id_.at(id);
            const std::size_t count = sd.segments[kind_index(kinds.front())].size();
            for (std::size_t i = 0; i < count; ++i) {
                for (std::size_t j = 0; j < kinds.size(); ++j) {
                    const Segment& s = sd.segments[kind_index(kinds[j])].at(i);
                    buf[j] = s.values;
                    segments::normalize_values(norm(kinds[j]), buf[j], s.bands, s.frames);
                    views[j] = buf[j];
                }
                set.add(views, sd.speaker.label, sd.speaker.id);
            }
        }
        return set;
    }

    const JobSets& sample_sets(const std::vector<RepresentationKind>& kinds) {
        std::vector<int> key;
        for (auto k : kinds) key.push_back(static_cast<int>(k));
        auto it = sets_.find(key);
        if (it != sets_.end()) return *it->second;
        auto js = std::make_unique<JobSets>();
        js->train = build(kinds, train_);
        js->dev = build(kinds, dev_);
        js->test = build(kinds, test_);
        auto& ref = *js;
        sets_[key] = std::move(js);
        return ref;
    }

    const PreparedCorpus& corpus_;
    const ExperimentConfig& config_;
    int split_, fold_, seed_;
    std::map<std::string, const SpeakerData*> by_id_;
    std::vector<std::string> train_, dev_, test_;
    std::array<std::unique_ptr<segments::NormStats>, 3> norms_;
    std::map<std::vector<int>, std::unique_ptr<JobSets>> sets_;
    std::map<std::string, std::unique_ptr<network::Network<float>>> models_;
    std::map<std::string, training::TrainLog> logs_;
};

}  // namespace

EvalReport run_experiment(const PreparedCorpus& corpus, std::span<const std::string> systems,
                          const ExperimentConfig& config) {
    validate(config);
    if (systems.empty()) throw InvalidArgument("no systems requested");
    std::vector<std::size_t> chosen;
    for (const auto& name : systems) {
        const auto idx = catalog_index(std::string(find_system(name).name));
        if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
    std::sort(chosen.begin(), chosen.end());
    const auto& catalog = system_catalog();

    for (auto idx : chosen)
        for (auto k : catalog[idx].kinds)
            for (const auto& sd : corpus.speakers)
                if (sd.segments[kind_index(k)].empty())
                    throw InvalidArgument("corpus has no " + std::string(frontend::kind_name(k)) + " segments for speaker " +
                                          sd.speaker.id + " (system " + catalog[idx].name + ")");

    std::vector<corpus::Speaker> speakers;
    for (const auto& sd : corpus.speakers) speakers.push_back(sd.speaker);
    std::vector<FoldPlan> plans;
    for (int s = 0; s < config.n_splits; ++s)
        plans.push_back(make_folds(speakers, derive_seed(config.master_seed, "split", {static_cast<std::uint64_t>(s)}),
                                   config.n_folds));

    struct Coord {
        int split, fold, seed;
    };
    std::vector<Coord> coords;
    for (int s = 0; s < config.n_splits; ++s)
        for (int f = 0; f < config.n_folds; ++f)
            for (int k = 0; k < config.n_seeds; ++k) coords.push_back({s, f, k});

    std::vector<std::vector<ModelRun>> results(coords.size());
    std::mutex progress_mutex;
    detail::parallel_for(coords.size(), config.jobs, [&](std::size_t j) {
        const auto c = coords[j];
        try {
            Job job(corpus, config, plans[static_cast<std::size_t>(c.split)], c.split, c.fold, c.seed);
            for (auto idx : chosen) {
                results[j].push_back(job.run(catalog[idx]));
                if (config.progress) {
                    const auto& r = results[j].back();
                    char line[256];
                    std::snprintf(line, sizeof line, "split %d fold %d seed %d %-8s auc %.3f acc %.3f epochs %d",
                                  c.split, c.fold, c.seed, catalog[idx].name.c_str(), r.auc, r.accuracy, r.epochs);
                    std::lock_guard lock(progress_mutex);
                    config.progress(line);
                }
            }
        } catch (const std::exception& e) {
            throw Error("split " + std::to_string(c.split) + ", fold " + std::to_string(c.fold) + ", seed " +
                        std::to_string(c.seed) + ": " + e.what());
        }
    });

    EvalReport report;
    report.n_splits = config.n_splits;
    report.n_folds = config.n_folds;
    report.n_seeds = config.n_seeds;
    report.master_seed = config.master_seed;
    report.speakers = static_cast<int>(corpus.speakers.size());
    report.warnings = corpus.warnings;
    for (std::size_t s = 0; s < chosen.size(); ++s) {
        SystemReport sr;
        sr.system = catalog[chosen[s]];
        std::vector<double> aucs, accs;
        for (auto& job_runs : results) {
            sr.runs.push_back(job_runs[s]);
            aucs.push_back(job_runs[s].auc);
            accs.push_back(job_runs[s].accuracy);
        }
        sr.auc = summarize(aucs);
        sr.accuracy = summarize(accs);
        report.systems.push_back(std::move(sr));
    }
    return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report, const nlohmann::ordered_json& config_echo) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["master_seed"] = report.master_seed;
    j["splits"] = report.n_splits;
    j["folds"] = report.n_folds;
    j["seeds"] = report.n_seeds;
    j["speakers"] = report.speakers;
    if (!config_echo.is_null()) j["config"] = config_echo;
    j["systems"] = ordered_json::array();
    for (const auto& sr : report.systems) {
        ordered_json s;
        s["system"] = sr.system.name;
        s["title"] = sr.system.title;
        s["models"] = sr.runs.size();
        s["auc"] = {{"mean", sr.auc.mean}, {"std", sr.auc.std}};
        s["accuracy"] = {{"mean", sr.accuracy.mean}, {"std", sr.accuracy.std}};
        s["runs"] = ordered_json::array();
        for (const auto& r : sr.runs) {
            ordered_json rj;
            rj["split"] = r.split;
            rj["fold"] = r.fold;
            rj["seed"] = r.seed;
            rj["auc"] = r.auc;
            rj["accuracy"] = r.accuracy;
            rj["epochs"] = r.epochs;
            rj["best_epoch"] = r.best_epoch;
            rj["best_dev_loss"] = r.best_dev_loss;
            rj["stop"] = r.stop_reason;
            rj["train_speakers"] = r.train_speakers;
            rj["dev_speakers"] = r.dev_speakers;
            rj["scores"] = ordered_json::array();
            for (const auto& sc : r.scores)
                rj["scores"].push_back({{"speaker", sc.speaker_id}, {"label", sc.label}, {"score", sc.score}});
            s["runs"].push_back(std::move(rj));
        }
        j["systems"].push_back(std::move(s));
    }
    j["warnings"] = report.warnings;
    return j;
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const nlohmann::ordered_json& config_echo) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << report_to_json(report, config_echo).dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

std::string format_table(const EvalReport& report) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-26s %-15s %s\n", "Network", "AUC", "Accuracy [%]");
    os << line;
    for (const auto& sr : report.systems) {
        std::snprintf(line, sizeof line, "%-26s %.2f ± %.2f    %.2f ± %.2f\n", sr.system.title.c_str(),
                      sr.auc.mean, sr.auc.std, 100.0 * sr.accuracy.mean, 100.0 * sr.accuracy.std);
        os << line;
    }
    std::snprintf(line, sizeof line, "(%d models per system: %d splits x %d folds x %d seeds)\n",
                  report.n_splits * report.n_folds * report.n_seeds, report.n_splits, report.n_folds, report.n_seeds);
    os << line;
    return os.str();
}

}  // namespace tefs::evaluation
