#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tefs/corpus/manifest.hpp"
#include "tefs/evaluation/metrics.hpp"
#include "tefs/frontend/representation.hpp"
#include "tefs/network/model.hpp"
#include "tefs/segments/segments.hpp"
#include "tefs/training/trainer.hpp"

namespace tefs::evaluation {

using frontend::RepresentationKind;

struct SystemSpec {
    std::string name;   // a1-stft, a2-stft, a1-env, a2-env, a1-fs, a2-fs, tefs
    std::string title;  // table row label
    network::Arch arch = network::Arch::A1;
    std::vector<RepresentationKind> kinds;  // one per network input
};

// The seven systems in table order.
const std::vector<SystemSpec>& system_catalog();
const SystemSpec& find_system(std::string_view name);  // InvalidArgument if unknown

// Raw (unnormalized) segments of one speaker, indexed by kind. Envelope and
// fine-structure lists are aligned: entry i of both comes from the same
// utterance window.
struct SpeakerData {
    corpus::Speaker speaker;
    std::array<std::vector<segments::Segment>, 3> segments;
};

struct PreparedCorpus {
    std::vector<SpeakerData> speakers;  // sorted by id
    frontend::FrontendParams frontend;
    int segment_frames = 50;
    double overlap = 0.5;
    std::vector<std::string> warnings;
};

// Loads every utterance (utterances of a speaker in path order), extracts
// the requested kinds and cuts segments. Utterances shorter than one segment
// are skipped and speakers left without segments are dropped; both produce
// warnings.
PreparedCorpus prepare_corpus(const corpus::CorpusManifest& manifest, std::span<const RepresentationKind> kinds,
                              const frontend::FrontendParams& frontend = {}, int segment_frames = 50,
                              double overlap = 0.5, int jobs = 1);

struct ExperimentConfig {
    segments::NormMode norm = segments::NormMode::Global;
    training::TrainConfig train;  // seed is ignored; each model derives its own
    int n_splits = 5;
    int n_seeds = 5;
    int n_folds = 10;
    std::uint64_t master_seed = 0;
    int jobs = 1;
    std::function<void(const std::string&)> progress;
};

void validate(const ExperimentConfig& config);

struct ModelRun {
    int split = 0;
    int fold = 0;
    int seed = 0;
    double auc = 0.0;
    double accuracy = 0.0;
    int epochs = 0;
    int best_epoch = 0;
    double best_dev_loss = 0.0;
    std::string stop_reason;
    int train_speakers = 0;
    int dev_speakers = 0;
    std::vector<std::string> train_ids;  // kept in memory for audits, not serialized
    std::vector<std::string> dev_ids;
    std::vector<SpeakerScore> scores;  // test speakers, sorted by id
};

struct SystemReport {
    SystemSpec system;
    std::vector<ModelRun> runs;  // ordered by (split, fold, seed)
    Summary auc;
    Summary accuracy;
};

struct EvalReport {
    std::vector<SystemReport> systems;
    int n_splits = 0;
    int n_folds = 0;
    int n_seeds = 0;
    std::uint64_t master_seed = 0;
    int speakers = 0;
    std::vector<std::string> warnings;
};

// Trains and scores every requested system for each (split, fold, seed).
// Jobs run on `config.jobs` threads; a TEFS model is transfer-initialized
// from the A1 envelope and fine-structure models of the same job, which are
// also the models reported for a1-env/a1-fs. Any failing job aborts the run
// with the job coordinates in the message.
EvalReport run_experiment(const PreparedCorpus& corpus, std::span<const std::string> systems,
                          const ExperimentConfig& config);

nlohmann::ordered_json report_to_json(const EvalReport& report, const nlohmann::ordered_json& config_echo = {});
void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const nlohmann::ordered_json& config_echo = {});

// Table with one row per system: title, AUC mean +- std, accuracy [%].
std::string format_table(const EvalReport& report);

}  // namespace tefs::evaluation
