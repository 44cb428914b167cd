#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tefs/evaluation/experiment.hpp"
#include "tefs/frontend/representation.hpp"
#include "tefs/segments/segments.hpp"
#include "tefs/training/trainer.hpp"

namespace tefs::cli {

// Every pipeline parameter. Defaults are the published configuration.
struct RunConfig {
    frontend::FrontendParams frontend;
    int working_rate = 16000;
    int segment_frames = 50;
    double overlap = 0.5;
    segments::NormMode norm = segments::NormMode::Global;
    training::TrainConfig train;
    int splits = 5;
    int seeds = 5;
    int folds = 10;
    std::vector<std::string> systems = {"a1-stft", "a2-stft", "a1-env", "a2-env", "a1-fs", "a2-fs", "tefs"};
    std::uint64_t master_seed = 0;
    int jobs = 1;
    std::filesystem::path manifest;
    std::filesystem::path out;
};

// Flat JSON object whose keys are listed in config_keys(). Relative paths
// resolve against the file's directory. Unknown keys and type mismatches
// throw ParseError; missing file throws MissingFileError.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_json(RunConfig& config, const nlohmann::json& j, const std::filesystem::path& base_dir = {});

const std::vector<std::string>& config_keys();

// Range checks across all sections; throws InvalidArgument.
void validate(const RunConfig& config);

nlohmann::ordered_json to_json(const RunConfig& config);

evaluation::ExperimentConfig experiment_config(const RunConfig& config);

}  // namespace tefs::cli
