#include "tefs/cli/config.hpp"

#include <fstream>

#include "tefs/error.hpp"

namespace tefs::cli {

using nlohmann::json;

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "bands",      "f_lo",      "f_hi",         "frame_ms",   "stft_frame_ms", "filter_order", "working_rate",
        "segment_frames", "overlap", "norm",       "batch_size", "initial_lr",    "patience",     "lr_floor",
        "max_epochs", "restore_best", "splits",    "seeds",      "folds",         "systems",      "master_seed",
        "jobs",       "manifest",  "out"};
    return keys;
}

void apply_json(RunConfig& c, const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ParseError("configuration must be a JSON object");
    auto path_of = [&](const json& v) {
        std::filesystem::path p = v.get<std::string>();
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "bands") c.frontend.bands = v.get<int>();
            else if (key == "f_lo") c.frontend.f_lo = v.get<double>();
            else if (key == "f_hi") c.frontend.f_hi = v.get<double>();
            else if (key == "frame_ms") c.frontend.frame_seconds = v.get<double>() / 1000.0;
            else if (key == "stft_frame_ms") c.frontend.stft_frame_seconds = v.get<double>() / 1000.0;
            else if (key == "filter_order") c.frontend.filter_order = v.get<int>();
            else if (key == "working_rate") c.working_rate = v.get<int>();
            else if (key == "segment_frames") c.segment_frames = v.get<int>();
            else if (key == "overlap") c.overlap = v.get<double>();
            else if (key == "norm") c.norm = segments::parse_norm_mode(v.get<std::string>());
            else if (key == "batch_size") c.train.batch_size = v.get<int>();
            else if (key == "initial_lr") c.train.initial_lr = v.get<double>();
            else if (key == "patience") c.train.patience = v.get<int>();
            else if (key == "lr_floor") c.train.lr_floor = v.get<double>();
            else if (key == "max_epochs") c.train.max_epochs = v.get<int>();
            else if (key == "restore_best") c.train.restore_best = v.get<bool>();
            else if (key == "splits") c.splits = v.get<int>();
            else if (key == "seeds") c.seeds = v.get<int>();
            else if (key == "folds") c.folds = v.get<int>();
            else if (key == "systems") c.systems = v.get<std::vector<std::string>>();
            else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
            else if (key == "jobs") c.jobs = v.get<int>();
            else if (key == "manifest") c.manifest = path_of(v);
            else if (key == "out") c.out = path_of(v);
            else throw ParseError("unknown configuration key '" + key + "'");
        } catch (const json::exception& e) {
            throw ParseError("configuration key '" + key + "': " + e.what());
        } catch (const InvalidArgument& e) {
            throw ParseError("configuration key '" + key + "': " + e.what());
        }
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("cannot open configuration file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    RunConfig c;
    try {
        apply_json(c, j, path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return c;
}

void validate(const RunConfig& c) {
    const auto& f = c.frontend;
    if (f.bands < 1) throw InvalidArgument("bands must be positive");
    if (!(f.f_lo > 0.0 && f.f_lo < f.f_hi)) throw InvalidArgument("need 0 < f_lo < f_hi");
    if (!(f.f_hi < 0.5 * c.working_rate)) throw InvalidArgument("f_hi must lie below the Nyquist frequency");
    if (!(f.frame_seconds > 0.0)) throw InvalidArgument("frame length must be positive");
    if (!(f.stft_frame_seconds > 0.0)) throw InvalidArgument("STFT frame length must be positive");
    if (f.filter_order < 1) throw InvalidArgument("filter order must be positive");
    if (c.working_rate < 1) throw InvalidArgument("working rate must be positive");
    if (c.segment_frames < 1) throw InvalidArgument("segment length must be positive");
    if (!(c.overlap >= 0.0 && c.overlap < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");
    if (c.systems.empty()) throw InvalidArgument("no systems selected");
    for (const auto& s : c.systems) (void)evaluation::find_system(s);
    validate(experiment_config(c));
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["bands"] = c.frontend.bands;
    j["f_lo"] = c.frontend.f_lo;
    j["f_hi"] = c.frontend.f_hi;
    j["frame_ms"] = c.frontend.frame_seconds * 1000.0;
    j["stft_frame_ms"] = c.frontend.stft_frame_seconds * 1000.0;
    j["filter_order"] = c.frontend.filter_order;
    j["working_rate"] = c.working_rate;
    j["segment_frames"] = c.segment_frames;
    j["overlap"] = c.overlap;
    j["norm"] = std::string(segments::norm_mode_name(c.norm));
    j["batch_size"] = c.train.batch_size;
    j["initial_lr"] = c.train.initial_lr;
    j["patience"] = c.train.patience;
    j["lr_floor"] = c.train.lr_floor;
    j["max_epochs"] = c.train.max_epochs;
    j["restore_best"] = c.train.restore_best;
    j["splits"] = c.splits;
    j["seeds"] = c.seeds;
    j["folds"] = c.folds;
    j["systems"] = c.systems;
    j["master_seed"] = c.master_seed;
    return j;
}

evaluation::ExperimentConfig experiment_config(const RunConfig& c) {
    evaluation::ExperimentConfig e;
    e.norm = c.norm;
    e.train = c.train;
    e.n_splits = c.splits;
    e.n_seeds = c.seeds;
    e.n_folds = c.folds;
    e.master_seed = c.master_seed;
    e.jobs = c.jobs;
    return e;
}

}  // namespace tefs::cli
