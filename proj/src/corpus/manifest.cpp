#include "tefs/corpus/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tefs/error.hpp"

namespace tefs::corpus {

namespace {

constexpr const char* kHeader = "speaker_id,audio_path,label,gender";

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

char gender_code(Gender g) { return g == Gender::F ? 'F' : 'M'; }

std::vector<Speaker> CorpusManifest::speakers() const {
    std::map<std::string, Speaker> by_id;
    for (const auto& e : entries) by_id.try_emplace(e.speaker_id, Speaker{e.speaker_id, e.label, e.gender});
    std::vector<Speaker> out;
    out.reserve(by_id.size());
    for (auto& [id, s] : by_id) out.push_back(s);
    return out;
}

std::vector<ManifestEntry> CorpusManifest::utterances(const std::string& speaker_id) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
        if (e.speaker_id == speaker_id) out.push_back(e);
    return out;
}

CorpusManifest load_manifest(const std::filesystem::path& path, int working_rate) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("cannot open manifest: " + path.string());
    const auto base = path.parent_path();

    CorpusManifest manifest;
    manifest.working_rate = working_rate;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, std::pair<int, Gender>> attributes;

    const auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (!have_header) {
            if (trim(line) != kHeader)
                throw ParseError(where() + "expected header '" + std::string(kHeader) + "'");
            have_header = true;
            continue;
        }
        const auto fields = split_row(line);
        if (fields.size() != 4) throw ParseError(where() + "expected 4 fields, got " + std::to_string(fields.size()));
        ManifestEntry e;
        e.speaker_id = fields[0];
        if (e.speaker_id.empty()) throw ParseError(where() + "empty speaker_id");
        if (fields[1].empty()) throw ParseError(where() + "empty audio_path");
        std::filesystem::path audio(fields[1]);
        e.audio_path = audio.is_absolute() ? audio : base / audio;
        if (fields[2] == "0") {
            e.label = 0;
        } else if (fields[2] == "1") {
            e.label = 1;
        } else {
            throw ParseError(where() + "label must be 0 or 1, got '" + fields[2] + "'");
        }
        if (fields[3] == "F") {
            e.gender = Gender::F;
        } else if (fields[3] == "M") {
            e.gender = Gender::M;
        } else {
            throw ParseError(where() + "gender must be F or M, got '" + fields[3] + "'");
        }
        if (!std::filesystem::is_regular_file(e.audio_path))
            throw MissingFileError(where() + "audio file does not exist: " + e.audio_path.string());
        if (!seen.emplace(e.speaker_id, e.audio_path.lexically_normal().string()).second)
            throw DuplicateIdError(where() + "duplicate entry for speaker '" + e.speaker_id + "' and file " +
                                   fields[1]);
        const auto [it, inserted] = attributes.try_emplace(e.speaker_id, e.label, e.gender);
        if (!inserted && (it->second.first != e.label || it->second.second != e.gender))
            throw DuplicateIdError(where() + "speaker '" + e.speaker_id +
                                   "' appears with conflicting label or gender");
        manifest.entries.push_back(std::move(e));
    }
    if (!have_header) throw ParseError(path.string() + ": empty manifest");
    if (manifest.entries.empty()) throw ParseError(path.string() + ": manifest has no entries");
    return manifest;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write manifest: " + path.string());
    out << kHeader << '\n';
    const auto base = path.parent_path();
    for (const auto& e : manifest.entries) {
        auto rel = e.audio_path.lexically_relative(base.empty() ? std::filesystem::path(".") : base);
        if (rel.empty() || rel.native().starts_with("..")) rel = e.audio_path;
        out << e.speaker_id << ',' << rel.generic_string() << ',' << e.label << ',' << gender_code(e.gender)
            << '\n';
    }
}

}  // namespace tefs::corpus
