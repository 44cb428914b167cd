#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tefs::corpus {

enum class Gender { F, M };

char gender_code(Gender g);

struct Speaker {
    std::string id;
    int label = 0;  // 0 = neurotypical, 1 = dysarthric
    Gender gender = Gender::F;
};

struct ManifestEntry {
    std::string speaker_id;
    std::filesystem::path audio_path;  // resolved against the manifest directory
    int label = 0;
    Gender gender = Gender::F;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    int working_rate = 16000;

    // One record per distinct speaker, sorted by id.
    [[nodiscard]] std::vector<Speaker> speakers() const;

    // Entries of one speaker in manifest order.
    [[nodiscard]] std::vector<ManifestEntry> utterances(const std::string& speaker_id) const;
};

// Parses `speaker_id,audio_path,label,gender` CSV. Relative audio paths are
// resolved against the manifest's directory. Throws ParseError on malformed
// content, MissingFileError for dangling audio paths, DuplicateIdError for a
// repeated (speaker, path) pair or a speaker whose label/gender disagree
// across rows.
CorpusManifest load_manifest(const std::filesystem::path& path, int working_rate = 16000);

// Writes the manifest with audio paths relative to `path`'s directory when
// possible.
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

}  // namespace tefs::corpus
