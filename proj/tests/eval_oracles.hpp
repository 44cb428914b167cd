#pragma once

// Independent checks for the evaluation module, shared by the unit tests and
// the acceptance runner.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tefs/corpus/manifest.hpp"
#include "tefs/evaluation/folds.hpp"
#include "tefs/evaluation/metrics.hpp"

namespace oracle {

// Fraction of (positive, negative) pairs ranked correctly, ties worth half.
inline double pairwise_auc(const std::vector<tefs::evaluation::SpeakerScore>& s) {
    double wins = 0.0;
    long pairs = 0;
    for (const auto& p : s) {
        if (p.label != 1) continue;
        for (const auto& n : s) {
            if (n.label != 0) continue;
            ++pairs;
            if (p.score > n.score)
                wins += 1.0;
            else if (p.score == n.score)
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// n speakers, half per class, genders alternating within each class.
inline std::vector<tefs::corpus::Speaker> balanced_speakers(int n, const std::string& prefix = "spk") {
    std::vector<tefs::corpus::Speaker> out;
    for (int i = 0; i < n; ++i) {
        tefs::corpus::Speaker s;
        char id[32];
        std::snprintf(id, sizeof id, "%s%03d", prefix.c_str(), i);
        s.id = id;
        s.label = i < n / 2 ? 0 : 1;
        s.gender = ((i % (n / 2)) % 2 == 0) ? tefs::corpus::Gender::F : tefs::corpus::Gender::M;
        out.push_back(s);
    }
    return out;
}

// Returns an empty string when the (test, train, dev) assignment of one fold
// is clean, otherwise a description of the first problem found.
struct FoldAudit {
    std::vector<std::string> test, train, dev;
};

inline std::string audit_plan(const std::vector<tefs::corpus::Speaker>& speakers,
                              const std::vector<std::vector<std::string>>& folds) {
    std::map<std::string, const tefs::corpus::Speaker*> by_id;
    for (const auto& s : speakers) by_id[s.id] = &s;
    std::map<std::string, int> seen;
    for (const auto& f : folds)
        for (const auto& id : f) {
            if (!by_id.count(id)) return "unknown speaker " + id;
            ++seen[id];
        }
    for (const auto& s : speakers)
        if (seen[s.id] != 1) return "speaker " + s.id + " appears " + std::to_string(seen[s.id]) + " times";

    // class counts and, within each class, gender counts may differ by at
    // most one between folds
    std::vector<std::array<int, 4>> counts(folds.size(), std::array<int, 4>{});
    for (std::size_t f = 0; f < folds.size(); ++f)
        for (const auto& id : folds[f]) {
            const auto* s = by_id[id];
            ++counts[f][2 * s->label + (s->gender == tefs::corpus::Gender::M)];
        }
    auto spread = [&](auto get) {
        int lo = 1 << 30, hi = -1;
        for (const auto& c : counts) {
            lo = std::min(lo, get(c));
            hi = std::max(hi, get(c));
        }
        return hi - lo;
    };
    for (int c = 0; c < 2; ++c) {
        if (spread([c](const auto& v) { return v[2 * c] + v[2 * c + 1]; }) > 1)
            return "class " + std::to_string(c) + " unevenly spread over folds";
        for (int g = 0; g < 2; ++g)
            if (spread([c, g](const auto& v) { return v[2 * c + g]; }) > 1)
                return "gender unevenly spread within class " + std::to_string(c);
    }
    return {};
}

inline std::string audit_fold(const std::vector<tefs::corpus::Speaker>& speakers, const FoldAudit& a) {
    std::map<std::string, const tefs::corpus::Speaker*> by_id;
    for (const auto& s : speakers) by_id[s.id] = &s;
    std::set<std::string> t(a.test.begin(), a.test.end()), tr(a.train.begin(), a.train.end()),
        d(a.dev.begin(), a.dev.end());
    if (t.size() != a.test.size() || tr.size() != a.train.size() || d.size() != a.dev.size())
        return "duplicate ids within a set";
    for (const auto& id : d)
        if (t.count(id) || tr.count(id)) return "dev speaker " + id + " also in test or train";
    for (const auto& id : tr)
        if (t.count(id)) return "train speaker " + id + " also in test";
    if (t.size() + tr.size() + d.size() != speakers.size()) return "sets do not cover the corpus";
    if (d.size() != t.size()) return "dev size differs from test size";
    int dcls[2] = {0, 0}, tcls[2] = {0, 0};
    for (const auto& id : d) {
        if (!by_id.count(id)) return "unknown speaker " + id;
        ++dcls[by_id[id]->label];
    }
    for (const auto& id : t) ++tcls[by_id[id]->label];
    if (std::abs(dcls[0] - dcls[1]) > 1) return "dev class imbalance";
    if (std::abs(tcls[0] - tcls[1]) > 1) return "test class imbalance";
    return {};
}

}  // namespace oracle
