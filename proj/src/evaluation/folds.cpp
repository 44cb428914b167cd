#include "tefs/evaluation/folds.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "tefs/error.hpp"
#include "tefs/random.hpp"

namespace tefs::evaluation {

namespace {

std::vector<Speaker> sorted_unique(std::span<const Speaker> speakers) {
    std::vector<Speaker> s(speakers.begin(), speakers.end());
    std::sort(s.begin(), s.end(), [](const Speaker& a, const Speaker& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].id == s[i - 1].id) throw InvalidArgument("speaker '" + s[i].id + "' listed twice");
    for (const auto& sp : s)
        if (sp.label != 0 && sp.label != 1) throw InvalidArgument("speaker '" + sp.id + "' has an invalid label");
    return s;
}

// [label][gender] -> ids, in sorted order
std::array<std::array<std::vector<std::string>, 2>, 2> strata(const std::vector<Speaker>& s) {
    std::array<std::array<std::vector<std::string>, 2>, 2> out;
    for (const auto& sp : s) out[sp.label][sp.gender == corpus::Gender::M ? 1 : 0].push_back(sp.id);
    return out;
}

// Largest-remainder apportionment of `total` over `weights`; ties go to the
// lower index.
std::vector<int> apportion(int total, const std::vector<int>& weights) {
    long sum = 0;
    for (int w : weights) sum += w;
    std::vector<int> out(weights.size(), 0);
    if (sum == 0) return out;
    std::vector<std::pair<long, std::size_t>> rem;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const long num = static_cast<long>(total) * weights[i];
        out[i] = static_cast<int>(num / sum);
        assigned += out[i];
        rem.emplace_back(num % sum, i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < total; ++j) {
        const auto i = rem[j % rem.size()].second;
        if (out[i] < weights[i]) {
            ++out[i];
            ++assigned;
        }
    }
    return out;
}

}  // namespace

FoldPlan make_folds(std::span<const Speaker> speakers, std::uint64_t split_seed, int n_folds) {
    if (n_folds < 2) throw InvalidArgument("need at least two folds");
    const auto sorted = sorted_unique(speakers);
    auto groups = strata(sorted);
    for (int label = 0; label < 2; ++label) {
        const auto n = groups[label][0].size() + groups[label][1].size();
        if (n < static_cast<std::size_t>(n_folds))
            throw InvalidArgument("class " + std::to_string(label) + " has " + std::to_string(n) +
                                  " speakers, fewer than the " + std::to_string(n_folds) + " folds");
    }
    FoldPlan plan;
    plan.split_seed = split_seed;
    plan.folds.resize(static_cast<std::size_t>(n_folds));
    for (int label = 0; label < 2; ++label) {
        std::size_t fold = 0;
        const std::array<int, 2> gender_order = label == 0 ? std::array<int, 2>{0, 1} : std::array<int, 2>{1, 0};
        for (int g : gender_order) {
            auto& ids = groups[label][g];
            Rng rng(derive_seed(split_seed, "fold-stratum", {static_cast<std::uint64_t>(label), static_cast<std::uint64_t>(g)}));
            rng.shuffle(std::span<std::string>(ids));
            for (const auto& id : ids) {
                plan.folds[fold].push_back(id);
                fold = (fold + 1) % plan.folds.size();
            }
        }
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

DevSplit carve_dev(std::span<const Speaker> pool, int dev_size, std::uint64_t seed) {
    const auto sorted = sorted_unique(pool);
    if (dev_size < 1) throw InvalidArgument("development set size must be positive");
    if (static_cast<std::size_t>(dev_size) >= sorted.size())
        throw InvalidArgument("training pool of " + std::to_string(sorted.size()) +
                              " speakers is too small for a development set of " + std::to_string(dev_size));
    auto groups = strata(sorted);
    const std::vector<int> per_label = apportion(
        dev_size, {static_cast<int>(groups[0][0].size() + groups[0][1].size()),
                   static_cast<int>(groups[1][0].size() + groups[1][1].size())});
    std::set<std::string> dev;
    for (int label = 0; label < 2; ++label) {
        const auto per_gender = apportion(per_label[static_cast<std::size_t>(label)],
                                          {static_cast<int>(groups[label][0].size()),
                                           static_cast<int>(groups[label][1].size())});
        for (int g = 0; g < 2; ++g) {
            auto& ids = groups[label][g];
            Rng rng(derive_seed(seed, "dev-stratum", {static_cast<std::uint64_t>(label), static_cast<std::uint64_t>(g)}));
            rng.shuffle(std::span<std::string>(ids));
            for (int i = 0; i < per_gender[static_cast<std::size_t>(g)]; ++i) dev.insert(ids[static_cast<std::size_t>(i)]);
        }
    }
    DevSplit out;
    for (const auto& sp : sorted) (dev.count(sp.id) ? out.dev : out.train).push_back(sp.id);
    return out;
}

}  // namespace tefs::evaluation
