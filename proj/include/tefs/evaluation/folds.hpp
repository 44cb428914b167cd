#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tefs/corpus/manifest.hpp"

namespace tefs::evaluation {

using corpus::Speaker;

struct FoldPlan {
    std::uint64_t split_seed = 0;
    std::vector<std::vector<std::string>> folds;  // speaker ids, sorted within each fold
};

// Speaker-independent stratified folds. Speakers are grouped by label and
// gender, each group shuffled with the split seed, then dealt round-robin
// with one fold pointer per label (female first for label 0, male first for
// label 1, so the gender mix also evens out across folds). Class counts per
// fold differ by at most one. Throws InvalidArgument when a class has fewer
// speakers than folds or ids repeat.
FoldPlan make_folds(std::span<const Speaker> speakers, std::uint64_t split_seed, int n_folds = 10);

struct DevSplit {
    std::vector<std::string> train;
    std::vector<std::string> dev;
};

// Draws `dev_size` development speakers from the training pool, apportioned
// over label and then gender by largest remainder. Throws InvalidArgument
// when the pool is not larger than dev_size.
DevSplit carve_dev(std::span<const Speaker> pool, int dev_size, std::uint64_t seed);

}  // namespace tefs::evaluation
