#pragma once

#include <span>
#include <string>
#include <vector>

namespace tefs::evaluation {

struct SpeakerScore {
    std::string speaker_id;
    double score = 0.0;  // mean dysarthric-class probability
    int label = 0;
};

// Arithmetic mean. Throws InvalidArgument for an empty list or values
// outside [0, 1].
double soft_vote(std::span<const double> probabilities);

// Class 1 iff score > 0.5.
int predicted_class(double score);

// Mann-Whitney statistic with midranks for ties. Throws InvalidArgument
// unless both classes are present.
double auc(std::span<const SpeakerScore> scores);

// Fraction of speakers whose thresholded score matches the label.
double accuracy(std::span<const SpeakerScore> scores);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population
    int count = 0;
};

Summary summarize(std::span<const double> values);

}  // namespace tefs::evaluation
