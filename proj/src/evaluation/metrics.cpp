#include "tefs/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tefs/error.hpp"

namespace tefs::evaluation {

double soft_vote(std::span<const double> probabilities) {
    if (probabilities.empty()) throw InvalidArgument("soft vote over zero segments");
    double sum = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("segment probability outside [0, 1]");
        sum += p;
    }
    return sum / static_cast<double>(probabilities.size());
}

int predicted_class(double score) { return score > 0.5 ? 1 : 0; }

double auc(std::span<const SpeakerScore> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a].score < scores[b].score; });
    double rank_sum_pos = 0.0;
    long n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].score == scores[order[i]].score) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            if (scores[order[t]].label == 1) {
                rank_sum_pos += midrank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        i = j;
    }
    if (n_pos == 0 || n_neg == 0) throw InvalidArgument("AUC needs speakers of both classes");
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const SpeakerScore> scores) {
    if (scores.empty()) throw InvalidArgument("accuracy over zero speakers");
    long correct = 0;
    for (const auto& s : scores) correct += predicted_class(s.score) == s.label;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size()));
    return s;
}

}  // namespace tefs::evaluation
