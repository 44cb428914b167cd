#include <gtest/gtest.h>

#include <cmath>

#include "tefs/error.hpp"
#include "tefs/random.hpp"
#include "tefs/segments/segments.hpp"

using namespace tefs;
using namespace tefs::segments;

namespace {

Representation ramp_rep(int bands, int frames, RepresentationKind kind = RepresentationKind::Envelope) {
    Representation r{kind, bands, frames, 0.006, 16000, {}};
    r.values.resize(static_cast<std::size_t>(bands) * frames);
    for (int k = 0; k < bands; ++k)
        for (int l = 0; l < frames; ++l) r.at(k, l) = k * 1000.0 + l + 0.25;
    return r;
}

Segment random_segment(Rng& rng, int bands, int frames, double mean, double sd) {
    Segment s;
    s.bands = bands;
    s.frames = frames;
    s.values.resize(static_cast<std::size_t>(bands) * frames);
    for (auto& v : s.values) v = static_cast<float>(rng.normal(mean, sd));
    return s;
}

}  // namespace

TEST(Segment, HopAndCount) {
    EXPECT_EQ(segment_hop(50, 0.5), 25);
    EXPECT_EQ(segment_hop(50, 0.0), 50);
    EXPECT_EQ(segment_hop(3, 0.9), 1);
    EXPECT_EQ(segment_count(166, 50, 0.5), 5);
    EXPECT_EQ(segment_count(50, 50, 0.5), 1);
    EXPECT_EQ(segment_count(49, 50, 0.5), 0);
}

TEST(Segment, CountFormulaHoldsEverywhere) {
    for (int B : {1, 7, 50}) {
        for (double ov : {0.0, 0.25, 0.5, 0.75}) {
            const int hop = std::max(1, static_cast<int>(std::lround(B * (1.0 - ov))));
            for (int L = B; L < B + 120; ++L) {
                auto segs = segment(ramp_rep(2, L), B, ov);
                ASSERT_EQ(static_cast<int>(segs.size()), (L - B) / hop + 1) << L << " " << B << " " << ov;
                for (std::size_t i = 0; i < segs.size(); ++i) ASSERT_EQ(segs[i].start, static_cast<int>(i) * hop);
            }
        }
    }
}

TEST(Segment, ValuesAndProvenance) {
    auto rep = ramp_rep(3, 166, RepresentationKind::FineStructure);
    auto segs = segment(rep, 50, 0.5, "spk1", 1, "utt7");
    ASSERT_EQ(segs.size(), 5u);
    for (const auto& s : segs) {
        EXPECT_EQ(s.kind, RepresentationKind::FineStructure);
        EXPECT_EQ(s.bands, 3);
        EXPECT_EQ(s.frames, 50);
        EXPECT_EQ(s.speaker_id, "spk1");
        EXPECT_EQ(s.label, 1);
        EXPECT_EQ(s.utterance, "utt7");
        for (int k = 0; k < 3; ++k)
            for (int b = 0; b < 50; ++b) EXPECT_EQ(s.at(k, b), static_cast<float>(rep.at(k, s.start + b)));
    }
}

TEST(Segment, AdjacentSegmentsShareOverlap) {
    auto rep = ramp_rep(4, 300);
    auto segs = segment(rep, 50, 0.5);
    for (std::size_t i = 0; i + 1 < segs.size(); ++i)
        for (int k = 0; k < 4; ++k)
            for (int b = 0; b < 25; ++b) EXPECT_EQ(segs[i].at(k, b + 25), segs[i + 1].at(k, b));
}

TEST(Segment, Errors) {
    try {
        segment(ramp_rep(2, 49), 50, 0.5, "s", 0, "short-utt");
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("short-utt"), std::string::npos);
    }
    EXPECT_THROW(segment(ramp_rep(2, 100), 50, 1.0), InvalidArgument);
    EXPECT_THROW(segment(ramp_rep(2, 100), 50, -0.1), InvalidArgument);
    EXPECT_THROW(segment(ramp_rep(2, 100), 0, 0.5), InvalidArgument);
}

TEST(Norm, ConstantInputFloorsStd) {
    Segment s{RepresentationKind::Envelope, 2, 3, std::vector<float>(6, 4.0f)};
    std::vector<Segment> train{s, s};
    auto st = fit_norm(train);
    ASSERT_EQ(st.mean.size(), 1u);
    EXPECT_DOUBLE_EQ(st.mean[0], 4.0);
    EXPECT_DOUBLE_EQ(st.std[0], 1e-8);
}

TEST(Norm, SamplingOracle) {
    Rng rng(42);
    std::vector<Segment> train;
    for (int i = 0; i < 200; ++i) train.push_back(random_segment(rng, 32, 50, 3.0, 2.0));
    auto st = fit_norm(train);
    EXPECT_NEAR(st.mean[0], 3.0, 0.05);
    EXPECT_NEAR(st.std[0], 2.0, 0.05);
}

TEST(Norm, MatchesDirectPopulationStatistics) {
    Rng rng(5);
    std::vector<Segment> train;
    for (int i = 0; i < 7; ++i) train.push_back(random_segment(rng, 4, 6, -1.0, 0.5));
    long double sum = 0, n = 0;
    for (auto& s : train)
        for (float v : s.values) sum += v, n += 1;
    const double mean = static_cast<double>(sum / n);
    long double ss = 0;
    for (auto& s : train)
        for (float v : s.values) ss += (v - mean) * (v - mean);
    auto st = fit_norm(train);
    EXPECT_NEAR(st.mean[0], mean, 1e-12);
    EXPECT_NEAR(st.std[0], std::sqrt(static_cast<double>(ss / n)), 1e-12);

    auto pb = fit_norm(train, NormMode::PerBand);
    ASSERT_EQ(pb.mean.size(), 4u);
    for (int k = 0; k < 4; ++k) {
        double m = 0;
        for (auto& s : train)
            for (int b = 0; b < 6; ++b) m += s.at(k, b);
        m /= 42.0;
        double v = 0;
        for (auto& s : train)
            for (int b = 0; b < 6; ++b) v += (s.at(k, b) - m) * (s.at(k, b) - m);
        EXPECT_NEAR(pb.mean[k], m, 1e-12);
        EXPECT_NEAR(pb.std[k], std::sqrt(v / 42.0), 1e-12);
    }
}

TEST(Norm, RoundTripIsStandardized) {
    Rng rng(8);
    std::vector<Segment> train;
    for (int i = 0; i < 20; ++i) train.push_back(random_segment(rng, 8, 10, 1.5, 3.0));
    auto st = fit_norm(train);
    double sum = 0, ss = 0, n = 0;
    for (auto& s : train) {
        auto z = normalize(st, s);
        for (float v : z.values) sum += v, ss += static_cast<double>(v) * v, n += 1;
    }
    const double m = sum / n;
    EXPECT_LT(std::abs(m), 1e-6);
    EXPECT_NEAR(std::sqrt(ss / n - m * m), 1.0, 1e-6);
}

TEST(Norm, PointExamples) {
    NormStats st{NormMode::Global, RepresentationKind::Envelope, {2.0}, {0.5}};
    Segment s{RepresentationKind::Envelope, 1, 3, {2.0f, 2.5f, 1.0f}};
    auto once = normalize(st, s);
    EXPECT_EQ(once.values, (std::vector<float>{0.0f, 1.0f, -2.0f}));
    auto twice = normalize(st, once);
    // applied again: (z - 2) / 0.5
    EXPECT_EQ(twice.values, (std::vector<float>{-4.0f, -2.0f, -8.0f}));
    EXPECT_NE(twice.values, once.values);
}

TEST(Norm, PerBandValues) {
    NormStats st{NormMode::PerBand, RepresentationKind::Envelope, {0.0, 10.0}, {1.0, 2.0}};
    std::vector<float> v{1, 2, 10, 14};
    normalize_values(st, v, 2, 2);
    EXPECT_EQ(v, (std::vector<float>{1, 2, 0, 2}));
    std::vector<float> three(6, 0.0f);
    EXPECT_THROW(normalize_values(st, three, 3, 2), InvalidArgument);
}

TEST(Norm, KindMismatchAndEmpty) {
    NormStats st{NormMode::Global, RepresentationKind::Envelope, {0.0}, {1.0}};
    Segment s{RepresentationKind::FineStructure, 1, 1, {1.0f}};
    EXPECT_THROW(normalize(st, s), InvalidArgument);
    EXPECT_THROW(fit_norm(std::span<const Segment>{}), InvalidArgument);
    std::vector<Segment> mixed{Segment{RepresentationKind::Envelope, 1, 1, {1.0f}}, s};
    EXPECT_THROW(fit_norm(mixed), InvalidArgument);
}

TEST(Norm, TestDataDoesNotLeakIntoStats) {
    Rng rng(13);
    std::vector<Segment> train, test;
    for (int i = 0; i < 5; ++i) train.push_back(random_segment(rng, 4, 5, 0.0, 1.0));
    for (int i = 0; i < 3; ++i) test.push_back(random_segment(rng, 4, 5, 0.0, 1.0));
    auto before = fit_norm(train);
    for (auto& t : test)
        for (auto& v : t.values) v += 1000.0f;
    auto after = fit_norm(train);
    EXPECT_EQ(before.mean, after.mean);
    EXPECT_EQ(before.std, after.std);
}

TEST(Norm, PointerOverloadAgrees) {
    Rng rng(2);
    std::vector<Segment> train;
    for (int i = 0; i < 4; ++i) train.push_back(random_segment(rng, 3, 4, 0.0, 1.0));
    std::vector<const Segment*> ptrs;
    for (auto& s : train) ptrs.push_back(&s);
    auto a = fit_norm(train);
    auto b = fit_norm(std::span<const Segment* const>(ptrs));
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std, b.std);
}

TEST(Norm, ModeNames) {
    EXPECT_EQ(parse_norm_mode("global"), NormMode::Global);
    EXPECT_EQ(parse_norm_mode(norm_mode_name(NormMode::PerBand)), NormMode::PerBand);
    EXPECT_THROW(parse_norm_mode("segment"), InvalidArgument);
}
