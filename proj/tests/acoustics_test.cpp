// tests/acoustics_test.cpp

// Copyright 2026  The dsc Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dsc/acoustics.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace dsc {
namespace {

frame_matrix random_frames(std::mt19937_64& rng, int num_frames, int dim)
{
    std::normal_distribution<double> n(0, 1);
    std::vector<double> v(static_cast<std::size_t>(num_frames) * dim);
    for (auto& x : v) {
        x = n(rng);
    }
    return frame_matrix(num_frames, dim, std::move(v));
}

frame_classifier random_classifier(std::mt19937_64& rng, int labels, int dim, int radius)
{
    frame_classifier clf(numbered_labels(labels), dim, radius);
    std::normal_distribution<double> n(0, 0.5);
    for (auto& w : clf.weights()) {
        w = n(rng);
    }
    for (auto& b : clf.bias()) {
        b = n(rng);
    }
    return clf;
}

double row_logsumexp(std::span<double const> row)
{
    double s = 0;
    for (double x : row) {
        s += std::exp(x);
    }
    return std::log(s);
}

// Two labels split by the hyperplane x0 + x1 = 0, with a margin.
std::vector<labeled_frames> separable_corpus(std::mt19937_64& rng, int utterances, int num_frames)
{
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<labeled_frames> corpus;
    for (int i = 0; i < utterances; ++i) {
        std::vector<double> v;
        std::vector<int> gold;
        for (int r = 0; r < num_frames; ++r) {
            double a, b;
            do {
                a = u(rng);
                b = u(rng);
            } while (std::abs(a + b) < 0.1);
            v.push_back(a);
            v.push_back(b);
            gold.push_back(a + b > 0 ? 1 : 0);
        }
        corpus.push_back({ frame_matrix(num_frames, 2, std::move(v)), std::move(gold) });
    }
    return corpus;
}

// Noisy one-hot frames for a label sequence with runs of random length.
std::vector<labeled_frames> run_corpus(std::mt19937_64& rng, int utterances, int num_frames,
    int labels, double sigma)
{
    std::normal_distribution<double> n(0, sigma);
    std::uniform_int_distribution<int> lab(0, labels - 1), run(2, 8);
    std::vector<labeled_frames> corpus;
    for (int i = 0; i < utterances; ++i) {
        std::vector<int> gold;
        while (static_cast<int>(gold.size()) < num_frames) {
            int l = lab(rng), k = run(rng);
            for (int j = 0; j < k && static_cast<int>(gold.size()) < num_frames; ++j) {
                gold.push_back(l);
            }
        }
        std::vector<double> v(static_cast<std::size_t>(num_frames) * labels);
        for (int r = 0; r < num_frames; ++r) {
            for (int d = 0; d < labels; ++d) {
                v[r * labels + d] = (d == gold[r] ? 1.0 : 0.0) + n(rng);
            }
        }
        corpus.push_back({ frame_matrix(num_frames, labels, std::move(v)), std::move(gold) });
    }
    return corpus;
}

TEST(Classify, ZeroWeightsGiveUniformRows)
{
    std::mt19937_64 rng(1);
    frame_classifier clf(numbered_labels(4), 3, 1);
    auto post = classify(clf, random_frames(rng, 7, 3));
    for (double x : post.values()) {
        EXPECT_NEAR(x, std::log(0.25), 1e-15);
    }
}

TEST(Classify, LargeBiasSaturates)
{
    std::mt19937_64 rng(2);
    frame_classifier clf(numbered_labels(3), 2, 0);
    clf.bias()[0] = 50;
    auto post = classify(clf, random_frames(rng, 5, 2));
    for (int r = 0; r < 5; ++r) {
        EXPECT_GT(post.at(r, 0), -1e-20);
        EXPECT_LT(post.at(r, 1), -49);
        EXPECT_LT(post.at(r, 2), -49);
    }
}

TEST(Classify, RowsNormalize)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto clf = random_classifier(rng, 5, 4, 2);
        auto frames = random_frames(rng, 9, 4);
        for (auto parity : { subsample_parity::none, subsample_parity::even, subsample_parity::odd }) {
            auto post = subsample_forward(clf, frames, parity);
            for (int r = 0; r < post.num_frames(); ++r) {
                EXPECT_NEAR(row_logsumexp(post.row(r)), 0.0, 1e-6);
            }
            EXPECT_LE(post.max_normalization_error(), 1e-6);
        }
    }
}

TEST(Classify, DimensionMismatch)
{
    std::mt19937_64 rng(4);
    frame_classifier clf(numbered_labels(2), 3, 1);
    EXPECT_THROW(classify(clf, random_frames(rng, 4, 2)), error);
}

TEST(Classify, ContextUsesZeroPadding)
{
    // Radius 1: the window at row 0 is [pad, x0, x1].
    frame_classifier clf(numbered_labels(2), 1, 1);
    clf.weights()[0 * 2 + 1] = 1.0;  // previous frame -> label 1
    frame_matrix frames(2, 1, { 3.0, 5.0 });
    auto post = classify(clf, frames);
    EXPECT_NEAR(post.at(0, 0), post.at(0, 1), 1e-15);
    EXPECT_NEAR(post.at(1, 1) - post.at(1, 0), 3.0, 1e-12);
}

TEST(TrainFrameClassifier, SeparableDataIsLearned)
{
    std::mt19937_64 rng(5);
    auto train = separable_corpus(rng, 100, 20);
    auto held = separable_corpus(rng, 50, 20);
    frame_classifier clf(numbered_labels(2), 2, 0);
    train_frame_classifier(clf, train, { .epochs = 5, .step_size = 0.5 });
    EXPECT_LT(frame_error_rate(clf, held), 0.05);
}

TEST(TrainFrameClassifier, ZeroStepLeavesWeightsUnchanged)
{
    std::mt19937_64 rng(6);
    auto train = separable_corpus(rng, 10, 10);
    auto clf = random_classifier(rng, 2, 2, 1);
    auto before = clf.weights();
    auto bias = clf.bias();
    train_frame_classifier(clf, train, { .epochs = 1, .step_size = 0.0 });
    EXPECT_EQ(clf.weights(), before);
    EXPECT_EQ(clf.bias(), bias);
}

TEST(TrainFrameClassifier, LossDecreases)
{
    std::mt19937_64 rng(7);
    auto train = run_corpus(rng, 200, 40, 5, 0.8);
    frame_classifier clf(numbered_labels(5), 5, 1);
    auto stats = train_frame_classifier(clf, train, { .epochs = 5, .step_size = 0.05 });
    ASSERT_EQ(stats.size(), 5u);
    EXPECT_LT(stats.back().loss_per_frame, stats.front().loss_per_frame);
    for (std::size_t i = 1; i < stats.size(); ++i) {
        EXPECT_LE(stats[i].loss_per_frame, stats[i - 1].loss_per_frame * 1.01);
    }
}

TEST(TrainFrameClassifier, ErrorsOnBadInput)
{
    frame_classifier clf(numbered_labels(2), 1, 0);
    std::vector<labeled_frames> none;
    EXPECT_THROW(train_frame_classifier(clf, none, {}), error);
    std::vector<labeled_frames> bad { { frame_matrix(2, 1, { 0, 1 }), { 0, 2 } } };
    EXPECT_THROW(train_frame_classifier(clf, bad, {}), error);
}

TEST(TrainFrameClassifier, SubsamplingAlternatesParityStartingEven)
{
    std::mt19937_64 rng(8);
    auto train = run_corpus(rng, 5, 10, 3, 0.5);
    frame_classifier clf(numbered_labels(3), 3, 0);
    auto stats = train_frame_classifier(clf, train, { .epochs = 4, .step_size = 0.1, .subsample = true });
    EXPECT_EQ(stats[0].parity, subsample_parity::even);
    EXPECT_EQ(stats[1].parity, subsample_parity::odd);
    EXPECT_EQ(stats[2].parity, subsample_parity::even);
    EXPECT_EQ(stats[3].parity, subsample_parity::odd);
}

TEST(TrainFrameClassifier, SubsamplingIsFasterWithSimilarError)
{
    std::mt19937_64 rng(9);
    auto train = run_corpus(rng, 200, 100, 10, 0.7);
    auto held = run_corpus(rng, 50, 100, 10, 0.7);
    frame_classifier full(numbered_labels(10), 10, 2), half = full;
    auto sf = train_frame_classifier(full, train, { .epochs = 4, .step_size = 0.05 });
    auto sh = train_frame_classifier(half, train, { .epochs = 4, .step_size = 0.05, .subsample = true });
    auto fastest = [](auto const& s) {
        double m = 1e300;
        for (auto const& e : s) {
            m = std::min(m, e.seconds);
        }
        return m;
    };
    EXPECT_LT(fastest(sh), 0.7 * fastest(sf));
    EXPECT_LE(std::abs(frame_error_rate(half, held) - frame_error_rate(full, held)), 0.02);
}

TEST(SubsampleForward, EvenParityFourFrames)
{
    std::mt19937_64 rng(10);
    auto clf = random_classifier(rng, 3, 2, 1);
    auto frames = random_frames(rng, 4, 2);
    std::size_t evals = 0;
    auto post = subsample_forward(clf, frames, subsample_parity::even, &evals);
    auto full = classify(clf, frames);
    auto eq = [&](int a, int b) {
        return std::equal(post.row(a).begin(), post.row(a).end(), post.row(b).begin());
    };
    EXPECT_TRUE(eq(0, 1));
    EXPECT_TRUE(eq(2, 3));
    EXPECT_FALSE(eq(1, 2));
    // Rows 2 and 4 (1-based) are the evaluated ones.
    EXPECT_TRUE(std::equal(post.row(1).begin(), post.row(1).end(), full.row(1).begin()));
    EXPECT_TRUE(std::equal(post.row(3).begin(), post.row(3).end(), full.row(3).begin()));
    EXPECT_EQ(evals, 2u);
}

TEST(SubsampleForward, SingleFrameIsEvaluatedDirectly)
{
    std::mt19937_64 rng(11);
    auto clf = random_classifier(rng, 3, 2, 1);
    auto frames = random_frames(rng, 1, 2);
    std::size_t evals = 0;
    auto post = subsample_forward(clf, frames, subsample_parity::even, &evals);
    EXPECT_EQ(post, classify(clf, frames));
    EXPECT_EQ(evals, 1u);
}

TEST(SubsampleForward, OddParityFiveFrames)
{
    std::mt19937_64 rng(12);
    auto clf = random_classifier(rng, 3, 2, 1);
    auto frames = random_frames(rng, 5, 2);
    std::size_t evals = 0;
    auto post = subsample_forward(clf, frames, subsample_parity::odd, &evals);
    auto full = classify(clf, frames);
    auto same = [](auto a, auto b) { return std::equal(a.begin(), a.end(), b.begin()); };
    EXPECT_TRUE(same(post.row(1), post.row(0)));
    EXPECT_TRUE(same(post.row(3), post.row(2)));
    for (int r : { 0, 2, 4 }) {
        EXPECT_TRUE(same(post.row(r), full.row(r)));
    }
    EXPECT_EQ(evals, 3u);
}

TEST(SubsampleForward, EvaluationCountIsHalfRoundedUp)
{
    std::mt19937_64 rng(13);
    auto clf = random_classifier(rng, 2, 2, 0);
    for (int nt = 1; nt <= 12; ++nt) {
        auto frames = random_frames(rng, nt, 2);
        for (auto parity : { subsample_parity::even, subsample_parity::odd }) {
            std::size_t evals = 0;
            auto post = subsample_forward(clf, frames, parity, &evals);
            EXPECT_EQ(evals, static_cast<std::size_t>((nt + 1) / 2)) << nt;
            // Every row equals the row it was copied from, bit for bit.
            for (int r = 0; r < nt; ++r) {
                int s = source_row(nt, parity, r);
                EXPECT_TRUE(std::equal(post.row(r).begin(), post.row(r).end(), post.row(s).begin()));
            }
        }
    }
}

TEST(FrameLogLoss, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> lab(0, 2);
    for (auto parity : { subsample_parity::none, subsample_parity::even, subsample_parity::odd }) {
        for (int trial = 0; trial < 5; ++trial) {
            auto clf = random_classifier(rng, 3, 2, 1);
            auto frames = random_frames(rng, 5, 2);
            std::vector<int> gold(5);
            for (auto& g : gold) {
                g = lab(rng);
            }
            classifier_gradient grad;
            frame_log_loss(clf, frames, gold, parity, &grad);
            double h = 1e-5;
            auto check = [&](std::vector<double>& params, std::vector<double> const& analytic) {
                for (std::size_t i = 0; i < params.size(); ++i) {
                    double saved = params[i];
                    params[i] = saved + h;
                    double up = frame_log_loss(clf, frames, gold, parity);
                    params[i] = saved - h;
                    double down = frame_log_loss(clf, frames, gold, parity);
                    params[i] = saved;
                    double numeric = (up - down) / (2 * h);
                    double scale = std::max({ 1.0, std::abs(numeric), std::abs(analytic[i]) });
                    EXPECT_LT(std::abs(numeric - analytic[i]) / scale, 1e-4);
                }
            };
            check(clf.weights(), grad.weights);
            check(clf.bias(), grad.bias);
        }
    }
}

TEST(FrameLogLoss, SubsampledOutputCollectsTwoContributions)
{
    // T=2 even parity: row 1 is evaluated once and serves both frames, so
    // its bias gradient is the sum of two softmax-minus-gold terms.
    frame_classifier clf(numbered_labels(2), 1, 0);
    frame_matrix frames(2, 1, { 0.0, 0.0 });
    std::vector<int> gold { 0, 1 };
    classifier_gradient g;
    double loss = frame_log_loss(clf, frames, gold, subsample_parity::even, &g);
    EXPECT_NEAR(loss, 2 * std::log(2.0), 1e-15);
    EXPECT_NEAR(g.bias[0], (0.5 - 1) + 0.5, 1e-15);
    EXPECT_NEAR(g.bias[1], 0.5 + (0.5 - 1), 1e-15);
    gold = { 0, 0 };
    frame_log_loss(clf, frames, gold, subsample_parity::even, &g);
    EXPECT_NEAR(g.bias[0], -1.0, 1e-15);
}

TEST(PosteriorIo, UniformRoundTrip)
{
    double lh = std::log(0.5);
    posterior_matrix post(numbered_labels(2), 2, { lh, lh, lh, lh });
    std::stringstream ss;
    write_posteriors(ss, post);
    std::vector<std::string> warnings;
    EXPECT_EQ(read_posteriors(ss, &warnings), post);
    EXPECT_TRUE(warnings.empty());
}

TEST(PosteriorIo, RandomRoundTripIsBitExact)
{
    std::mt19937_64 rng(15);
    auto clf = random_classifier(rng, 4, 3, 1);
    auto post = classify(clf, random_frames(rng, 11, 3));
    std::stringstream ss;
    write_posteriors(ss, post);
    EXPECT_EQ(read_posteriors(ss), post);
}

TEST(PosteriorIo, UnnormalizedRowWarns)
{
    std::stringstream ss("#frames 1\n#labels 2 a b\n" + text::format_double(std::log(0.45)) + " "
        + text::format_double(std::log(0.45)) + "\n");
    std::vector<std::string> warnings;
    auto post = read_posteriors(ss, &warnings);
    EXPECT_EQ(post.num_frames(), 1);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("frame 1"), std::string::npos);
}

TEST(PosteriorIo, TruncatedFileNamesTheLine)
{
    std::stringstream ss("#frames 3\n#labels 2 a b\n-0.69314718055994529 -0.69314718055994529\n");
    try {
        read_posteriors(ss);
        FAIL();
    } catch (parse_error const& e) {
        EXPECT_EQ(e.line, 3);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
}

TEST(PosteriorIo, MalformedInputs)
{
    for (std::string bad : {
             "#labels 2 a b\n-1 -1\n",
             "#frames 1\n#labels 2 a b\n-1\n",
             "#frames 1\n#labels 2 a b\n-1 x\n",
             "#frames 1\n#labels 2 a b\n0.5 -1\n",
             "#frames 1\n#labels 3 a b\n-1 -1\n",
         }) {
        std::stringstream ss(bad);
        EXPECT_THROW(read_posteriors(ss), error) << bad;
    }
}

TEST(FrameIo, RoundTrip)
{
    std::mt19937_64 rng(16);
    auto frames = random_frames(rng, 6, 3);
    std::stringstream ss;
    write_frames(ss, frames);
    auto back = read_frames(ss);
    EXPECT_EQ(back.values(), frames.values());
    EXPECT_EQ(back.dim(), 3);
}

TEST(ClassifierIo, RoundTrip)
{
    std::mt19937_64 rng(17);
    auto clf = random_classifier(rng, 3, 2, 2);
    std::stringstream ss;
    write_classifier(ss, clf);
    auto back = read_classifier(ss);
    EXPECT_EQ(back.weights(), clf.weights());
    EXPECT_EQ(back.bias(), clf.bias());
    EXPECT_EQ(back.radius(), 2);
    auto frames = random_frames(rng, 4, 2);
    EXPECT_EQ(classify(back, frames), classify(clf, frames));
}

}
}
