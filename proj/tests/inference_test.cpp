// tests/inference_test.cpp

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

#include "dsc/inference.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace dsc {
namespace {

TEST(BestPath, WorkedExample)
{
    auto f = oracle::worked_example();
    auto r = best_path(f);
    EXPECT_EQ(r.score, 4.0);
    ASSERT_EQ(r.path.segments.size(), 2u);
    EXPECT_EQ(r.path.segments[0], (segment { 0, 1, 0 }));
    EXPECT_EQ(r.path.segments[1], (segment { 1, 2, 1 }));
}

TEST(BestPath, SinglePathChain)
{
    fst f(3, { 0, 1, 3 }, { { 0, 1, 0, 1.25 }, { 1, 2, 1, -0.5 } }, { 0 }, { 2 });
    auto r = best_path(f);
    EXPECT_EQ(r.score, 0.75);
    EXPECT_EQ(r.edges, (std::vector<int> { 0, 1 }));
}

TEST(BestPath, AllZeroWeightsBreakTiesByLowestEdge)
{
    auto f = build_hypothesis_space(3, 2, 3);
    auto r = best_path(f);
    EXPECT_EQ(r.score, 0.0);
    auto b = oracle::best_path(f);
    EXPECT_EQ(r.edges, b.path);
    // Duration-1 edges come first, label 0 first: three single-frame 'a' segments.
    EXPECT_EQ(r.path.labels(), (std::vector<int> { 0, 0, 0 }));
    EXPECT_EQ(best_path(f).edges, r.edges);
}

TEST(BestPath, NoPathIsADistinctError)
{
    fst f(2, { 0, 1, 2 }, { { 0, 1, 0, 0 } }, { 0 }, { 2 });
    EXPECT_THROW(best_path(f), no_path_error);
}

TEST(BestPath, MatchesBruteForceIncludingTies)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = oracle::random_fst(rng);
        // Round weights to integers to create plenty of ties.
        if (trial % 2) {
            std::vector<double> w;
            for (auto const& e : f.edges()) {
                w.push_back(std::round(e.weight / 2));
            }
            f = f.with_weights(w);
        }
        auto r = best_path(f);
        auto b = oracle::best_path(f);
        EXPECT_EQ(r.score, b.score);
        EXPECT_EQ(r.edges, b.path);
    }
}

TEST(MaxMarginals, WorkedExample)
{
    auto mm = max_marginals(oracle::worked_example());
    EXPECT_EQ(mm.edge, (std::vector<double> { 4, 3, 3, 4, 2.5, 1 }));
    EXPECT_EQ(mm.vertex, (std::vector<double> { 4, 4, 4 }));
    EXPECT_EQ(mm.best, 4.0);
}

TEST(MaxMarginals, SinglePath)
{
    fst f(3, { 0, 1, 3 }, { { 0, 1, 0, 1.0 }, { 1, 2, 1, 2.0 } }, { 0 }, { 2 });
    auto mm = max_marginals(f);
    EXPECT_EQ(mm.edge, (std::vector<double> { 3, 3 }));
}

TEST(MaxMarginals, MatchesBruteForce)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = oracle::random_fst(rng);
        auto mm = max_marginals(f);
        auto ge = oracle::edge_max_marginals(f);
        auto gv = oracle::vertex_max_marginals(f);
        for (int e = 0; e < f.edge_count(); ++e) {
            EXPECT_NEAR(mm.edge[e], ge[e], 1e-9);
            EXPECT_LE(mm.edge[e], mm.best + 1e-9);
        }
        for (int v = 0; v < f.vertex_count(); ++v) {
            EXPECT_NEAR(mm.vertex[v], gv[v], 1e-9);
        }
        double me = *std::max_element(mm.edge.begin(), mm.edge.end());
        double mv = *std::max_element(mm.vertex.begin(), mm.vertex.end());
        EXPECT_NEAR(me, best_path(f).score, 1e-9);
        EXPECT_NEAR(mv, best_path(f).score, 1e-9);
    }
}

TEST(MaxMarginals, DanglingEdges)
{
    fst f(3, { 0, 1, 2, 3 }, { { 0, 1, 0, 1 }, { 1, 3, 0, 1 }, { 0, 2, 0, 1 } }, { 0 }, { 3 });
    EXPECT_EQ(max_marginals(f).edge[2], neg_inf);
    EXPECT_THROW(max_marginals(f, true), error);
}

TEST(MaxMarginals, ConstantShiftKeepsArgmaxOnFixedLengthLattices)
{
    // Every path in a D=1 space has T edges.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> wd(-5, 5);
    for (int trial = 0; trial < 50; ++trial) {
        auto f = build_hypothesis_space(5, 3, 1);
        std::vector<double> w(f.edge_count()), shifted(f.edge_count());
        for (int e = 0; e < f.edge_count(); ++e) {
            w[e] = wd(rng);
            shifted[e] = w[e] + 2.5;
        }
        EXPECT_EQ(best_path(f.with_weights(w)).edges, best_path(f.with_weights(shifted)).edges);
    }
}

TEST(EditDistance, Examples)
{
    std::vector<int> abc { 0, 1, 2 }, ab { 0, 1 }, acb { 0, 2, 1 };
    EXPECT_EQ(edit_distance(abc, abc).distance, 0);
    auto r = edit_distance(ab, acb);
    EXPECT_EQ(r.distance, 1);
    EXPECT_EQ(r.deletions, 1);
    EXPECT_EQ(r.insertions + r.substitutions, 0);
}

TEST(EditDistance, CountsAddUp)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> len(0, 8), sym(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<int> a(len(rng)), b(len(rng));
        for (auto& x : a) x = sym(rng);
        for (auto& x : b) x = sym(rng);
        auto r = edit_distance(a, b);
        EXPECT_EQ(r.distance, r.substitutions + r.insertions + r.deletions);
        EXPECT_EQ(static_cast<int>(a.size()) - r.insertions, static_cast<int>(b.size()) - r.deletions);
        EXPECT_EQ(r.distance, oracle::edit_distance(a, b));
    }
}

TEST(EditDistance, EmptyReferenceRateIsAnError)
{
    std::vector<int> a { 1 }, none;
    EXPECT_THROW(error_rate(a, none), error);
    EXPECT_DOUBLE_EQ(error_rate(a, a), 0.0);
}

TEST(OracleErrorRate, WorkedExample)
{
    auto f = oracle::worked_example();
    std::vector<int> ab { 0, 1 };
    auto r = oracle_error_rate(f, ab);
    EXPECT_EQ(r.rate, 0.0);
    EXPECT_EQ(r.path.labels(), ab);

    // Without (1,2,b) the best any path can do is one edit.
    std::vector<char> keep { 1, 1, 1, 0, 1, 1 };
    auto pruned = trimmed_subgraph(f, keep);
    EXPECT_EQ(oracle_error_rate(pruned, ab).rate, 0.5);
}

TEST(OracleErrorRate, AllSubstitutions)
{
    auto f = build_hypothesis_space(3, 1, 3);
    std::vector<int> bb { 1, 1 };
    EXPECT_EQ(oracle_error_rate(f, bb).rate, 1.0);
}

TEST(OracleErrorRate, MatchesBruteForceAndWitness)
{
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> len(1, 5), sym(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = oracle::random_fst(rng);
        std::vector<int> ref(len(rng));
        for (auto& x : ref) x = sym(rng);
        auto r = oracle_error_rate(f, ref);
        EXPECT_EQ(r.distance, oracle::oracle_distance(f, ref));
        EXPECT_EQ(edit_distance(oracle::labels_of(f, r.edges), ref).distance, r.distance);
        EXPECT_LE(r.rate, error_rate(best_path(f).path.labels(), ref));
    }
}

TEST(Density, EdgesPerReferenceLabel)
{
    auto f = oracle::worked_example();
    EXPECT_EQ(density(f, 2), 3.0);
    std::vector<char> keep { 1, 0, 0, 1, 0, 0 };
    EXPECT_EQ(density(trimmed_subgraph(f, keep), 2), 1.0);
    EXPECT_THROW(density(f, 0), error);
}

TEST(RealTimeFactor, Basics)
{
    EXPECT_EQ(real_time_factor(1.5, 3.0), 0.5);
    EXPECT_EQ(real_time_factor(0.0, 3.0), 0.0);
    EXPECT_THROW(real_time_factor(1.0, 0.0), error);

    // Corpus RTF is the duration-weighted mean of per-utterance RTFs.
    std::vector<std::pair<double, double>> utts { { 0.3, 3.0 }, { 1.0, 2.0 }, { 0.1, 4.0 } };
    rtf_accumulator acc;
    double weighted = 0, audio = 0;
    for (auto [p, a] : utts) {
        acc.add(p, a);
        weighted += real_time_factor(p, a) * a;
        audio += a;
    }
    EXPECT_NEAR(acc.value(), weighted / audio, 1e-15);
}

}
}
