// tests/cascade_test.cpp

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

#include "dsc/cascade.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace dsc {
namespace {

pipeline::prepared const& small_corpus()
{
    static pipeline::prepared p = [] {
        pipeline::setup s;
        s.spec.num_labels = 4;
        s.spec.min_duration = 2;
        s.spec.max_duration = 5;
        s.spec.sigma = 0.6;
        s.spec.seed = 5;
        s.spec.transitions = random_bigram(4, 6, 5);
        s.train_utterances = 40;
        s.dev_utterances = 10;
        return pipeline::prepare(s);
    }();
    return p;
}

cascade_config two_pass(double alpha)
{
    std::stringstream ss("passes = 2\nmax_duration = 6\n"
                         "pass1.templates = label_posterior_sum bias\npass1.epochs = 2\n"
                         "pass1.step_size = 0.1\npass1.prune = edge\npass1.alpha = "
        + std::to_string(alpha) + "\n"
                                  "pass2.templates = posterior_average:lex length_indicator:lex bias:lex lattice_score\n"
                                  "pass2.epochs = 2\n");
    return read_cascade_config(ss);
}

std::set<std::tuple<int, int, int>> segments_of(utterance const& u, int max_duration)
{
    auto f = hypothesis_of(u, max_duration);
    auto v = segment_set(f);
    return { v.begin(), v.end() };
}

TEST(CascadeConfig, DefaultRecipe)
{
    auto c = default_cascade_config();
    ASSERT_EQ(c.passes.size(), 3u);
    EXPECT_EQ(c.passes[0].templates, "label_posterior_sum bias");
    EXPECT_EQ(c.passes[0].prune->method, prune_method::edge);
    EXPECT_EQ(c.passes[0].prune->alpha, 0.85);
    EXPECT_EQ(c.passes[1].prune->alpha, 0.3);
    EXPECT_FALSE(c.passes[2].prune);
    EXPECT_EQ(c.passes[0].train.step_size, 1.0);
    EXPECT_EQ(c.passes[1].train.step_size, 0.1);
    EXPECT_EQ(c.passes[2].train.step_size, 0.01);
    EXPECT_NO_THROW(c.check());
}

TEST(CascadeConfig, FileRoundTrip)
{
    auto c = two_pass(0.7);
    c.subsample = subsample_parity::even;
    std::stringstream ss;
    write_cascade_config(ss, c);
    auto back = read_cascade_config(ss);
    ASSERT_EQ(back.passes.size(), 2u);
    EXPECT_EQ(back.passes[0].prune->alpha, 0.7);
    EXPECT_EQ(back.passes[1].templates, c.passes[1].templates);
    EXPECT_EQ(back.subsample, subsample_parity::even);
    EXPECT_EQ(back.max_duration, 6);
    EXPECT_FALSE(back.passes[1].prune);
}

TEST(CascadeConfig, Errors)
{
    for (std::string bad : { "passes = 0\n", "nonsense = 1\n", "pass1.alpha = 2\n", "pass1.prune = cut\n",
             "pass1.early_stopping = maybe\n", "just a line\n" }) {
        std::stringstream ss(bad);
        EXPECT_THROW(read_cascade_config(ss), error) << bad;
    }
    std::stringstream one("passes = 1\n");
    auto c = read_cascade_config(one);
    EXPECT_EQ(c.passes.size(), 1u);
    EXPECT_FALSE(c.passes[0].prune);
}

TEST(Cascade, SinglePassIsPlainDecoding)
{
    auto const& p = small_corpus();
    std::stringstream ss("passes = 1\nmax_duration = 6\npass1.templates = label_posterior_sum bias\n"
                         "pass1.epochs = 2\npass1.step_size = 0.1\n");
    auto cfg = read_cascade_config(ss);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    ASSERT_EQ(tr.models.size(), 1u);
    for (auto const& u : p.dev) {
        auto r = run_cascade_decode(tr.models, cfg, u.post);
        auto dense = build_hypothesis_space(u.post.num_frames(), 4, 6);
        featurizer fz(tr.models[0].templates, u.post);
        auto g = build_decoding_graph(dense, fz, tr.models[0].theta);
        EXPECT_EQ(r.path, best_path(g.graph).path);
        EXPECT_FALSE(r.fell_back);
        EXPECT_EQ(r.pass_edges.size(), 1u);
    }
}

TEST(Cascade, LatticesNestAndOracleErrorNeverImproves)
{
    auto const& p = small_corpus();
    std::stringstream ss("passes = 3\nmax_duration = 6\n"
                         "pass1.templates = label_posterior_sum bias\npass1.epochs = 2\npass1.step_size = 0.1\n"
                         "pass1.prune = edge\npass1.alpha = 0.5\n"
                         "pass2.templates = posterior_average:lex length_indicator:lex bias:lex lattice_score\n"
                         "pass2.epochs = 2\npass2.prune = vertex\npass2.alpha = 0.3\n"
                         "pass3.templates = lattice_score bigram_lm length_indicator:lex bias\npass3.epochs = 2\n");
    auto cfg = read_cascade_config(ss);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    ASSERT_EQ(tr.train_spaces.size(), 3u);
    ASSERT_TRUE(tr.lm);
    for (std::size_t k = 0; k < p.dev.size(); ++k) {
        double prev_oracle = 0;
        std::set<std::tuple<int, int, int>> prev;
        for (std::size_t i = 0; i < 3; ++i) {
            auto const& u = tr.dev_spaces[i][k];
            auto segs = segments_of(u, 6);
            if (i > 0) {
                EXPECT_TRUE(std::includes(prev.begin(), prev.end(), segs.begin(), segs.end()));
            }
            auto f = hypothesis_of(u, 6);
            double o = oracle_error_rate(f, u.gold.labels()).rate;
            EXPECT_GE(o, prev_oracle);
            prev_oracle = o;
            prev = std::move(segs);
        }
    }
}

TEST(Cascade, StampedLatticeScoresArePassOneScores)
{
    auto const& p = small_corpus();
    auto cfg = two_pass(0.5);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    auto const& m = tr.models[0];
    for (auto const& u : tr.dev_spaces[1]) {
        featurizer fz(m.templates, u.post);
        for (auto const& e : u.lattice->edges()) {
            segment seg { u.lattice->time(e.tail), u.lattice->time(e.head), e.label };
            segment_aux aux { 0.0, std::nullopt, false };
            EXPECT_EQ(e.weight, fz.score(m.theta, seg, aux));
        }
    }
}

TEST(Cascade, DecodingSurvivesLatticeRoundTrip)
{
    auto const& p = small_corpus();
    auto cfg = two_pass(0.5);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    for (auto const& u : p.dev) {
        auto dense = build_hypothesis_space(u.post.num_frames(), 4, 6);
        featurizer fz1(tr.models[0].templates, u.post);
        auto g = build_decoding_graph(dense, fz1, tr.models[0].theta);
        auto lattice = prune_to_lattice(dense, g, *cfg.passes[0].prune);
        std::stringstream ss;
        write_lattice(ss, lattice, p.labels);
        label_set labels = p.labels;
        auto back = read_lattice(ss, labels);

        featurizer fz2(tr.models[1].templates, u.post);
        auto a = decode_graph(build_decoding_graph(lattice, fz2, tr.models[1].theta));
        auto b = decode_graph(build_decoding_graph(back, fz2, tr.models[1].theta));
        EXPECT_EQ(a.path, b.path);
        EXPECT_EQ(a.best.score, b.best.score);
        EXPECT_EQ(run_cascade_decode(tr.models, cfg, u.post).path, a.path);
    }
}

TEST(Cascade, FullAlphaReproducesPassOne)
{
    // alpha = 1 keeps exactly the pass-one optima. A two-feature model ties
    // every way of splitting a run of one label into the same number of
    // segments, so the output is one of pass one's best paths, not
    // necessarily the one its tie-break picks.
    auto const& p = small_corpus();
    auto cfg = two_pass(1.0);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    auto single = cfg;
    single.passes.resize(1);
    single.passes[0].prune.reset();
    std::vector<model> first { tr.models[0] };
    auto pass_one_score = [&](utterance const& u, segment_path const& path) {
        featurizer fz(tr.models[0].templates, u.post);
        double s = 0;
        for (auto const& seg : path.segments) {
            s += fz.score(tr.models[0].theta, seg, {});
        }
        return s;
    };
    for (auto const& u : p.dev) {
        auto r = run_cascade_decode(tr.models, cfg, u.post).path;
        auto q = run_cascade_decode(first, single, u.post).path;
        EXPECT_EQ(r.labels(), q.labels());
        EXPECT_NEAR(pass_one_score(u, r), pass_one_score(u, q), 1e-9);
    }
}

TEST(Cascade, EmptiedLatticeFallsBackToThePruningPass)
{
    auto const& p = small_corpus();
    std::stringstream ss("passes = 2\nmax_duration = 6\npass1.templates = bias\npass1.prune = beam\n"
                         "pass1.alpha = 0\npass2.templates = bias lattice_score\n");
    auto cfg = read_cascade_config(ss);
    std::vector<model> models { model(cfg.templates(cfg.passes[0], 4), p.labels),
        model(cfg.templates(cfg.passes[1], 4), p.labels) };
    // All-zero weights: every branch ties and beam pruning at alpha 0 drops all.
    auto const& u = p.dev.front();
    auto r = run_cascade_decode(models, cfg, u.post);
    EXPECT_TRUE(r.fell_back);
    EXPECT_TRUE(r.path.covers(u.post.num_frames()));
    EXPECT_EQ(r.pass_seconds.size(), 1u);
}

TEST(Cascade, TrainingAbortsWhenTooManyLatticesEmpty)
{
    auto const& p = small_corpus();
    std::stringstream ss("passes = 2\nmax_duration = 6\npass1.templates = bias\npass1.prune = beam\n"
                         "pass1.alpha = 0\npass1.step_size = 0\npass2.templates = bias lattice_score\n");
    auto cfg = read_cascade_config(ss);
    EXPECT_THROW(run_cascade_train(cfg, p.labels, p.train, p.dev), error);
}

TEST(Cascade, TimingsAddUpAndPruningSavesFeaturizations)
{
    auto const& p = small_corpus();
    auto cfg = two_pass(0.5);
    auto tr = run_cascade_train(cfg, p.labels, p.train, p.dev);
    timing_accumulator acc;
    for (auto const& u : p.raw_dev) {
        auto r = run_cascade_decode(tr.models, cfg, p.classifier, u.frames);
        double parts = r.feed_forward_seconds;
        for (double s : r.pass_seconds) {
            parts += s;
        }
        EXPECT_LE(parts, r.total_seconds);
        EXPECT_EQ(r.pass_edges.size(), 2u);
        EXPECT_LT(r.pass_edges[1], r.pass_edges[0]);
        acc.add(r);
    }
    auto row = acc.row("cascade");
    EXPECT_EQ(row.passes.size(), 2u);
    EXPECT_GE(row.total_measured, row.total_overall());
    std::stringstream table;
    write_timing_table(table, { row }, 2);
    std::string header;
    std::getline(table, header);
    EXPECT_EQ(header, "system\t1st pass\t2nd pass\ttotal decoding\tfeeding forward\ttotal overall");
}

}
}
