// dsc/cascade.hpp

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

#pragma once

#include "dsc/acoustics.hpp"
#include "dsc/corpus.hpp"
#include "dsc/features.hpp"
#include "dsc/inference.hpp"
#include "dsc/lattice.hpp"
#include "dsc/pruning.hpp"
#include "dsc/training.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dsc {

    struct pass_config {
        std::string templates;
        train_config train;
        std::optional<prune_params> prune;   // absent for the final pass
    };

    struct cascade_config {
        std::vector<pass_config> passes;
        int max_duration = 30;
        int num_samples = 3;
        double frame_shift = 0.01;           // seconds per frame
        subsample_parity subsample = subsample_parity::none;
        double max_empty_fraction = 0.05;

        void check() const
        {
            if (passes.empty()) {
                throw error("cascade needs at least one pass");
            }
            for (std::size_t i = 0; i + 1 < passes.size(); ++i) {
                if (!passes[i].prune) {
                    throw error("pass " + std::to_string(i + 1) + " needs pruning parameters");
                }
                passes[i].prune->check();
            }
            for (auto const& p : passes) {
                p.train.check();
            }
            if (max_duration < 1 || !(frame_shift > 0)) {
                throw error("invalid cascade configuration");
            }
        }

        bool uses_bigram(int num_labels) const
        {
            for (auto const& p : passes) {
                if (templates(p, num_labels).has(template_kind::bigram_lm)) {
                    return true;
                }
            }
            return false;
        }

        feature_template_set templates(pass_config const& p, int num_labels) const
        {
            return feature_template_set::parse(p.templates, num_labels, max_duration, num_samples);
        }
    };

    inline char const* const two_feature_templates = "label_posterior_sum bias";
    inline char const* const rich_templates =
        "posterior_average:lex posterior_samples:lex boundary_posteriors:lex "
        "length_indicator:lex bias:lex lattice_score";
    inline char const* const lm_templates = "lattice_score bigram_lm length_indicator:lex bias";

    // Three passes: two-feature first pass, rich lexicalized segment
    // features plus the lattice score, then lattice score with a bigram LM.
    inline cascade_config default_cascade_config()
    {
        cascade_config c;
        pass_config p1 { two_feature_templates, {}, prune_params { prune_method::edge, 0.85 } };
        p1.train.step_size = 1.0;
        p1.train.epochs = 3;
        p1.train.early_stopping = false;   // the third-epoch model prunes
        pass_config p2 { rich_templates, {}, prune_params { prune_method::edge, 0.3 } };
        p2.train.step_size = 0.1;
        p2.train.epochs = 20;
        pass_config p3 { lm_templates, {}, std::nullopt };
        p3.train.step_size = 0.01;
        p3.train.epochs = 20;
        c.passes = { p1, p2, p3 };
        return c;
    }

    // Flat "key = value" file. Global keys: passes, max_duration, samples,
    // frame_shift, subsample, max_empty_fraction. Per pass i (1-based):
    // pass<i>.templates, .step_size, .epochs, .cost_scale, .early_stopping,
    // .seed, .prune, .alpha. Unset keys keep the default three-pass recipe.
    inline cascade_config read_cascade_config(std::istream& is)
    {
        cascade_config c = default_cascade_config();
        std::map<std::string, std::pair<std::string, int>> kv;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) {
                line.resize(hash);
            }
            if (text::blank(line)) {
                continue;
            }
            auto eq = line.find('=');
            auto keys = eq == std::string::npos ? std::vector<std::string_view> {}
                                                : text::split(std::string_view(line).substr(0, eq));
            if (keys.size() != 1) {
                throw parse_error(lineno, "expected 'key = value'");
            }
            std::string value;
            for (auto t : text::split(std::string_view(line).substr(eq + 1))) {
                value += (value.empty() ? "" : " ") + std::string(t);
            }
            kv[std::string(keys[0])] = { value, lineno };
        }

        auto take = [&](std::string const& key) -> std::optional<std::pair<std::string, int>> {
            auto it = kv.find(key);
            if (it == kv.end()) {
                return std::nullopt;
            }
            auto v = it->second;
            kv.erase(it);
            return v;
        };
        auto as_int = [](auto const& v) { return static_cast<int>(text::parse_int(v.first, v.second)); };
        auto as_num = [](auto const& v) { return text::parse_finite(v.first, v.second); };
        auto as_bool = [](auto const& v) {
            if (v.first == "true" || v.first == "1") return true;
            if (v.first == "false" || v.first == "0") return false;
            throw parse_error(v.second, "expected true or false");
        };

        if (auto v = take("passes")) {
            int n = as_int(*v);
            if (n < 1) {
                throw parse_error(v->second, "passes must be positive");
            }
            while (static_cast<int>(c.passes.size()) < n) {
                c.passes.push_back(c.passes.back());
            }
            c.passes.resize(n);
        }
        if (auto v = take("max_duration")) c.max_duration = as_int(*v);
        if (auto v = take("samples")) c.num_samples = as_int(*v);
        if (auto v = take("frame_shift")) c.frame_shift = as_num(*v);
        if (auto v = take("subsample")) c.subsample = parse_parity(v->first);
        if (auto v = take("max_empty_fraction")) c.max_empty_fraction = as_num(*v);

        for (std::size_t i = 0; i < c.passes.size(); ++i) {
            auto& p = c.passes[i];
            std::string pre = "pass" + std::to_string(i + 1) + ".";
            if (auto v = take(pre + "templates")) p.templates = v->first;
            if (auto v = take(pre + "step_size")) p.train.step_size = as_num(*v);
            if (auto v = take(pre + "epochs")) p.train.epochs = as_int(*v);
            if (auto v = take(pre + "cost_scale")) p.train.cost_scale = as_num(*v);
            if (auto v = take(pre + "early_stopping")) p.train.early_stopping = as_bool(*v);
            if (auto v = take(pre + "seed")) p.train.seed = static_cast<std::uint64_t>(as_int(*v));
            if (auto v = take(pre + "prune")) {
                if (v->first == "none") {
                    p.prune.reset();
                } else {
                    p.prune = prune_params { parse_prune_method(v->first), p.prune ? p.prune->alpha : 0.5 };
                }
            }
            if (auto v = take(pre + "alpha")) {
                if (!p.prune) {
                    p.prune = prune_params {};
                }
                p.prune->alpha = as_num(*v);
            }
        }
        c.passes.back().prune.reset();
        if (!kv.empty()) {
            throw parse_error(kv.begin()->second.second, "unknown key '" + kv.begin()->first + "'");
        }
        c.check();
        return c;
    }

    inline void write_cascade_config(std::ostream& os, cascade_config const& c)
    {
        os << "passes = " << c.passes.size() << '\n'
           << "max_duration = " << c.max_duration << '\n'
           << "samples = " << c.num_samples << '\n'
           << "frame_shift = " << text::format_double(c.frame_shift) << '\n'
           << "subsample = " << parity_name(c.subsample) << '\n'
           << "max_empty_fraction = " << text::format_double(c.max_empty_fraction) << '\n';
        for (std::size_t i = 0; i < c.passes.size(); ++i) {
            auto const& p = c.passes[i];
            std::string pre = "pass" + std::to_string(i + 1) + ".";
            os << pre << "templates = " << p.templates << '\n'
               << pre << "step_size = " << text::format_double(p.train.step_size) << '\n'
               << pre << "epochs = " << p.train.epochs << '\n'
               << pre << "cost_scale = " << text::format_double(p.train.cost_scale) << '\n'
               << pre << "early_stopping = " << (p.train.early_stopping ? "true" : "false") << '\n'
               << pre << "seed = " << p.train.seed << '\n';
            if (p.prune) {
                os << pre << "prune = " << prune_method_name(p.prune->method) << '\n'
                   << pre << "alpha = " << text::format_double(p.prune->alpha) << '\n';
            }
        }
    }

    // Prunes a scored decoding graph and maps the survivors back onto the
    // lattice it was built from. Each surviving lattice edge carries its
    // score under the pruning pass's model (the best copy when the graph is
    // label-expanded), which the next pass reads as its lattice score.
    inline fst prune_to_lattice(fst const& lattice, decoding_graph const& g, prune_params const& p)
    {
        prune_info info;
        prune(g.graph, p, &info);
        std::vector<char> keep(lattice.edge_count(), 0);
        std::vector<double> stamped(lattice.edge_count(), 0.0);
        std::vector<bool> seen(lattice.edge_count(), false);
        for (int ge : info.edge_origin) {
            int e = g.origin[ge];
            double w = g.graph.weight(ge);
            keep[e] = 1;
            stamped[e] = seen[e] ? std::max(stamped[e], w) : w;
            seen[e] = true;
        }
        return trimmed_subgraph(lattice.with_weights(stamped), keep);
    }

    inline double seconds_since(std::chrono::steady_clock::time_point t)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    }

    struct lattice_stats {
        long edges_before = 0;
        long edges_after = 0;
        long reference_labels = 0;
        long oracle_distance = 0;
        int empty = 0;
        int utterances = 0;

        double removed_fraction() const
        {
            return edges_before ? 1.0 - static_cast<double>(edges_after) / edges_before : 0.0;
        }
        double density() const
        {
            return reference_labels ? static_cast<double>(edges_after) / reference_labels : 0.0;
        }
        double oracle_error() const
        {
            return reference_labels ? static_cast<double>(oracle_distance) / reference_labels : 0.0;
        }
    };

    // Scores each utterance's hypothesis space with `m`, prunes it, and
    // returns the utterances with their new lattices.
    inline std::vector<utterance> prune_corpus(model const& m, std::vector<utterance> const& data,
        prune_params const& p, bigram_table const* lm, lattice_stats& stats, double& seconds)
    {
        std::vector<utterance> out;
        out.reserve(data.size());
        auto begin = std::chrono::steady_clock::now();
        for (auto const& u : data) {
            featurizer fz(m.templates, u.post, lm);
            auto lattice = hypothesis_of(u, m.templates.max_duration());
            auto g = build_decoding_graph(lattice, fz, m.theta);
            utterance next { u.id, u.post, u.gold, prune_to_lattice(lattice, g, p) };
            stats.edges_before += lattice.edge_count();
            stats.edges_after += next.lattice->edge_count();
            ++stats.utterances;
            out.push_back(std::move(next));
        }
        seconds = seconds_since(begin);
        for (auto const& u : out) {
            auto ref = u.gold.labels();
            stats.reference_labels += static_cast<long>(ref.size());
            if (u.lattice->edge_count() == 0) {
                ++stats.empty;
                stats.oracle_distance += static_cast<long>(ref.size());
            } else if (!ref.empty()) {
                stats.oracle_distance += oracle_error_rate(*u.lattice, ref).distance;
            }
        }
        return out;
    }

    struct pass_stats {
        int pass = 0;
        int best_epoch = 0;
        std::vector<epoch_metrics> epochs;
        double train_seconds = 0;
        double dev_per = 0;
        // Filled for passes that prune.
        lattice_stats train_lattices;
        lattice_stats dev_lattices;
        double prune_seconds = 0;
        double prune_rtf = 0;
    };

    struct cascade_training {
        std::vector<model> models;
        std::optional<bigram_table> lm;
        std::vector<pass_stats> passes;
        // Hypothesis spaces each pass was trained on; entry 0 is dense (no
        // lattices), entry i holds the lattices produced by pass i.
        std::vector<std::vector<utterance>> train_spaces;
        std::vector<std::vector<utterance>> dev_spaces;
    };

    inline double audio_seconds(std::vector<utterance> const& data, double frame_shift)
    {
        double s = 0;
        for (auto const& u : data) {
            s += u.post.num_frames() * frame_shift;
        }
        return s;
    }

    // Trains A_1 on the dense spaces, prunes them with A_1 to get Y_2, trains
    // A_2 on Y_2, and so on. With `lattice_dir` the lattices of pass i+1 go
    // to <lattice_dir>/pass<i+1>/{train,dev}/<id>.lat.
    inline cascade_training run_cascade_train(cascade_config const& cfg, label_set const& labels,
        std::vector<utterance> train, std::vector<utterance> dev,
        std::filesystem::path const& lattice_dir = {}, std::ostream* log = nullptr)
    {
        cfg.check();
        if (train.empty()) {
            throw error("empty training corpus");
        }
        cascade_training result;
        int nl = labels.size();
        if (cfg.uses_bigram(nl)) {
            std::vector<segment_path> gold;
            for (auto const& u : train) {
                gold.push_back(u.gold);
            }
            result.lm = estimate_bigram_lm(gold, nl);
        }
        bigram_table const* lm = result.lm ? &*result.lm : nullptr;

        for (std::size_t i = 0; i < cfg.passes.size(); ++i) {
            auto const& pc = cfg.passes[i];
            result.train_spaces.push_back(train);
            result.dev_spaces.push_back(dev);

            pass_stats ps;
            ps.pass = static_cast<int>(i + 1);
            auto begin = std::chrono::steady_clock::now();
            auto tr = train_pass(model(cfg.templates(pc, nl), labels), train, dev, pc.train, lm);
            ps.train_seconds = seconds_since(begin);
            ps.best_epoch = tr.best_epoch;
            ps.epochs = tr.epochs;
            ps.dev_per = tr.epochs[tr.best_epoch - 1].dev_per;
            result.models.push_back(tr.best);
            if (log) {
                for (auto const& em : tr.epochs) {
                    *log << "pass " << ps.pass << " epoch " << em.epoch << " loss " << em.train_loss
                         << " dev-per " << em.dev_per << " seconds " << em.wall_seconds << '\n';
                }
            }

            if (i + 1 < cfg.passes.size()) {
                double ts = 0, ds = 0;
                train = prune_corpus(tr.best, train, *pc.prune, lm, ps.train_lattices, ts);
                dev = prune_corpus(tr.best, dev, *pc.prune, lm, ps.dev_lattices, ds);
                ps.prune_seconds = ts + ds;
                double audio = audio_seconds(train, cfg.frame_shift) + audio_seconds(dev, cfg.frame_shift);
                ps.prune_rtf = audio > 0 ? ps.prune_seconds / audio : 0.0;
                int empty = ps.train_lattices.empty + ps.dev_lattices.empty;
                int total = ps.train_lattices.utterances + ps.dev_lattices.utterances;
                if (empty > cfg.max_empty_fraction * total) {
                    throw error("pass " + std::to_string(ps.pass) + " left " + std::to_string(empty)
                        + " of " + std::to_string(total) + " lattices empty");
                }
                if (log) {
                    *log << "pass " << ps.pass << " pruned: removed "
                         << ps.dev_lattices.removed_fraction() << " dev-oracle "
                         << ps.dev_lattices.oracle_error() << " density " << ps.dev_lattices.density()
                         << '\n';
                }
                if (!lattice_dir.empty()) {
                    auto base = lattice_dir / ("pass" + std::to_string(i + 2));
                    for (auto const& [split, data] : { std::pair { "train", &train }, std::pair { "dev", &dev } }) {
                        for (auto const& u : *data) {
                            write_file(base / split / (u.id + ".lat"),
                                [&](std::ostream& os) { write_lattice(os, *u.lattice, labels); });
                        }
                    }
                }
            }
            result.passes.push_back(std::move(ps));
        }
        return result;
    }

    struct cascade_decode_result {
        segment_path path;
        std::vector<double> pass_seconds;
        std::vector<long> pass_edges;        // edges of the hypothesis space each pass scored
        double feed_forward_seconds = 0;
        double total_seconds = 0;            // measured around the whole call
        double audio_seconds = 0;
        bool fell_back = false;              // a pass emptied the lattice
        std::uint64_t featurizations = 0;
    };

    // Pass 1 scores the dense space; every pass but the last prunes; the last
    // returns its best path. If pruning empties the lattice, the pruning
    // pass's own best path is returned.
    inline cascade_decode_result run_cascade_decode(std::vector<model> const& models,
        cascade_config const& cfg, posterior_matrix const& post, bigram_table const* lm = nullptr)
    {
        auto begin = std::chrono::steady_clock::now();
        auto counter_start = featurization_counter().load();
        if (models.size() != cfg.passes.size()) {
            throw error("model count does not match the cascade's pass count");
        }
        cascade_decode_result r;
        r.audio_seconds = post.num_frames() * cfg.frame_shift;
        std::optional<fst> lattice;
        for (std::size_t i = 0; i < models.size(); ++i) {
            auto t = std::chrono::steady_clock::now();
            auto const& m = models[i];
            fst space = lattice ? *lattice
                                : build_hypothesis_space(post.num_frames(), post.num_labels(),
                                    m.templates.max_duration());
            featurizer fz(m.templates, post, lm);
            auto g = build_decoding_graph(space, fz, m.theta);
            r.pass_edges.push_back(space.edge_count());
            if (i + 1 == models.size()) {
                r.path = decode_graph(g).path;
                r.pass_seconds.push_back(seconds_since(t));
                break;
            }
            auto next = prune_to_lattice(space, g, *cfg.passes[i].prune);
            if (next.edge_count() == 0) {
                r.fell_back = true;
                r.path = decode_graph(g).path;
                r.pass_seconds.push_back(seconds_since(t));
                break;
            }
            lattice = std::move(next);
            r.pass_seconds.push_back(seconds_since(t));
        }
        r.featurizations = featurization_counter().load() - counter_start;
        r.total_seconds = seconds_since(begin);
        return r;
    }

    // As above, with the frame classifier's feed-forward timed as part of
    // recognition.
    inline cascade_decode_result run_cascade_decode(std::vector<model> const& models,
        cascade_config const& cfg, frame_classifier const& clf, frame_matrix const& frames,
        bigram_table const* lm = nullptr)
    {
        auto begin = std::chrono::steady_clock::now();
        auto post = subsample_forward(clf, frames, cfg.subsample);
        double ff = seconds_since(begin);
        auto r = run_cascade_decode(models, cfg, post, lm);
        r.feed_forward_seconds = ff;
        r.total_seconds = seconds_since(begin);
        return r;
    }

    // Decoding real-time factors in the layout of a per-pass timing table.
    struct timing_row {
        std::string system;
        std::vector<double> passes;
        double feed_forward = 0;
        double total_measured = 0;

        double total_decoding() const
        {
            double s = 0;
            for (double p : passes) {
                s += p;
            }
            return s;
        }
        double total_overall() const { return total_decoding() + feed_forward; }
    };

    struct timing_accumulator {
        std::vector<double> pass_seconds;
        double feed_forward = 0;
        double total = 0;
        double audio = 0;

        void add(cascade_decode_result const& r)
        {
            if (pass_seconds.size() < r.pass_seconds.size()) {
                pass_seconds.resize(r.pass_seconds.size(), 0.0);
            }
            for (std::size_t i = 0; i < r.pass_seconds.size(); ++i) {
                pass_seconds[i] += r.pass_seconds[i];
            }
            feed_forward += r.feed_forward_seconds;
            total += r.total_seconds;
            audio += r.audio_seconds;
        }

        timing_row row(std::string system) const
        {
            timing_row t;
            t.system = std::move(system);
            for (double s : pass_seconds) {
                t.passes.push_back(real_time_factor(s, audio));
            }
            t.feed_forward = real_time_factor(feed_forward, audio);
            t.total_measured = real_time_factor(total, audio);
            return t;
        }
    };

    inline void write_timing_table(std::ostream& os, std::vector<timing_row> const& rows, int num_passes)
    {
        static char const* ordinal[] = { "1st", "2nd", "3rd" };
        os << "system";
        for (int i = 0; i < num_passes; ++i) {
            os << '\t' << (i < 3 ? std::string(ordinal[i]) : std::to_string(i + 1) + "th") << " pass";
        }
        os << "\ttotal decoding\tfeeding forward\ttotal overall\n";
        for (auto const& r : rows) {
            os << r.system;
            for (int i = 0; i < num_passes; ++i) {
                os << '\t';
                if (i < static_cast<int>(r.passes.size())) {
                    os << text::format_double(r.passes[i]);
                }
            }
            os << '\t' << text::format_double(r.total_decoding()) << '\t'
               << text::format_double(r.feed_forward) << '\t' << text::format_double(r.total_overall())
               << '\n';
        }
    }

    // Training hours per pass, in the same layout.
    inline void write_training_table(std::ostream& os, std::string const& system,
        std::vector<pass_stats> const& passes, double feed_forward_hours)
    {
        static char const* ordinal[] = { "1st", "2nd", "3rd" };
        os << "system";
        for (std::size_t i = 0; i < passes.size(); ++i) {
            os << '\t' << (i < 3 ? std::string(ordinal[i]) : std::to_string(i + 1) + "th") << " pass";
        }
        os << "\ttotal training\tfeeding forward\ttotal overall\n" << system;
        double total = 0;
        for (auto const& p : passes) {
            double h = (p.train_seconds + p.prune_seconds) / 3600.0;
            total += h;
            os << '\t' << text::format_double(h);
        }
        os << '\t' << text::format_double(total) << '\t' << text::format_double(feed_forward_hours)
           << '\t' << text::format_double(total + feed_forward_hours) << '\n';
    }

    inline void write_models(std::filesystem::path const& dir, cascade_training const& t,
        label_set const& labels)
    {
        for (std::size_t i = 0; i < t.models.size(); ++i) {
            write_file(dir / ("pass" + std::to_string(i + 1) + ".model"),
                [&](std::ostream& os) { write_model(os, t.models[i]); });
        }
        if (t.lm) {
            write_file(dir / "bigram.lm", [&](std::ostream& os) { write_bigram(os, *t.lm, labels); });
        }
    }

}
