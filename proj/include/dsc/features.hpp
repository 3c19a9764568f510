// dsc/features.hpp

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
#include "dsc/common.hpp"
#include "dsc/lattice.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dsc {

    enum class template_kind {
        label_posterior_sum,
        posterior_average,
        posterior_samples,
        boundary_posteriors,
        length_indicator,
        bias,
        lattice_score,
        bigram_lm,
    };

    inline constexpr std::pair<template_kind, char const*> template_names[] = {
        { template_kind::label_posterior_sum, "label_posterior_sum" },
        { template_kind::posterior_average, "posterior_average" },
        { template_kind::posterior_samples, "posterior_samples" },
        { template_kind::boundary_posteriors, "boundary_posteriors" },
        { template_kind::length_indicator, "length_indicator" },
        { template_kind::bias, "bias" },
        { template_kind::lattice_score, "lattice_score" },
        { template_kind::bigram_lm, "bigram_lm" },
    };

    inline char const* template_name(template_kind k)
    {
        for (auto [kind, name] : template_names) {
            if (kind == k) {
                return name;
            }
        }
        return "?";
    }

    struct feature_template {
        template_kind kind;
        bool lexicalized = false;

        friend bool operator==(feature_template const&, feature_template const&) = default;
    };

    // "name" or "name:lex"
    inline feature_template parse_template(std::string_view tok)
    {
        bool lex = false;
        if (auto colon = tok.find(':'); colon != std::string_view::npos) {
            if (tok.substr(colon + 1) != "lex") {
                throw error("unknown template modifier in '" + std::string(tok) + "'");
            }
            lex = true;
            tok = tok.substr(0, colon);
        }
        for (auto [kind, name] : template_names) {
            if (tok == name) {
                return feature_template { kind, lex };
            }
        }
        throw error("unknown feature template '" + std::string(tok) + "'");
    }

    inline std::string format_template(feature_template const& t)
    {
        return std::string(template_name(t.kind)) + (t.lexicalized ? ":lex" : "");
    }

    // Ordered, duplicate-free list of templates together with the label
    // alphabet size and maximum duration that fix the feature layout.
    class feature_template_set {
    public:
        feature_template_set() = default;

        feature_template_set(std::vector<feature_template> templates, int num_labels,
            int max_duration, int num_samples = 3)
            : templates_(std::move(templates)), num_labels_(num_labels),
              max_duration_(max_duration), num_samples_(num_samples)
        {
            if (templates_.empty()) {
                throw error("feature template set is empty");
            }
            if (num_labels_ < 1 || max_duration_ < 1 || num_samples_ < 1) {
                throw error("invalid feature template set parameters");
            }
            for (std::size_t i = 0; i < templates_.size(); ++i) {
                for (std::size_t j = 0; j < i; ++j) {
                    if (templates_[i].kind == templates_[j].kind) {
                        throw error(std::string("duplicate feature template ")
                            + template_name(templates_[i].kind));
                    }
                }
            }
            int offset = 0;
            for (auto const& t : templates_) {
                offsets_.push_back(offset);
                offset += block_dim(t.kind) * (t.lexicalized ? num_labels_ : 1);
            }
            dim_ = offset;
        }

        static feature_template_set parse(std::string_view spec, int num_labels,
            int max_duration, int num_samples = 3)
        {
            std::vector<feature_template> ts;
            for (auto tok : text::split(spec)) {
                ts.push_back(parse_template(tok));
            }
            return feature_template_set(std::move(ts), num_labels, max_duration, num_samples);
        }

        // The first-pass set: label posterior sum and bias, unlexicalized.
        static feature_template_set two_feature(int num_labels, int max_duration)
        {
            return feature_template_set({ { template_kind::label_posterior_sum, false },
                                            { template_kind::bias, false } },
                num_labels, max_duration);
        }

        std::string format() const
        {
            std::string s;
            for (auto const& t : templates_) {
                s += (s.empty() ? "" : " ") + format_template(t);
            }
            return s;
        }

        int block_dim(template_kind k) const
        {
            switch (k) {
            case template_kind::posterior_average: return num_labels_;
            case template_kind::posterior_samples: return num_samples_ * num_labels_;
            case template_kind::boundary_posteriors: return 3 * num_labels_;
            case template_kind::length_indicator: return max_duration_;
            default: return 1;
            }
        }

        bool has(template_kind k) const
        {
            return std::any_of(templates_.begin(), templates_.end(),
                [k](auto const& t) { return t.kind == k; });
        }

        std::vector<feature_template> const& templates() const { return templates_; }
        int offset(std::size_t i) const { return offsets_[i]; }
        int dim() const { return dim_; }
        int num_labels() const { return num_labels_; }
        int max_duration() const { return max_duration_; }
        int num_samples() const { return num_samples_; }

        friend bool operator==(feature_template_set const& a, feature_template_set const& b)
        {
            return a.templates_ == b.templates_ && a.num_labels_ == b.num_labels_
                && a.max_duration_ == b.max_duration_ && a.num_samples_ == b.num_samples_;
        }

    private:
        std::vector<feature_template> templates_;
        std::vector<int> offsets_;
        int num_labels_ = 0;
        int max_duration_ = 0;
        int num_samples_ = 3;
        int dim_ = 0;
    };

    // Add-one smoothed bigram log probabilities. History index num_labels is
    // the utterance start; outcome index num_labels is the utterance end.
    class bigram_table {
    public:
        bigram_table() = default;

        bigram_table(int num_labels, std::vector<double> logp)
            : num_labels_(num_labels), logp_(std::move(logp))
        {
            if (logp_.size() != static_cast<std::size_t>(num_labels_ + 1) * (num_labels_ + 1)) {
                throw error("bigram table size mismatch");
            }
        }

        int num_labels() const { return num_labels_; }
        int start() const { return num_labels_; }
        int end() const { return num_labels_; }

        double log_prob(int history, int outcome) const
        {
            return logp_[history * (num_labels_ + 1) + outcome];
        }

        std::span<double const> row(int history) const
        {
            return { logp_.data() + history * (num_labels_ + 1),
                static_cast<std::size_t>(num_labels_ + 1) };
        }

        friend bool operator==(bigram_table const&, bigram_table const&) = default;

    private:
        int num_labels_ = 0;
        std::vector<double> logp_;
    };

    inline bigram_table estimate_bigram_lm(std::span<segment_path const> corpus, int num_labels)
    {
        if (corpus.empty()) {
            throw error("cannot estimate a bigram model from an empty corpus");
        }
        int n = num_labels + 1;
        std::vector<double> counts(static_cast<std::size_t>(n) * n, 0.0);
        for (auto const& path : corpus) {
            int prev = num_labels;
            for (auto const& s : path.segments) {
                if (s.label < 0 || s.label >= num_labels) {
                    throw error("label outside the alphabet");
                }
                counts[prev * n + s.label] += 1;
                prev = s.label;
            }
            counts[prev * n + num_labels] += 1;
        }
        std::vector<double> logp(counts.size());
        for (int h = 0; h < n; ++h) {
            double total = 0;
            for (int c = 0; c < n; ++c) {
                total += counts[h * n + c];
            }
            for (int c = 0; c < n; ++c) {
                logp[h * n + c] = std::log((counts[h * n + c] + 1.0) / (total + n));
            }
        }
        return bigram_table(num_labels, std::move(logp));
    }

    // Row per history: "<history> <logp label_1> ... <logp label_n> <logp end>".
    inline void write_bigram(std::ostream& os, bigram_table const& lm, label_set const& labels)
    {
        os << "#labels " << labels.size();
        for (auto const& n : labels.names()) {
            os << ' ' << n;
        }
        os << '\n';
        for (int h = 0; h <= lm.num_labels(); ++h) {
            os << (h == lm.start() ? std::string("<s>") : labels.name(h));
            for (double v : lm.row(h)) {
                os << ' ' << text::format_double(v);
            }
            os << '\n';
        }
    }

    inline bigram_table read_bigram(std::istream& is, label_set const& labels)
    {
        std::string line;
        int lineno = 0;
        int n = labels.size();
        std::vector<double> logp(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
        std::vector<bool> seen(n + 1, false);
        while (std::getline(is, line)) {
            ++lineno;
            if (text::blank(line)) {
                continue;
            }
            auto tok = text::split(line);
            if (tok[0] == "#labels") {
                if (tok.size() != static_cast<std::size_t>(n + 2)) {
                    throw parse_error(lineno, "label header does not match alphabet");
                }
                for (int l = 0; l < n; ++l) {
                    if (tok[l + 2] != labels.name(l)) {
                        throw parse_error(lineno, "label header does not match alphabet");
                    }
                }
                continue;
            }
            if (tok.size() != static_cast<std::size_t>(n + 2)) {
                throw parse_error(lineno, "expected history and " + std::to_string(n + 1) + " values");
            }
            int h = tok[0] == "<s>" ? n : labels.id(std::string(tok[0]));
            seen[h] = true;
            for (int c = 0; c <= n; ++c) {
                logp[h * (n + 1) + c] = text::parse_finite(tok[c + 1], lineno);
            }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw parse_error(lineno, "bigram table is missing a history row");
        }
        return bigram_table(n, std::move(logp));
    }

    // Inputs a segment's features need beyond the posteriors.
    struct segment_aux {
        std::optional<double> lattice_score;
        std::optional<int> prev_label;  // bigram_table::start() at utterance start
        bool ends_utterance = false;
    };

    using sparse_vector = std::vector<std::pair<int, double>>;

    // Number of segment featurizations performed, process wide.
    inline std::atomic<std::uint64_t>& featurization_counter()
    {
        static std::atomic<std::uint64_t> counter { 0 };
        return counter;
    }

    inline double phi_label_posterior(posterior_matrix const& post, segment const& seg)
    {
        if (seg.label < 0 || seg.label >= post.num_labels()) {
            throw error("segment label outside the posterior alphabet");
        }
        if (seg.start < 0 || seg.end > post.num_frames() || seg.end <= seg.start) {
            throw error("segment outside the utterance");
        }
        double sum = 0;
        for (int r = seg.start; r < seg.end; ++r) {
            sum += post.at(r, seg.label);
        }
        return sum;
    }

    // Segment feature map for one utterance. Holds per-label prefix sums of
    // the log posteriors so averages cost O(|L|) per segment.
    class featurizer {
    public:
        featurizer(feature_template_set const& templates, posterior_matrix const& post,
            bigram_table const* lm = nullptr)
            : templates_(&templates), post_(&post), lm_(lm)
        {
            if (post.num_labels() != templates.num_labels()) {
                throw error("posterior alphabet does not match the feature templates");
            }
            if (templates.has(template_kind::bigram_lm)
                && (!lm || lm->num_labels() != templates.num_labels())) {
                throw error("bigram_lm template needs a matching bigram table");
            }
            int nl = post.num_labels();
            if (templates.has(template_kind::posterior_average)) {
                prefix_.assign(static_cast<std::size_t>(post.num_frames() + 1) * nl, 0.0);
                for (int r = 0; r < post.num_frames(); ++r) {
                    for (int l = 0; l < nl; ++l) {
                        prefix_[(r + 1) * nl + l] = prefix_[r * nl + l] + post.at(r, l);
                    }
                }
            }
        }

        feature_template_set const& templates() const { return *templates_; }
        posterior_matrix const& posteriors() const { return *post_; }
        bigram_table const* lm() const { return lm_; }

        // Calls f(index, value) for every emitted feature, ascending index.
        template <class F>
        void visit(segment const& seg, segment_aux const& aux, F&& f) const
        {
            auto const& post = *post_;
            int nl = post.num_labels();
            if (seg.label < 0 || seg.label >= nl) {
                throw error("segment label outside the alphabet");
            }
            if (seg.start < 0 || seg.end > post.num_frames() || seg.end <= seg.start) {
                throw error("segment outside the utterance");
            }
            featurization_counter().fetch_add(1, std::memory_order_relaxed);

            auto const& ts = templates_->templates();
            for (std::size_t i = 0; i < ts.size(); ++i) {
                auto const& t = ts[i];
                int base = templates_->offset(i)
                    + (t.lexicalized ? seg.label * templates_->block_dim(t.kind) : 0);
                int n = seg.duration();
                switch (t.kind) {
                case template_kind::label_posterior_sum: {
                    double sum = 0;
                    for (int r = seg.start; r < seg.end; ++r) {
                        sum += post.at(r, seg.label);
                    }
                    f(base, sum);
                    break;
                }
                case template_kind::posterior_average:
                    for (int l = 0; l < nl; ++l) {
                        f(base + l, (prefix_[seg.end * nl + l] - prefix_[seg.start * nl + l]) / n);
                    }
                    break;
                case template_kind::posterior_samples: {
                    int ns = templates_->num_samples();
                    for (int j = 0; j < ns; ++j) {
                        double p = ns == 1 ? 0.5 : static_cast<double>(j) / (ns - 1);
                        int r = seg.start + static_cast<int>(std::lround(p * (n - 1)));
                        for (int l = 0; l < nl; ++l) {
                            f(base + j * nl + l, post.at(r, l));
                        }
                    }
                    break;
                }
                case template_kind::boundary_posteriors: {
                    int rows[3] = { seg.start, seg.end - 1, seg.start - 1 };
                    for (int j = 0; j < 3; ++j) {
                        if (rows[j] < 0) {
                            continue;
                        }
                        for (int l = 0; l < nl; ++l) {
                            f(base + j * nl + l, post.at(rows[j], l));
                        }
                    }
                    break;
                }
                case template_kind::length_indicator:
                    f(base + std::min(n, templates_->max_duration()) - 1, 1.0);
                    break;
                case template_kind::bias:
                    f(base, 1.0);
                    break;
                case template_kind::lattice_score:
                    if (!aux.lattice_score) {
                        throw error("lattice_score template needs the previous pass's edge score");
                    }
                    f(base, *aux.lattice_score);
                    break;
                case template_kind::bigram_lm: {
                    if (!aux.prev_label) {
                        throw error("bigram_lm template needs the previous segment label");
                    }
                    double v = lm_->log_prob(*aux.prev_label, seg.label);
                    if (aux.ends_utterance) {
                        v += lm_->log_prob(seg.label, lm_->end());
                    }
                    f(base, v);
                    break;
                }
                }
            }
        }

        sparse_vector operator()(segment const& seg, segment_aux const& aux) const
        {
            sparse_vector result;
            visit(seg, aux, [&](int i, double v) { result.emplace_back(i, v); });
            return result;
        }

        double score(std::span<double const> theta, segment const& seg, segment_aux const& aux) const
        {
            double s = 0;
            visit(seg, aux, [&](int i, double v) { s += theta[i] * v; });
            return s;
        }

    private:
        feature_template_set const* templates_;
        posterior_matrix const* post_;
        bigram_table const* lm_;
        std::vector<double> prefix_;
    };

    inline sparse_vector featurize(feature_template_set const& templates,
        posterior_matrix const& post, segment const& seg, segment_aux const& aux = {},
        bigram_table const* lm = nullptr)
    {
        return featurizer(templates, post, lm)(seg, aux);
    }

    inline double dot(std::span<double const> theta, sparse_vector const& v)
    {
        double s = 0;
        for (auto [i, x] : v) {
            s += theta[i] * x;
        }
        return s;
    }

    // theta plus the templates that define its layout.
    struct model {
        feature_template_set templates;
        label_set labels;
        std::vector<double> theta;

        model() = default;

        model(feature_template_set ts, label_set ls)
            : templates(std::move(ts)), labels(std::move(ls)), theta(templates.dim(), 0.0)
        {
            if (labels.size() != templates.num_labels()) {
                throw error("label alphabet does not match the feature templates");
            }
        }

        void check() const
        {
            if (static_cast<int>(theta.size()) != templates.dim()) {
                throw error("weight vector dimension does not match the feature templates");
            }
            for (double w : theta) {
                if (!std::isfinite(w)) {
                    throw error("non-finite model weight");
                }
            }
        }
    };

    inline double score(model const& m, posterior_matrix const& post, segment const& seg,
        segment_aux const& aux = {}, bigram_table const* lm = nullptr)
    {
        m.check();
        return featurizer(m.templates, post, lm).score(m.theta, seg, aux);
    }

    // Model file:
    //   #templates <t1[:lex]> ...
    //   #labels <n> <names...>
    //   #max-duration <D>
    //   #samples <k>
    //   #dim <N>
    //   N weights, one per line
    inline void write_model(std::ostream& os, model const& m)
    {
        os << "#templates " << m.templates.format() << '\n' << "#labels " << m.labels.size();
        for (auto const& n : m.labels.names()) {
            os << ' ' << n;
        }
        os << '\n'
           << "#max-duration " << m.templates.max_duration() << '\n'
           << "#samples " << m.templates.num_samples() << '\n'
           << "#dim " << m.templates.dim() << '\n';
        for (double w : m.theta) {
            os << text::format_double(w) << '\n';
        }
    }

    inline model read_model(std::istream& is)
    {
        std::string line;
        int lineno = 0;
        std::string templates;
        label_set labels;
        int max_duration = -1, samples = 3, dim = -1;
        std::vector<double> theta;
        while (std::getline(is, line)) {
            ++lineno;
            if (text::blank(line)) {
                continue;
            }
            auto tok = text::split(line);
            if (tok[0] == "#templates") {
                for (std::size_t i = 1; i < tok.size(); ++i) {
                    templates += std::string(tok[i]) + " ";
                }
            } else if (tok[0] == "#labels") {
                for (std::size_t i = 2; i < tok.size(); ++i) {
                    labels.add(std::string(tok[i]));
                }
            } else if (tok[0] == "#max-duration" && tok.size() == 2) {
                max_duration = static_cast<int>(text::parse_int(tok[1], lineno));
            } else if (tok[0] == "#samples" && tok.size() == 2) {
                samples = static_cast<int>(text::parse_int(tok[1], lineno));
            } else if (tok[0] == "#dim" && tok.size() == 2) {
                dim = static_cast<int>(text::parse_int(tok[1], lineno));
            } else if (tok[0][0] == '#') {
                throw parse_error(lineno, "unknown header '" + std::string(tok[0]) + "'");
            } else {
                if (tok.size() != 1) {
                    throw parse_error(lineno, "expected one weight per line");
                }
                theta.push_back(text::parse_finite(tok[0], lineno));
            }
        }
        model m(feature_template_set::parse(templates, labels.size(), max_duration, samples), labels);
        if (dim != m.templates.dim() || static_cast<int>(theta.size()) != dim) {
            throw parse_error(lineno, "weight count does not match the template dimension");
        }
        m.theta = std::move(theta);
        return m;
    }

}
