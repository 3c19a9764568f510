// dsc/acoustics.hpp

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

#include "dsc/common.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dsc {

    // T x |L| matrix of frame log posteriors, log h(x)_{k,l}. Rows are 0-based:
    // row k holds frame k+1.
    class posterior_matrix {
    public:
        posterior_matrix() = default;

        posterior_matrix(label_set labels, int num_frames, std::vector<double> values)
            : labels_(std::move(labels)), num_frames_(num_frames), values_(std::move(values))
        {
            if (num_frames_ < 1 || labels_.size() < 1) {
                throw error("posterior matrix needs at least one frame and one label");
            }
            if (values_.size() != static_cast<std::size_t>(num_frames_) * labels_.size()) {
                throw error("posterior matrix size mismatch");
            }
        }

        int num_frames() const { return num_frames_; }
        int num_labels() const { return labels_.size(); }
        label_set const& labels() const { return labels_; }

        double at(int row, int label) const { return values_[row * num_labels() + label]; }

        std::span<double const> row(int r) const
        {
            return { values_.data() + r * num_labels(), static_cast<std::size_t>(num_labels()) };
        }

        std::vector<double> const& values() const { return values_; }

        // max over rows of |log-sum-exp(row)|
        double max_normalization_error() const
        {
            double worst = 0;
            for (int r = 0; r < num_frames_; ++r) {
                auto v = row(r);
                double m = *std::max_element(v.begin(), v.end());
                double s = 0;
                for (double x : v) {
                    s += std::exp(x - m);
                }
                worst = std::max(worst, std::abs(m + std::log(s)));
            }
            return worst;
        }

        friend bool operator==(posterior_matrix const& a, posterior_matrix const& b)
        {
            return a.labels_ == b.labels_ && a.num_frames_ == b.num_frames_
                && a.values_ == b.values_;
        }

    private:
        label_set labels_;
        int num_frames_ = 0;
        std::vector<double> values_;
    };

    // T x dim acoustic feature vectors.
    class frame_matrix {
    public:
        frame_matrix() = default;

        frame_matrix(int num_frames, int dim, std::vector<double> values)
            : num_frames_(num_frames), dim_(dim), values_(std::move(values))
        {
            if (num_frames_ < 1 || dim_ < 1) {
                throw error("frame matrix needs at least one frame and one dimension");
            }
            if (values_.size() != static_cast<std::size_t>(num_frames_) * dim_) {
                throw error("frame matrix size mismatch");
            }
        }

        int num_frames() const { return num_frames_; }
        int dim() const { return dim_; }

        std::span<double const> row(int r) const
        {
            return { values_.data() + r * dim_, static_cast<std::size_t>(dim_) };
        }

        std::vector<double> const& values() const { return values_; }

        friend bool operator==(frame_matrix const&, frame_matrix const&) = default;

    private:
        int num_frames_ = 0;
        int dim_ = 0;
        std::vector<double> values_;
    };

    enum class subsample_parity { none, even, odd };

    inline subsample_parity parse_parity(std::string const& s)
    {
        if (s == "none") return subsample_parity::none;
        if (s == "even") return subsample_parity::even;
        if (s == "odd") return subsample_parity::odd;
        throw error("unknown subsampling parity '" + s + "'");
    }

    inline char const* parity_name(subsample_parity p)
    {
        switch (p) {
        case subsample_parity::even: return "even";
        case subsample_parity::odd: return "odd";
        default: return "none";
        }
    }

    // Row whose classifier output is used for row r. With even parity only
    // even (1-based) frames are evaluated and h_{i-1} = h_i; a trailing odd
    // frame is evaluated itself. With odd parity h_{i+1} = h_i for odd i.
    inline int source_row(int num_frames, subsample_parity parity, int r)
    {
        switch (parity) {
        case subsample_parity::even:
            return (r % 2 == 0 && r + 1 < num_frames) ? r + 1 : r;
        case subsample_parity::odd:
            return (r % 2 == 1) ? r - 1 : r;
        default:
            return r;
        }
    }

    inline void log_softmax(std::span<double> v)
    {
        double m = *std::max_element(v.begin(), v.end());
        double s = 0;
        for (double x : v) {
            s += std::exp(x - m);
        }
        double z = m + std::log(s);
        for (double& x : v) {
            x -= z;
        }
    }

    struct classifier_gradient {
        std::vector<double> weights;
        std::vector<double> bias;
    };

    // Softmax over a window of 2r+1 frames (zero-padded at the edges).
    class frame_classifier {
    public:
        frame_classifier() = default;

        frame_classifier(label_set labels, int input_dim, int radius)
            : labels_(std::move(labels)), input_dim_(input_dim), radius_(radius)
        {
            if (input_dim_ < 1 || radius_ < 0 || labels_.size() < 1) {
                throw error("invalid frame classifier shape");
            }
            weights_.assign(static_cast<std::size_t>(context_dim()) * num_labels(), 0.0);
            bias_.assign(num_labels(), 0.0);
            grad_sq_w_.assign(weights_.size(), 0.0);
            grad_sq_b_.assign(bias_.size(), 0.0);
        }

        label_set const& labels() const { return labels_; }
        int num_labels() const { return labels_.size(); }
        int input_dim() const { return input_dim_; }
        int radius() const { return radius_; }
        int context_dim() const { return (2 * radius_ + 1) * input_dim_; }

        std::vector<double>& weights() { return weights_; }
        std::vector<double> const& weights() const { return weights_; }
        std::vector<double>& bias() { return bias_; }
        std::vector<double> const& bias() const { return bias_; }

        void check(frame_matrix const& frames) const
        {
            if (frames.dim() != input_dim_) {
                throw error("frame dimension " + std::to_string(frames.dim())
                    + " does not match classifier dimension " + std::to_string(input_dim_));
            }
        }

        // Calls f(context index, value) for the nonzero inputs at row r.
        template <class F>
        void for_each_input(frame_matrix const& frames, int r, F&& f) const
        {
            for (int j = -radius_; j <= radius_; ++j) {
                int k = r + j;
                if (k < 0 || k >= frames.num_frames()) {
                    continue;
                }
                auto x = frames.row(k);
                int base = (j + radius_) * input_dim_;
                for (int d = 0; d < input_dim_; ++d) {
                    if (x[d] != 0) {
                        f(base + d, x[d]);
                    }
                }
            }
        }

        void log_posteriors(frame_matrix const& frames, int r, std::span<double> out) const
        {
            int nl = num_labels();
            std::copy(bias_.begin(), bias_.end(), out.begin());
            for_each_input(frames, r, [&](int i, double x) {
                double const* w = weights_.data() + static_cast<std::size_t>(i) * nl;
                for (int l = 0; l < nl; ++l) {
                    out[l] += x * w[l];
                }
            });
            log_softmax(out);
        }

        // Per-coordinate AdaGrad on the dense gradient. Zero coordinates are
        // left alone.
        void adagrad_step(classifier_gradient const& g, double step_size)
        {
            auto update = [step_size](std::vector<double>& theta, std::vector<double>& acc,
                              std::vector<double> const& grad) {
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    if (grad[i] == 0) {
                        continue;
                    }
                    acc[i] += grad[i] * grad[i];
                    theta[i] -= step_size * grad[i] / (std::sqrt(acc[i]) + 1e-8);
                }
            };
            update(weights_, grad_sq_w_, g.weights);
            update(bias_, grad_sq_b_, g.bias);
        }

        friend void write_classifier(std::ostream& os, frame_classifier const& clf);
        friend frame_classifier read_classifier(std::istream& is);

    private:
        label_set labels_;
        int input_dim_ = 0;
        int radius_ = 0;
        std::vector<double> weights_;  // context_dim x num_labels, row-major
        std::vector<double> bias_;
        std::vector<double> grad_sq_w_;
        std::vector<double> grad_sq_b_;
    };

    // Evaluates only the rows that are their own source and copies the rest.
    // `evaluations`, when given, is incremented once per classifier evaluation.
    inline posterior_matrix subsample_forward(frame_classifier const& clf,
        frame_matrix const& frames, subsample_parity parity, std::size_t* evaluations = nullptr)
    {
        clf.check(frames);
        int nt = frames.num_frames();
        int nl = clf.num_labels();
        std::vector<double> values(static_cast<std::size_t>(nt) * nl);
        std::vector<int> source(nt);
        for (int r = 0; r < nt; ++r) {
            source[r] = source_row(nt, parity, r);
        }
        for (int r = 0; r < nt; ++r) {
            if (source[r] == r) {
                clf.log_posteriors(frames, r, { values.data() + r * nl, static_cast<std::size_t>(nl) });
                if (evaluations) {
                    ++*evaluations;
                }
            }
        }
        for (int r = 0; r < nt; ++r) {
            if (source[r] != r) {
                std::copy_n(values.data() + source[r] * nl, nl, values.data() + r * nl);
            }
        }
        return posterior_matrix(clf.labels(), nt, std::move(values));
    }

    inline posterior_matrix classify(frame_classifier const& clf, frame_matrix const& frames)
    {
        return subsample_forward(clf, frames, subsample_parity::none);
    }

    // Log loss summed over all T frames. Under subsampling an evaluated output
    // also serves the copied frame, so its gradient is the sum of both
    // frames' contributions.
    inline double frame_log_loss(frame_classifier const& clf, frame_matrix const& frames,
        std::span<int const> gold, subsample_parity parity, classifier_gradient* grad = nullptr)
    {
        clf.check(frames);
        int nt = frames.num_frames();
        int nl = clf.num_labels();
        if (static_cast<int>(gold.size()) != nt) {
            throw error("gold label count does not match frame count");
        }
        for (int y : gold) {
            if (y < 0 || y >= nl) {
                throw error("gold label outside the label set");
            }
        }
        if (grad) {
            grad->weights.assign(clf.weights().size(), 0.0);
            grad->bias.assign(nl, 0.0);
        }

        std::vector<std::vector<int>> served(nt);
        for (int r = 0; r < nt; ++r) {
            served[source_row(nt, parity, r)].push_back(r);
        }

        double loss = 0;
        std::vector<double> lp(nl), g(nl);
        for (int s = 0; s < nt; ++s) {
            if (served[s].empty()) {
                continue;
            }
            clf.log_posteriors(frames, s, lp);
            std::fill(g.begin(), g.end(), 0.0);
            for (int r : served[s]) {
                loss -= lp[gold[r]];
                for (int l = 0; l < nl; ++l) {
                    g[l] += std::exp(lp[l]);
                }
                g[gold[r]] -= 1.0;
            }
            if (!grad) {
                continue;
            }
            for (int l = 0; l < nl; ++l) {
                grad->bias[l] += g[l];
            }
            clf.for_each_input(frames, s, [&](int i, double x) {
                double* w = grad->weights.data() + static_cast<std::size_t>(i) * nl;
                for (int l = 0; l < nl; ++l) {
                    w[l] += x * g[l];
                }
            });
        }
        return loss;
    }

    struct labeled_frames {
        frame_matrix frames;
        std::vector<int> gold;
    };

    struct frame_training_options {
        int epochs = 1;
        double step_size = 0.01;
        bool subsample = false;
    };

    struct frame_epoch_stats {
        int epoch = 0;
        subsample_parity parity = subsample_parity::none;
        double loss_per_frame = 0;
        double seconds = 0;
    };

    // AdaGrad with one utterance per update. With subsampling the dropped
    // parity alternates per epoch, starting by evaluating even frames.
    inline std::vector<frame_epoch_stats> train_frame_classifier(frame_classifier& clf,
        std::span<labeled_frames const> corpus, frame_training_options const& opt)
    {
        if (corpus.empty()) {
            throw error("empty training corpus");
        }
        std::vector<frame_epoch_stats> stats;
        classifier_gradient grad;
        for (int epoch = 0; epoch < opt.epochs; ++epoch) {
            auto parity = !opt.subsample ? subsample_parity::none
                : (epoch % 2 == 0 ? subsample_parity::even : subsample_parity::odd);
            auto begin = std::chrono::steady_clock::now();
            double loss = 0;
            long frames = 0;
            for (auto const& utt : corpus) {
                loss += frame_log_loss(clf, utt.frames, utt.gold, parity, &grad);
                frames += utt.frames.num_frames();
                clf.adagrad_step(grad, opt.step_size);
            }
            std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - begin;
            stats.push_back(frame_epoch_stats { epoch + 1, parity, loss / frames, elapsed.count() });
        }
        return stats;
    }

    inline double frame_error_rate(frame_classifier const& clf, std::span<labeled_frames const> data)
    {
        long errors = 0, total = 0;
        for (auto const& utt : data) {
            auto post = classify(clf, utt.frames);
            for (int r = 0; r < post.num_frames(); ++r) {
                auto row = post.row(r);
                int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
                errors += best != utt.gold[r];
                ++total;
            }
        }
        return total ? static_cast<double>(errors) / total : 0.0;
    }

    // Posterior file:
    //   #frames <T>
    //   #labels <n> <name1> ... <namen>
    //   T lines of n log posteriors
    inline void write_posteriors(std::ostream& os, posterior_matrix const& post)
    {
        os << "#frames " << post.num_frames() << '\n' << "#labels " << post.num_labels();
        for (auto const& n : post.labels().names()) {
            os << ' ' << n;
        }
        os << '\n';
        for (int r = 0; r < post.num_frames(); ++r) {
            auto row = post.row(r);
            for (int l = 0; l < post.num_labels(); ++l) {
                os << (l ? " " : "") << text::format_double(row[l]);
            }
            os << '\n';
        }
    }

    namespace detail {

        // Reads the header lines and T rows of `width` numbers each.
        template <class Header>
        std::vector<double> read_matrix(std::istream& is, int& lineno, int& num_frames,
            Header&& header, std::function<int()> width)
        {
            std::string line;
            num_frames = -1;
            std::vector<double> values;
            int rows = 0;
            while (std::getline(is, line)) {
                ++lineno;
                if (text::blank(line)) {
                    continue;
                }
                auto tok = text::split(line);
                if (tok[0] == "#frames") {
                    if (tok.size() != 2) {
                        throw parse_error(lineno, "expected '#frames <T>'");
                    }
                    num_frames = static_cast<int>(text::parse_int(tok[1], lineno));
                    if (num_frames < 1) {
                        throw parse_error(lineno, "frame count must be positive");
                    }
                    continue;
                }
                if (tok[0][0] == '#') {
                    header(tok, lineno);
                    continue;
                }
                int w = width();
                if (num_frames < 0 || w < 0) {
                    throw parse_error(lineno, "data before header");
                }
                if (static_cast<int>(tok.size()) != w) {
                    throw parse_error(lineno, "expected " + std::to_string(w) + " values, got "
                        + std::to_string(tok.size()));
                }
                if (rows == num_frames) {
                    throw parse_error(lineno, "more rows than declared frames");
                }
                for (auto t : tok) {
                    values.push_back(text::parse_double(t, lineno));
                }
                ++rows;
            }
            if (num_frames < 0) {
                throw parse_error(lineno, "missing '#frames' header");
            }
            if (rows != num_frames) {
                throw parse_error(lineno, "truncated file: expected " + std::to_string(num_frames)
                    + " rows, got " + std::to_string(rows));
            }
            return values;
        }

    }

    // Rows whose probabilities do not sum to one within 1e-4 (in log space)
    // are accepted and reported through `warnings`.
    inline posterior_matrix read_posteriors(std::istream& is,
        std::vector<std::string>* warnings = nullptr)
    {
        int lineno = 0, num_frames = -1;
        label_set labels;
        int num_labels = -1;
        auto values = detail::read_matrix(is, lineno, num_frames,
            [&](std::vector<std::string_view> const& tok, int at) {
                if (tok[0] != "#labels") {
                    throw parse_error(at, "unknown header '" + std::string(tok[0]) + "'");
                }
                if (tok.size() < 2) {
                    throw parse_error(at, "expected '#labels <n> <names...>'");
                }
                num_labels = static_cast<int>(text::parse_int(tok[1], at));
                if (num_labels < 1 || static_cast<int>(tok.size()) != num_labels + 2) {
                    throw parse_error(at, "label count does not match label names");
                }
                for (int l = 0; l < num_labels; ++l) {
                    labels.add(std::string(tok[l + 2]));
                }
                if (labels.size() != num_labels) {
                    throw parse_error(at, "duplicate label name");
                }
            },
            [&] { return num_labels; });
        posterior_matrix post(std::move(labels), num_frames, std::move(values));
        for (int r = 0; r < post.num_frames(); ++r) {
            auto row = post.row(r);
            double s = 0;
            for (double x : row) {
                if (x > 1e-4 || std::isnan(x)) {
                    throw error("frame " + std::to_string(r + 1) + ": invalid log posterior");
                }
                s += std::exp(x);
            }
            if (std::abs(std::log(s)) > 1e-4 && warnings) {
                warnings->push_back("frame " + std::to_string(r + 1)
                    + ": posteriors sum to " + text::format_double(s));
            }
        }
        return post;
    }

    // Frame-feature file: like the posterior file with '#dim <d>' in place of
    // the label header.
    inline void write_frames(std::ostream& os, frame_matrix const& frames)
    {
        os << "#frames " << frames.num_frames() << '\n' << "#dim " << frames.dim() << '\n';
        for (int r = 0; r < frames.num_frames(); ++r) {
            auto row = frames.row(r);
            for (int d = 0; d < frames.dim(); ++d) {
                os << (d ? " " : "") << text::format_double(row[d]);
            }
            os << '\n';
        }
    }

    inline frame_matrix read_frames(std::istream& is)
    {
        int lineno = 0, num_frames = -1, dim = -1;
        auto values = detail::read_matrix(is, lineno, num_frames,
            [&](std::vector<std::string_view> const& tok, int at) {
                if (tok[0] != "#dim" || tok.size() != 2) {
                    throw parse_error(at, "expected '#dim <d>'");
                }
                dim = static_cast<int>(text::parse_int(tok[1], at));
                if (dim < 1) {
                    throw parse_error(at, "dimension must be positive");
                }
            },
            [&] { return dim; });
        return frame_matrix(num_frames, dim, std::move(values));
    }

    inline void write_classifier(std::ostream& os, frame_classifier const& clf)
    {
        os << "#radius " << clf.radius_ << '\n' << "#dim " << clf.input_dim_ << '\n'
           << "#labels " << clf.num_labels();
        for (auto const& n : clf.labels_.names()) {
            os << ' ' << n;
        }
        os << '\n';
        int nl = clf.num_labels();
        auto row = [&](double const* v) {
            for (int l = 0; l < nl; ++l) {
                os << (l ? " " : "") << text::format_double(v[l]);
            }
            os << '\n';
        };
        row(clf.bias_.data());
        for (int i = 0; i < clf.context_dim(); ++i) {
            row(clf.weights_.data() + static_cast<std::size_t>(i) * nl);
        }
    }

    inline frame_classifier read_classifier(std::istream& is)
    {
        std::string line;
        int lineno = 0;
        int radius = -1, dim = -1;
        label_set labels;
        std::vector<double> values;
        while (std::getline(is, line)) {
            ++lineno;
            if (text::blank(line)) {
                continue;
            }
            auto tok = text::split(line);
            if (tok[0] == "#radius" && tok.size() == 2) {
                radius = static_cast<int>(text::parse_int(tok[1], lineno));
            } else if (tok[0] == "#dim" && tok.size() == 2) {
                dim = static_cast<int>(text::parse_int(tok[1], lineno));
            } else if (tok[0] == "#labels" && tok.size() >= 2) {
                for (std::size_t i = 2; i < tok.size(); ++i) {
                    labels.add(std::string(tok[i]));
                }
            } else if (tok[0][0] == '#') {
                throw parse_error(lineno, "unknown header '" + std::string(tok[0]) + "'");
            } else {
                if (labels.size() == 0 || static_cast<int>(tok.size()) != labels.size()) {
                    throw parse_error(lineno, "expected one value per label");
                }
                for (auto t : tok) {
                    values.push_back(text::parse_finite(t, lineno));
                }
            }
        }
        frame_classifier clf(labels, dim, radius);
        int nl = labels.size();
        if (values.size() != static_cast<std::size_t>(clf.context_dim() + 1) * nl) {
            throw parse_error(lineno, "classifier weight count does not match its shape");
        }
        std::copy_n(values.begin(), nl, clf.bias_.begin());
        std::copy(values.begin() + nl, values.end(), clf.weights_.begin());
        return clf;
    }

}
