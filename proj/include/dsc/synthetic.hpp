// dsc/synthetic.hpp

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
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <vector>

namespace dsc {

    // Corpus generator with known ground truth. Labels follow a bigram chain;
    // each frame is one-hot(label) plus N(0, sigma^2) noise.
    struct generator_spec {
        int num_labels = 10;
        int min_duration = 2;
        int max_duration = 10;
        double duration_shape = 0.5;      // binomial p over min..max
        // (L+1) x (L+1): rows are the start symbol then each label, columns
        // are each label then the end symbol.
        std::vector<double> transitions;
        int max_segments = 200;
        double sigma = 0.5;
        int utterances = 100;
        std::uint64_t seed = 1;

        void check() const
        {
            if (num_labels < 1) {
                throw error("generator needs a non-empty label alphabet");
            }
            if (min_duration < 1 || max_duration < min_duration) {
                throw error("generator durations must satisfy 1 <= min <= max");
            }
            if (!(duration_shape >= 0 && duration_shape <= 1) || !(sigma >= 0) || utterances < 0) {
                throw error("invalid generator parameters");
            }
            int n = num_labels + 1;
            if (transitions.size() != static_cast<std::size_t>(n) * n) {
                throw error("transition table must be (labels + 1) squared");
            }
            for (int h = 0; h < n; ++h) {
                double s = 0;
                for (int c = 0; c < n; ++c) {
                    double p = transitions[h * n + c];
                    if (!(p >= 0)) {
                        throw error("negative transition probability");
                    }
                    s += p;
                }
                if (std::abs(s - 1) > 1e-9) {
                    throw error("transition row " + std::to_string(h) + " does not sum to one");
                }
            }
            if (transitions[num_labels] != 0) {
                throw error("the start symbol cannot go straight to the end");
            }
        }

        double transition(int history, int outcome) const
        {
            return transitions[history * (num_labels + 1) + outcome];
        }
    };

    // Row 0 is the start distribution; transitions[h][c] is indexed with
    // history h in {start, label_0, ...} and outcome c in {label_0, ..., end}.
    inline std::vector<double> random_bigram(int num_labels, double mean_segments,
        std::uint64_t seed, bool self_loops = false)
    {
        int n = num_labels + 1;
        std::mt19937_64 rng(seed);
        std::gamma_distribution<double> gamma(1.0, 1.0);
        std::vector<double> t(static_cast<std::size_t>(n) * n, 0.0);
        double p_end = 1.0 / std::max(1.0, mean_segments);
        for (int h = 0; h < n; ++h) {
            bool is_start = h == 0;
            int self = h - 1;
            double s = 0;
            for (int c = 0; c < num_labels; ++c) {
                if (!is_start && !self_loops && c == self && num_labels > 1) {
                    continue;
                }
                t[h * n + c] = gamma(rng);
                s += t[h * n + c];
            }
            double mass = is_start ? 1.0 : 1.0 - p_end;
            for (int c = 0; c < num_labels; ++c) {
                t[h * n + c] *= mass / s;
            }
            t[h * n + num_labels] = is_start ? 0.0 : p_end;
        }
        return t;
    }

    struct synthetic_utterance {
        std::string id;
        frame_matrix frames;
        segment_path gold;

        std::vector<int> frame_labels() const
        {
            std::vector<int> result;
            for (auto const& s : gold.segments) {
                result.insert(result.end(), s.duration(), s.label);
            }
            return result;
        }
    };

    inline std::vector<int> sample_label_sequence(generator_spec const& spec, std::mt19937_64& rng)
    {
        int n = spec.num_labels + 1;
        std::vector<int> labels;
        int row = 0;
        while (static_cast<int>(labels.size()) < spec.max_segments) {
            std::discrete_distribution<int> next(spec.transitions.begin() + row * n,
                spec.transitions.begin() + (row + 1) * n);
            int c = next(rng);
            if (c == spec.num_labels) {
                break;
            }
            labels.push_back(c);
            row = c + 1;
        }
        return labels;
    }

    inline synthetic_utterance generate_utterance(generator_spec const& spec, int index)
    {
        std::seed_seq seq { static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
            static_cast<std::uint32_t>(index) };
        std::mt19937_64 rng(seq);
        std::binomial_distribution<int> extra(spec.max_duration - spec.min_duration, spec.duration_shape);
        std::normal_distribution<double> noise(0.0, 1.0);

        synthetic_utterance u;
        char id[32];
        std::snprintf(id, sizeof(id), "utt%06d", index);
        u.id = id;
        int t = 0;
        for (int label : sample_label_sequence(spec, rng)) {
            int d = spec.min_duration + extra(rng);
            u.gold.segments.push_back(segment { t, t + d, label });
            t += d;
        }
        int dim = spec.num_labels;
        std::vector<double> values(static_cast<std::size_t>(t) * dim);
        int r = 0;
        for (auto const& s : u.gold.segments) {
            for (int k = 0; k < s.duration(); ++k, ++r) {
                for (int j = 0; j < dim; ++j) {
                    double x = spec.sigma > 0 ? spec.sigma * noise(rng) : 0.0;
                    values[static_cast<std::size_t>(r) * dim + j] = (j == s.label ? 1.0 : 0.0) + x;
                }
            }
        }
        u.frames = frame_matrix(t, dim, std::move(values));
        return u;
    }

    // Utterance i uses its own generator seeded from (seed, i), so corpora
    // are reproducible and prefixes agree across sizes.
    inline std::vector<synthetic_utterance> generate(generator_spec const& spec, int first_index = 0)
    {
        spec.check();
        std::vector<synthetic_utterance> result;
        result.reserve(spec.utterances);
        for (int i = 0; i < spec.utterances; ++i) {
            result.push_back(generate_utterance(spec, first_index + i));
        }
        return result;
    }

    // Frame error of picking the largest coordinate, the optimal single-frame
    // rule for one-hot means under isotropic noise.
    inline double argmax_frame_error(std::vector<synthetic_utterance> const& corpus)
    {
        long errors = 0, total = 0;
        for (auto const& u : corpus) {
            auto gold = u.frame_labels();
            for (int r = 0; r < u.frames.num_frames(); ++r) {
                auto x = u.frames.row(r);
                int best = static_cast<int>(std::max_element(x.begin(), x.end()) - x.begin());
                errors += best != gold[r];
                ++total;
            }
        }
        return total ? static_cast<double>(errors) / total : 0.0;
    }

    // Key-value spec file ("key = value", '#' comments). Keys: labels,
    // min_duration, max_duration, duration_shape, sigma, utterances, seed,
    // mean_segments, self_loops, max_segments, and optionally
    // transitions.<row> = <L+1 probabilities> for rows 0 (start) .. L.
    inline generator_spec read_generator_spec(std::istream& is)
    {
        generator_spec spec;
        double mean_segments = 12;
        bool self_loops = false;
        std::vector<std::pair<int, std::vector<double>>> rows;
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
            if (eq == std::string::npos) {
                throw parse_error(lineno, "expected 'key = value'");
            }
            auto keys = text::split(std::string_view(line).substr(0, eq));
            auto vals = text::split(std::string_view(line).substr(eq + 1));
            if (keys.size() != 1 || vals.empty()) {
                throw parse_error(lineno, "expected 'key = value'");
            }
            std::string key(keys[0]);
            auto num = [&] { return text::parse_finite(vals[0], lineno); };
            auto integer = [&] { return static_cast<int>(text::parse_int(vals[0], lineno)); };
            if (key == "labels") spec.num_labels = integer();
            else if (key == "min_duration") spec.min_duration = integer();
            else if (key == "max_duration") spec.max_duration = integer();
            else if (key == "duration_shape") spec.duration_shape = num();
            else if (key == "sigma") spec.sigma = num();
            else if (key == "utterances") spec.utterances = integer();
            else if (key == "seed") spec.seed = static_cast<std::uint64_t>(text::parse_int(vals[0], lineno));
            else if (key == "mean_segments") mean_segments = num();
            else if (key == "self_loops") self_loops = vals[0] == "true" || vals[0] == "1";
            else if (key == "max_segments") spec.max_segments = integer();
            else if (key.rfind("transitions.", 0) == 0) {
                int row = static_cast<int>(text::parse_int(std::string_view(key).substr(12), lineno));
                std::vector<double> v;
                for (auto t : vals) {
                    v.push_back(text::parse_finite(t, lineno));
                }
                rows.emplace_back(row, std::move(v));
            } else {
                throw parse_error(lineno, "unknown key '" + key + "'");
            }
        }
        spec.transitions = random_bigram(spec.num_labels, mean_segments, spec.seed, self_loops);
        int n = spec.num_labels + 1;
        for (auto& [row, v] : rows) {
            if (row < 0 || row >= n || static_cast<int>(v.size()) != n) {
                throw error("transition row " + std::to_string(row) + " has the wrong shape");
            }
            std::copy(v.begin(), v.end(), spec.transitions.begin() + row * n);
        }
        spec.check();
        return spec;
    }

}
