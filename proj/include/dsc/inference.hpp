// dsc/inference.hpp

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

#include "dsc/lattice.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace dsc {

    // The lattice has no path from an initial to a final vertex.
    struct no_path_error : error {
        no_path_error() : error("lattice has no complete path") {}
    };

    inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    struct path_result {
        std::vector<int> edges;
        segment_path path;
        double score = 0;
    };

    namespace detail {

        // Viterbi forward pass. back[v] is the chosen incoming edge, -1 when
        // the best partial path starts at v, -2 when v is unreachable. Ties go
        // to the lowest edge index, and starting at v beats any edge.
        inline void forward_max(fst const& f, std::vector<double>& d, std::vector<int>& back)
        {
            int nv = f.vertex_count();
            d.assign(nv, neg_inf);
            back.assign(nv, -2);
            for (int v : f.initials()) {
                d[v] = 0;
                back[v] = -1;
            }
            for (int v : f.order()) {
                if (back[v] == -2) {
                    continue;
                }
                for (int e : f.out_edges(v)) {
                    auto const& ed = f.edge(e);
                    double cand = d[v] + ed.weight;
                    int h = ed.head;
                    if (cand > d[h] || (cand == d[h] && back[h] >= 0 && e < back[h])) {
                        d[h] = cand;
                        back[h] = e;
                    }
                }
            }
        }

        inline std::vector<double> backward_max(fst const& f)
        {
            std::vector<double> b(f.vertex_count(), neg_inf);
            auto const& order = f.order();
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                int v = *it;
                double best = f.is_final(v) ? 0.0 : neg_inf;
                for (int e : f.out_edges(v)) {
                    auto const& ed = f.edge(e);
                    if (b[ed.head] == neg_inf) {
                        continue;
                    }
                    best = std::max(best, ed.weight + b[ed.head]);
                }
                b[v] = best;
            }
            return b;
        }

    }

    // Highest-scoring I -> F path. Among equal scores the path whose edge
    // indices, read from the end, are lexicographically smallest wins.
    inline path_result best_path(fst const& f)
    {
        std::vector<double> d;
        std::vector<int> back;
        detail::forward_max(f, d, back);

        int best = -1;
        for (int v : f.finals()) {
            if (back[v] == -2) {
                continue;
            }
            if (best < 0 || d[v] > d[best]
                || (d[v] == d[best] && (back[v] < back[best]
                    || (back[v] == back[best] && v < best)))) {
                best = v;
            }
        }
        if (best < 0) {
            throw no_path_error();
        }

        path_result result;
        result.score = d[best];
        for (int v = best; back[v] >= 0; v = f.edge(back[v]).tail) {
            result.edges.push_back(back[v]);
        }
        std::reverse(result.edges.begin(), result.edges.end());
        for (int e : result.edges) {
            result.path.segments.push_back(f.segment_of(e));
        }
        return result;
    }

    inline double path_score(fst const& f, std::span<int const> edges)
    {
        double s = 0;
        for (int e : edges) {
            s += f.weight(e);
        }
        return s;
    }

    struct max_marginals_result {
        std::vector<double> edge;      // gamma(e); -inf for edges on no path
        std::vector<double> vertex;    // gamma(v)
        std::vector<double> forward;   // best partial score I -> v
        std::vector<double> backward;  // best partial score v -> F
        double best = neg_inf;

        // Bound on the rounding error of any gamma, for threshold tests.
        double tolerance() const
        {
            double scale = 0;
            for (std::size_t v = 0; v < forward.size(); ++v) {
                if (forward[v] != neg_inf && backward[v] != neg_inf) {
                    scale = std::max(scale, std::abs(forward[v]) + std::abs(backward[v]));
                }
            }
            return 1e-9 * (1.0 + scale);
        }
    };

    // One forward and one backward sweep. With `strict`, edges that lie on no
    // complete path are an error; otherwise their gamma is -inf.
    inline max_marginals_result max_marginals(fst const& f, bool strict = false)
    {
        max_marginals_result r;
        std::vector<int> back;
        detail::forward_max(f, r.forward, back);
        r.backward = detail::backward_max(f);

        r.edge.resize(f.edge_count());
        for (int e = 0; e < f.edge_count(); ++e) {
            auto const& ed = f.edge(e);
            double a = r.forward[ed.tail], b = r.backward[ed.head];
            if (a == neg_inf || b == neg_inf) {
                if (strict) {
                    throw error("edge " + std::to_string(e) + " lies on no complete path");
                }
                r.edge[e] = neg_inf;
            } else {
                r.edge[e] = a + ed.weight + b;
            }
        }
        r.vertex.resize(f.vertex_count());
        for (int v = 0; v < f.vertex_count(); ++v) {
            double a = r.forward[v], b = r.backward[v];
            r.vertex[v] = (a == neg_inf || b == neg_inf) ? neg_inf : a + b;
        }
        for (int v : f.finals()) {
            r.best = std::max(r.best, r.forward[v]);
        }
        return r;
    }

    struct edit_result {
        int distance = 0;
        int substitutions = 0;
        int insertions = 0;
        int deletions = 0;
    };

    // Unit-cost Levenshtein distance. Insertions are extra hypothesis labels,
    // deletions are missed reference labels.
    inline edit_result edit_distance(std::span<int const> hyp, std::span<int const> ref)
    {
        int n = static_cast<int>(hyp.size()), m = static_cast<int>(ref.size());
        std::vector<int> dp(static_cast<std::size_t>(n + 1) * (m + 1));
        auto at = [m](int i, int j) { return i * (m + 1) + j; };
        for (int i = 0; i <= n; ++i) {
            dp[at(i, 0)] = i;
        }
        for (int j = 0; j <= m; ++j) {
            dp[at(0, j)] = j;
        }
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= m; ++j) {
                dp[at(i, j)] = std::min({ dp[at(i - 1, j - 1)] + (hyp[i - 1] != ref[j - 1]),
                    dp[at(i - 1, j)] + 1, dp[at(i, j - 1)] + 1 });
            }
        }
        edit_result r;
        r.distance = dp[at(n, m)];
        int i = n, j = m;
        while (i > 0 || j > 0) {
            if (i > 0 && j > 0 && dp[at(i, j)] == dp[at(i - 1, j - 1)] + (hyp[i - 1] != ref[j - 1])) {
                r.substitutions += hyp[i - 1] != ref[j - 1];
                --i;
                --j;
            } else if (j > 0 && dp[at(i, j)] == dp[at(i, j - 1)] + 1) {
                ++r.deletions;
                --j;
            } else {
                ++r.insertions;
                --i;
            }
        }
        return r;
    }

    inline double error_rate(std::span<int const> hyp, std::span<int const> ref)
    {
        if (ref.empty()) {
            throw error("error rate is undefined for an empty reference");
        }
        return static_cast<double>(edit_distance(hyp, ref).distance) / ref.size();
    }

    struct oracle_result {
        int distance = 0;
        double rate = 0;
        std::vector<int> edges;
        segment_path path;
    };

    // Minimum edit distance between any complete path and the reference, by
    // dynamic programming over (vertex, reference position).
    inline oracle_result oracle_error_rate(fst const& f, std::span<int const> ref)
    {
        if (ref.empty()) {
            throw error("oracle error rate is undefined for an empty reference");
        }
        int m = static_cast<int>(ref.size());
        int nv = f.vertex_count();
        constexpr int inf = std::numeric_limits<int>::max() / 2;
        auto at = [m](int v, int j) { return static_cast<std::size_t>(v) * (m + 1) + j; };

        // back: -1 start, -2 deletion at the same vertex, otherwise 2e (+1 when
        // the edge consumed a reference label).
        std::vector<int> cost(static_cast<std::size_t>(nv) * (m + 1), inf);
        std::vector<int> back(cost.size(), -3);
        for (int v : f.initials()) {
            cost[at(v, 0)] = 0;
            back[at(v, 0)] = -1;
        }
        for (int v : f.order()) {
            for (int j = 1; j <= m; ++j) {
                if (cost[at(v, j - 1)] + 1 < cost[at(v, j)]) {
                    cost[at(v, j)] = cost[at(v, j - 1)] + 1;
                    back[at(v, j)] = -2;
                }
            }
            for (int e : f.out_edges(v)) {
                auto const& ed = f.edge(e);
                for (int j = 0; j <= m; ++j) {
                    if (cost[at(v, j)] >= inf) {
                        continue;
                    }
                    if (cost[at(v, j)] + 1 < cost[at(ed.head, j)]) {
                        cost[at(ed.head, j)] = cost[at(v, j)] + 1;
                        back[at(ed.head, j)] = 2 * e;
                    }
                    if (j < m) {
                        int c = cost[at(v, j)] + (ed.label != ref[j]);
                        if (c < cost[at(ed.head, j + 1)]) {
                            cost[at(ed.head, j + 1)] = c;
                            back[at(ed.head, j + 1)] = 2 * e + 1;
                        }
                    }
                }
            }
        }

        int best = -1;
        for (int v : f.finals()) {
            if (cost[at(v, m)] < inf && (best < 0 || cost[at(v, m)] < cost[at(best, m)])) {
                best = v;
            }
        }
        if (best < 0) {
            throw no_path_error();
        }

        oracle_result r;
        r.distance = cost[at(best, m)];
        r.rate = static_cast<double>(r.distance) / m;
        int v = best, j = m;
        while (back[at(v, j)] != -1) {
            int b = back[at(v, j)];
            if (b == -2) {
                --j;
                continue;
            }
            int e = b / 2;
            r.edges.push_back(e);
            if (b % 2) {
                --j;
            }
            v = f.edge(e).tail;
        }
        std::reverse(r.edges.begin(), r.edges.end());
        for (int e : r.edges) {
            r.path.segments.push_back(f.segment_of(e));
        }
        return r;
    }

    // Edges per reference label.
    inline double density(fst const& f, std::size_t ref_length)
    {
        if (ref_length == 0) {
            throw error("density is undefined for an empty reference");
        }
        return static_cast<double>(f.edge_count()) / ref_length;
    }

    inline double real_time_factor(double processing_seconds, double audio_seconds)
    {
        if (!(audio_seconds > 0)) {
            throw error("real-time factor needs a positive audio duration");
        }
        return processing_seconds / audio_seconds;
    }

    // Corpus RTF: total processing time over total audio time.
    struct rtf_accumulator {
        double processing = 0;
        double audio = 0;

        void add(double processing_seconds, double audio_seconds)
        {
            processing += processing_seconds;
            audio += audio_seconds;
        }

        double value() const { return real_time_factor(processing, audio); }
    };

}
