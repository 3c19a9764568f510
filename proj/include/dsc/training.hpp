// dsc/training.hpp

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

#include "dsc/features.hpp"
#include "dsc/inference.hpp"
#include "dsc/lattice.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dsc {

    // A lattice scored by one model. With a bigram_lm template the lattice is
    // expanded so every vertex also knows the previous label.
    struct decoding_graph {
        fst graph;
        std::vector<int> origin;        // graph edge -> lattice edge
        std::vector<segment_aux> aux;   // per graph edge
    };

    inline decoding_graph build_decoding_graph(fst const& lattice, featurizer const& fz,
        std::span<double const> theta)
    {
        decoding_graph g;
        if (!fz.templates().has(template_kind::bigram_lm)) {
            std::vector<double> weights(lattice.edge_count());
            g.origin.resize(lattice.edge_count());
            g.aux.resize(lattice.edge_count());
            for (int e = 0; e < lattice.edge_count(); ++e) {
                g.origin[e] = e;
                g.aux[e].lattice_score = lattice.weight(e);
                g.aux[e].ends_utterance = lattice.is_final(lattice.edge(e).head);
                weights[e] = fz.score(theta, lattice.segment_of(e), g.aux[e]);
            }
            g.graph = lattice.with_weights(weights);
            return g;
        }

        int nl = fz.templates().num_labels();
        int histories = nl + 1;
        int start = nl;
        std::vector<int> state(static_cast<std::size_t>(lattice.vertex_count()) * histories, -1);
        std::vector<int> times;
        std::vector<int> initials, finals;
        auto get = [&](int v, int h) {
            int& s = state[static_cast<std::size_t>(v) * histories + h];
            if (s < 0) {
                s = static_cast<int>(times.size());
                times.push_back(lattice.time(v));
                if (lattice.is_final(v)) {
                    finals.push_back(s);
                }
            }
            return s;
        };
        for (int v : lattice.initials()) {
            initials.push_back(get(v, start));
        }
        std::vector<fst_edge> edges;
        for (int v : lattice.order()) {
            for (int h = 0; h < histories; ++h) {
                int s = state[static_cast<std::size_t>(v) * histories + h];
                if (s < 0) {
                    continue;
                }
                for (int e : lattice.out_edges(v)) {
                    auto const& ed = lattice.edge(e);
                    int t = get(ed.head, ed.label);
                    segment_aux aux;
                    aux.lattice_score = ed.weight;
                    aux.prev_label = h;
                    aux.ends_utterance = lattice.is_final(ed.head);
                    double w = fz.score(theta, lattice.segment_of(e), aux);
                    edges.push_back(fst_edge { s, t, ed.label, w });
                    g.origin.push_back(e);
                    g.aux.push_back(aux);
                }
            }
        }
        g.graph = fst(lattice.num_frames(), std::move(times), std::move(edges),
            std::move(initials), std::move(finals));
        return g;
    }

    // 1 - overlap / max(|e|, |g|) against the gold segment g overlapping e the
    // most (earliest on ties), or 1 when the labels differ.
    inline double overlap_cost(segment const& e, segment_path const& gold)
    {
        if (gold.segments.empty()) {
            throw error("overlap cost needs a non-empty gold path");
        }
        if (e.start < gold.segments.front().start || e.end > gold.segments.back().end
            || e.end <= e.start) {
            throw error("segment lies outside the utterance");
        }
        auto const& gs = gold.segments;
        auto it = std::upper_bound(gs.begin(), gs.end(), e.start,
            [](int t, segment const& g) { return t < g.end; });
        segment const* best = nullptr;
        int best_overlap = -1;
        for (; it != gs.end() && it->start < e.end; ++it) {
            int overlap = std::min(e.end, it->end) - std::max(e.start, it->start);
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = &*it;
            }
        }
        if (!best || best->label != e.label) {
            return 1.0;
        }
        return 1.0 - static_cast<double>(best_overlap) / std::max(e.duration(), best->duration());
    }

    inline void add_cost(decoding_graph& g, fst const& lattice, segment_path const& gold,
        double cost_scale)
    {
        if (cost_scale == 0) {
            return;
        }
        std::vector<double> w(g.graph.edge_count());
        for (int e = 0; e < g.graph.edge_count(); ++e) {
            w[e] = g.graph.weight(e) + cost_scale * overlap_cost(lattice.segment_of(g.origin[e]), gold);
        }
        g.graph = g.graph.with_weights(w);
    }

    struct decode_result {
        path_result best;          // over the decoding graph
        segment_path path;
        std::vector<int> lattice_edges;
    };

    inline decode_result decode_graph(decoding_graph const& g)
    {
        decode_result r;
        r.best = best_path(g.graph);
        r.path = r.best.path;
        for (int e : r.best.edges) {
            r.lattice_edges.push_back(g.origin[e]);
        }
        return r;
    }

    // argmax over paths of score + cost_scale * overlap cost.
    inline decode_result cost_augmented_decode(model const& m, featurizer const& fz,
        fst const& lattice, segment_path const& gold, double cost_scale)
    {
        auto g = build_decoding_graph(lattice, fz, m.theta);
        add_cost(g, lattice, gold, cost_scale);
        return decode_graph(g);
    }

    // Lattice edges spelling out `gold`, or nothing when the lattice lacks it.
    inline std::optional<std::vector<int>> find_path(fst const& lattice, segment_path const& gold)
    {
        std::vector<int> result;
        std::vector<int> frontier;
        for (int v : lattice.initials()) {
            if (!gold.segments.empty() && lattice.time(v) == gold.segments.front().start) {
                frontier.push_back(v);
            }
        }
        // Vertex times are unique in the lattices built here; with duplicates
        // the first matching vertex is followed.
        int v = frontier.empty() ? -1 : frontier.front();
        for (auto const& s : gold.segments) {
            if (v < 0) {
                return std::nullopt;
            }
            int next = -1;
            for (int e : lattice.out_edges(v)) {
                auto const& ed = lattice.edge(e);
                if (ed.label == s.label && lattice.time(ed.head) == s.end) {
                    result.push_back(e);
                    next = ed.head;
                    break;
                }
            }
            v = next;
        }
        if (v < 0 || !lattice.is_final(v)) {
            return std::nullopt;
        }
        return result;
    }

    // Stand-in target when the gold path was pruned away: a path of minimum
    // edit distance to the gold labels, and among those the one of least
    // total overlap cost, so the target agrees with the cost it trains under.
    inline std::vector<int> oracle_target(fst const& lattice, segment_path const& gold)
    {
        auto ref = gold.labels();
        if (ref.empty()) {
            throw error("oracle target needs a non-empty gold path");
        }
        using cost_t = std::pair<int, double>;
        int m = static_cast<int>(ref.size());
        int nv = lattice.vertex_count();
        cost_t const inf { std::numeric_limits<int>::max(), 0.0 };
        auto at = [m](int v, int j) { return static_cast<std::size_t>(v) * (m + 1) + j; };
        std::vector<cost_t> cost(static_cast<std::size_t>(nv) * (m + 1), inf);
        // back: -1 start, -2 deletion at the same vertex, otherwise 2e (+1
        // when the edge consumed a reference label).
        std::vector<int> back(cost.size(), -3);
        for (int v : lattice.initials()) {
            cost[at(v, 0)] = { 0, 0.0 };
            back[at(v, 0)] = -1;
        }
        auto relax = [&](std::size_t to, cost_t c, int b) {
            if (c < cost[to]) {
                cost[to] = c;
                back[to] = b;
            }
        };
        for (int v : lattice.order()) {
            for (int j = 1; j <= m; ++j) {
                if (cost[at(v, j - 1)] != inf) {
                    relax(at(v, j), { cost[at(v, j - 1)].first + 1, cost[at(v, j - 1)].second }, -2);
                }
            }
            for (int e : lattice.out_edges(v)) {
                auto const& ed = lattice.edge(e);
                double oc = overlap_cost(lattice.segment_of(e), gold);
                for (int j = 0; j <= m; ++j) {
                    auto c = cost[at(v, j)];
                    if (c == inf) {
                        continue;
                    }
                    relax(at(ed.head, j), { c.first + 1, c.second + oc }, 2 * e);
                    if (j < m) {
                        relax(at(ed.head, j + 1), { c.first + (ed.label != ref[j]), c.second + oc }, 2 * e + 1);
                    }
                }
            }
        }
        int best = -1;
        for (int v : lattice.finals()) {
            if (cost[at(v, m)] != inf && (best < 0 || cost[at(v, m)] < cost[at(best, m)])) {
                best = v;
            }
        }
        if (best < 0) {
            throw no_path_error();
        }
        std::vector<int> edges;
        for (int v = best, j = m; back[at(v, j)] != -1;) {
            int b = back[at(v, j)];
            if (b == -2) {
                --j;
                continue;
            }
            edges.push_back(b / 2);
            j -= b % 2;
            v = lattice.edge(b / 2).tail;
        }
        std::reverse(edges.begin(), edges.end());
        return edges;
    }

    inline void accumulate(sparse_vector& into, sparse_vector const& v, double scale = 1.0)
    {
        for (auto [i, x] : v) {
            into.emplace_back(i, scale * x);
        }
    }

    // Sums duplicate indices and drops exact zeros; result sorted by index.
    inline sparse_vector compact(sparse_vector v)
    {
        std::sort(v.begin(), v.end(), [](auto const& a, auto const& b) { return a.first < b.first; });
        sparse_vector out;
        for (auto [i, x] : v) {
            if (!out.empty() && out.back().first == i) {
                out.back().second += x;
            } else {
                out.emplace_back(i, x);
            }
        }
        std::erase_if(out, [](auto const& p) { return p.second == 0; });
        return out;
    }

    // Feature vector and score of a lattice path, with the auxiliary inputs
    // the path itself implies.
    inline std::pair<sparse_vector, double> path_features(featurizer const& fz,
        std::span<double const> theta, fst const& lattice, std::span<int const> edges)
    {
        sparse_vector phi;
        double s = 0;
        int prev = fz.templates().num_labels();
        for (std::size_t k = 0; k < edges.size(); ++k) {
            int e = edges[k];
            segment_aux aux;
            aux.lattice_score = lattice.weight(e);
            aux.prev_label = prev;
            aux.ends_utterance = lattice.is_final(lattice.edge(e).head);
            auto seg = lattice.segment_of(e);
            auto f = fz(seg, aux);
            s += dot(theta, f);
            accumulate(phi, f);
            prev = seg.label;
        }
        return { std::move(phi), s };
    }

    struct hinge_result {
        double loss = 0;
        sparse_vector gradient;
        bool gold_unreachable = false;   // the oracle path stood in for gold
        decode_result decoded;
    };

    // max(0, max_y [score(y) + cost(y)] - score(gold)) and its subgradient
    // phi(y_hat) - phi(gold).
    inline hinge_result hinge_subgradient(model const& m, featurizer const& fz,
        fst const& lattice, segment_path const& gold, double cost_scale)
    {
        hinge_result r;
        auto target = find_path(lattice, gold);
        if (!target) {
            r.gold_unreachable = true;
            target = oracle_target(lattice, gold);
        }

        auto g = build_decoding_graph(lattice, fz, m.theta);
        add_cost(g, lattice, gold, cost_scale);
        r.decoded = decode_graph(g);

        auto [phi_gold, gold_score] = path_features(fz, m.theta, lattice, *target);
        // Decoding the target itself costs nothing, whatever the rounding.
        bool same = r.decoded.lattice_edges == *target;
        r.loss = same ? 0.0 : std::max(0.0, r.decoded.best.score - gold_score);
        if (r.loss > 0) {
            sparse_vector grad;
            for (int ge : r.decoded.best.edges) {
                accumulate(grad, fz(g.graph.segment_of(ge), g.aux[ge]));
            }
            accumulate(grad, phi_gold, -1.0);
            r.gradient = compact(std::move(grad));
        }
        return r;
    }

    // Per-coordinate AdaGrad:
    //   G_i += g_i^2;  theta_i -= step * g_i / (sqrt(G_i) + 1e-8)
    // Coordinates absent from the sparse gradient are untouched.
    inline void adagrad_update(std::vector<double>& theta, std::vector<double>& sum_sq,
        sparse_vector const& grad, double step_size)
    {
        if (sum_sq.size() != theta.size()) {
            throw error("AdaGrad accumulator dimension mismatch");
        }
        for (auto [i, g] : grad) {
            if (!std::isfinite(g)) {
                throw error("non-finite gradient component " + std::to_string(i));
            }
        }
        for (auto [i, g] : grad) {
            sum_sq[i] += g * g;
            theta[i] -= step_size * g / (std::sqrt(sum_sq[i]) + 1e-8);
        }
    }

    class adagrad {
    public:
        explicit adagrad(std::size_t dim = 0) : sum_sq_(dim, 0.0) {}

        void update(std::vector<double>& theta, sparse_vector const& grad, double step_size)
        {
            adagrad_update(theta, sum_sq_, grad, step_size);
        }

        std::vector<double> const& accumulated() const { return sum_sq_; }

    private:
        std::vector<double> sum_sq_;
    };

    struct train_config {
        double step_size = 0.1;
        int epochs = 1;
        bool early_stopping = true;
        double cost_scale = 1.0;
        std::uint64_t seed = 1;

        void check() const
        {
            if (!(step_size >= 0) || epochs < 1 || !(cost_scale >= 0)) {
                throw error("invalid training configuration");
            }
        }
    };

    // One utterance for a cascade pass. Without a lattice the dense
    // hypothesis space is built on the fly.
    struct utterance {
        std::string id;
        posterior_matrix post;
        segment_path gold;
        std::optional<fst> lattice;
    };

    inline fst hypothesis_of(utterance const& u, int max_duration)
    {
        if (u.lattice) {
            return *u.lattice;
        }
        return build_hypothesis_space(u.post.num_frames(), u.post.num_labels(), max_duration);
    }

    // Best path of one utterance, or nothing if its lattice is empty.
    inline std::optional<decode_result> decode_utterance(model const& m, utterance const& u,
        bigram_table const* lm)
    {
        featurizer fz(m.templates, u.post, lm);
        auto lattice = hypothesis_of(u, m.templates.max_duration());
        try {
            return decode_graph(build_decoding_graph(lattice, fz, m.theta));
        } catch (no_path_error const&) {
            return std::nullopt;
        }
    }

    struct corpus_errors {
        long distance = 0;
        long reference = 0;
        int failed = 0;   // utterances without a path

        double rate() const { return reference ? static_cast<double>(distance) / reference : 0.0; }
    };

    // Corpus PER: total edit distance over total reference length. An
    // utterance with no path counts as all deletions.
    inline corpus_errors evaluate(model const& m, std::span<utterance const> data,
        bigram_table const* lm)
    {
        corpus_errors r;
        for (auto const& u : data) {
            auto ref = u.gold.labels();
            auto d = decode_utterance(m, u, lm);
            if (!d) {
                ++r.failed;
                r.distance += static_cast<long>(ref.size());
            } else {
                r.distance += edit_distance(d->path.labels(), ref).distance;
            }
            r.reference += static_cast<long>(ref.size());
        }
        return r;
    }

    struct epoch_metrics {
        int epoch = 0;
        double train_loss = 0;     // mean hinge loss per utterance
        double dev_per = 0;
        double wall_seconds = 0;   // cumulative
        int flagged = 0;           // utterances trained against the oracle path
    };

    struct train_result {
        model best;
        int best_epoch = 0;
        std::vector<epoch_metrics> epochs;
    };

    // Mini-batch size 1, seeded shuffle per epoch. Keeps the snapshot with
    // the lowest dev PER when early stopping is on (the last one otherwise).
    inline train_result train_pass(model init, std::span<utterance const> train,
        std::span<utterance const> dev, train_config const& cfg, bigram_table const* lm = nullptr)
    {
        cfg.check();
        init.check();
        if (train.empty()) {
            throw error("empty training corpus");
        }

        train_result result;
        model current = std::move(init);
        adagrad opt(current.theta.size());
        std::mt19937_64 rng(cfg.seed);
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        double best_per = std::numeric_limits<double>::infinity();
        auto begin = std::chrono::steady_clock::now();

        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            double loss = 0;
            int flagged = 0, used = 0;
            for (auto i : order) {
                auto const& u = train[i];
                featurizer fz(current.templates, u.post, lm);
                auto lattice = hypothesis_of(u, current.templates.max_duration());
                hinge_result h;
                try {
                    h = hinge_subgradient(current, fz, lattice, u.gold, cfg.cost_scale);
                } catch (no_path_error const&) {
                    ++flagged;
                    continue;
                }
                flagged += h.gold_unreachable;
                ++used;
                loss += h.loss;
                opt.update(current.theta, h.gradient, cfg.step_size);
            }
            if (used == 0) {
                throw error("no training utterance has a usable path");
            }
            if (flagged == static_cast<int>(train.size())) {
                throw error("every training utterance has its gold path pruned away");
            }

            epoch_metrics em;
            em.epoch = epoch;
            em.train_loss = loss / used;
            em.flagged = flagged;
            em.dev_per = dev.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : evaluate(current, dev, lm).rate();
            em.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
            result.epochs.push_back(em);

            bool better = !cfg.early_stopping || dev.empty() || em.dev_per < best_per;
            if (better) {
                best_per = em.dev_per;
                result.best = current;
                result.best_epoch = epoch;
            }
        }
        return result;
    }

}
