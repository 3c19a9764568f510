// dsc/pruning.hpp

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

#include "dsc/inference.hpp"
#include "dsc/lattice.hpp"

#include <string>
#include <vector>

namespace dsc {

    enum class prune_method { beam, edge, vertex };

    inline prune_method parse_prune_method(std::string const& s)
    {
        if (s == "beam") return prune_method::beam;
        if (s == "edge") return prune_method::edge;
        if (s == "vertex") return prune_method::vertex;
        throw error("unknown pruning method '" + s + "'");
    }

    inline char const* prune_method_name(prune_method m)
    {
        switch (m) {
        case prune_method::beam: return "beam";
        case prune_method::edge: return "edge";
        default: return "vertex";
        }
    }

    struct prune_params {
        prune_method method = prune_method::edge;
        double alpha = 0.5;

        void check() const
        {
            if (!(alpha >= 0 && alpha <= 1)) {
                throw error("pruning alpha must lie in [0, 1]");
            }
        }
    };

    struct prune_info {
        double threshold = 0;          // global threshold (edge and vertex pruning)
        std::vector<int> edge_origin;  // output edge -> input edge
    };

    // Threshold interpolating between the maximum and the mean of the finite
    // values, never above the maximum.
    inline double max_mean_threshold(std::vector<double> const& values, double alpha)
    {
        double mx = neg_inf, sum = 0;
        long n = 0;
        for (double v : values) {
            if (v == neg_inf) {
                continue;
            }
            mx = std::max(mx, v);
            sum += v;
            ++n;
        }
        if (n == 0) {
            return neg_inf;
        }
        return std::min(mx, alpha * mx + (1 - alpha) * (sum / n));
    }

    // Beam pruning during a topological sweep. At each vertex v reached by a
    // surviving edge, with d(v) the best partial score so far,
    //   t = alpha * (d(v) + max w) + (1 - alpha) * (d(v) + min w)
    // and only edges with d(v) + w(e) > t survive. Vertices never reached are
    // skipped without touching their edges. The output is trimmed.
    inline fst beam_prune(fst const& f, double alpha, prune_info* info = nullptr)
    {
        prune_params { prune_method::beam, alpha }.check();
        int nv = f.vertex_count();
        std::vector<double> d(nv, neg_inf);
        std::vector<bool> frontier(nv, false);
        for (int v : f.initials()) {
            d[v] = 0;
            frontier[v] = true;
        }
        std::vector<char> keep(f.edge_count(), 0);
        for (int v : f.order()) {
            if (!frontier[v]) {
                continue;
            }
            frontier[v] = false;
            auto adj = f.out_edges(v);
            if (adj.empty()) {
                continue;
            }
            double wmax = neg_inf, wmin = -neg_inf;
            for (int e : adj) {
                wmax = std::max(wmax, f.weight(e));
                wmin = std::min(wmin, f.weight(e));
            }
            double smax = d[v] + wmax, smin = d[v] + wmin;
            double t = alpha * smax + (1 - alpha) * smin;
            for (int e : adj) {
                double s = d[v] + f.weight(e);
                if (s > t) {
                    keep[e] = 1;
                    int h = f.edge(e).head;
                    d[h] = std::max(d[h], s);
                    frontier[h] = true;
                }
            }
        }
        std::vector<int> origin;
        fst result = trimmed_subgraph(f, keep, &origin);
        if (info) {
            info->threshold = neg_inf;
            info->edge_origin = std::move(origin);
        }
        return result;
    }

    // Keeps edges whose max-marginal reaches
    //   t = alpha * max gamma(e) + (1 - alpha) * mean gamma(e).
    // Any path scoring at least t keeps all of its edges.
    inline fst edge_prune(fst const& f, double alpha, prune_info* info = nullptr)
    {
        prune_params { prune_method::edge, alpha }.check();
        auto mm = max_marginals(f);
        double t = max_mean_threshold(mm.edge, alpha);
        double tol = mm.tolerance();
        std::vector<char> keep(f.edge_count(), 0);
        for (int e = 0; e < f.edge_count(); ++e) {
            keep[e] = mm.edge[e] != neg_inf && mm.edge[e] >= t - tol;
        }
        std::vector<int> origin;
        fst result = trimmed_subgraph(f, keep, &origin);
        if (info) {
            info->threshold = t;
            info->edge_origin = std::move(origin);
        }
        return result;
    }

    // Keeps vertices whose max-marginal reaches
    //   t = alpha * max gamma(v) + (1 - alpha) * mean gamma(v)
    // and the edges between surviving vertices. A removed vertex is a time
    // point ruled out as a segment boundary.
    inline fst vertex_prune(fst const& f, double alpha, prune_info* info = nullptr)
    {
        prune_params { prune_method::vertex, alpha }.check();
        auto mm = max_marginals(f);
        double t = max_mean_threshold(mm.vertex, alpha);
        double tol = mm.tolerance();
        std::vector<bool> alive(f.vertex_count());
        for (int v = 0; v < f.vertex_count(); ++v) {
            alive[v] = mm.vertex[v] != neg_inf && mm.vertex[v] >= t - tol;
        }
        std::vector<char> keep(f.edge_count(), 0);
        for (int e = 0; e < f.edge_count(); ++e) {
            keep[e] = alive[f.edge(e).tail] && alive[f.edge(e).head];
        }
        std::vector<int> origin;
        fst result = trimmed_subgraph(f, keep, &origin);
        if (info) {
            info->threshold = t;
            info->edge_origin = std::move(origin);
        }
        return result;
    }

    inline fst prune(fst const& f, prune_params const& p, prune_info* info = nullptr)
    {
        switch (p.method) {
        case prune_method::beam: return beam_prune(f, p.alpha, info);
        case prune_method::edge: return edge_prune(f, p.alpha, info);
        default: return vertex_prune(f, p.alpha, info);
        }
    }

}
