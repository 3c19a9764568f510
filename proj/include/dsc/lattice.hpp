// dsc/lattice.hpp

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
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace dsc {

    // A labeled segment between two frame boundaries. Boundary u means
    // "after frame u", so the segment covers frames start+1 .. end (1-based).
    struct segment {
        int start = 0;
        int end = 0;
        int label = 0;

        int duration() const { return end - start; }

        friend auto operator<=>(segment const&, segment const&) = default;
    };

    // Connected segments, in time order.
    struct segment_path {
        std::vector<segment> segments;

        std::vector<int> labels() const
        {
            std::vector<int> result;
            result.reserve(segments.size());
            for (auto& s : segments) {
                result.push_back(s.label);
            }
            return result;
        }

        bool connected() const
        {
            for (std::size_t k = 0; k < segments.size(); ++k) {
                if (segments[k].end <= segments[k].start) {
                    return false;
                }
                if (k > 0 && segments[k].start != segments[k - 1].end) {
                    return false;
                }
            }
            return true;
        }

        // Connected, starts at 0 and ends at num_frames.
        bool covers(int num_frames) const
        {
            if (segments.empty()) {
                return num_frames == 0;
            }
            return connected() && segments.front().start == 0
                && segments.back().end == num_frames;
        }

        friend bool operator==(segment_path const&, segment_path const&) = default;
    };

    struct fst_edge {
        int tail = 0;
        int head = 0;
        int label = 0;        // input and output symbol
        double weight = 0;
    };

    // Acyclic weighted acceptor over segments. Vertices carry frame-boundary
    // times that strictly increase along every edge. Immutable once built.
    class fst {
    public:
        fst() = default;

        fst(int num_frames, std::vector<int> times, std::vector<fst_edge> edges,
            std::vector<int> initials, std::vector<int> finals)
            : num_frames_(num_frames), times_(std::move(times)), edges_(std::move(edges)),
              initials_(std::move(initials)), finals_(std::move(finals))
        {
            if (num_frames_ < 0) {
                throw error("negative frame count");
            }
            int nv = vertex_count();
            for (int t : times_) {
                if (t < 0) {
                    throw error("negative vertex time");
                }
            }
            out_.assign(nv, {});
            in_.assign(nv, {});
            for (int e = 0; e < edge_count(); ++e) {
                auto const& ed = edges_[e];
                if (ed.tail < 0 || ed.tail >= nv || ed.head < 0 || ed.head >= nv) {
                    throw error("edge " + std::to_string(e) + " references a missing vertex");
                }
                if (times_[ed.head] <= times_[ed.tail]) {
                    throw error("edge " + std::to_string(e) + " does not advance in time");
                }
                if (!std::isfinite(ed.weight)) {
                    throw error("edge " + std::to_string(e) + " has a non-finite weight");
                }
                out_[ed.tail].push_back(e);
                in_[ed.head].push_back(e);
            }
            is_initial_.assign(nv, false);
            is_final_.assign(nv, false);
            for (int v : initials_) {
                if (v < 0 || v >= nv) {
                    throw error("initial vertex out of range");
                }
                is_initial_[v] = true;
            }
            for (int v : finals_) {
                if (v < 0 || v >= nv) {
                    throw error("final vertex out of range");
                }
                is_final_[v] = true;
            }
            order_ = compute_order();
        }

        int num_frames() const { return num_frames_; }
        int vertex_count() const { return static_cast<int>(times_.size()); }
        int edge_count() const { return static_cast<int>(edges_.size()); }

        int time(int v) const { return times_[v]; }
        std::vector<int> const& times() const { return times_; }

        fst_edge const& edge(int e) const { return edges_[e]; }
        std::vector<fst_edge> const& edges() const { return edges_; }

        double weight(int e) const { return edges_[e].weight; }

        segment segment_of(int e) const
        {
            auto const& ed = edges_[e];
            return segment { times_[ed.tail], times_[ed.head], ed.label };
        }

        // adj(v): edges leaving v, ascending edge index.
        std::span<int const> out_edges(int v) const { return out_[v]; }
        std::span<int const> in_edges(int v) const { return in_[v]; }

        std::vector<int> const& initials() const { return initials_; }
        std::vector<int> const& finals() const { return finals_; }
        bool is_initial(int v) const { return is_initial_[v]; }
        bool is_final(int v) const { return is_final_[v]; }

        // Topological order, ties by (time, vertex index).
        std::vector<int> const& order() const { return order_; }

        // Same topology, new weights.
        fst with_weights(std::span<double const> weights) const
        {
            if (static_cast<int>(weights.size()) != edge_count()) {
                throw error("weight count does not match edge count");
            }
            fst result = *this;
            for (int e = 0; e < edge_count(); ++e) {
                if (!std::isfinite(weights[e])) {
                    throw error("edge " + std::to_string(e) + " has a non-finite weight");
                }
                result.edges_[e].weight = weights[e];
            }
            return result;
        }

    private:
        std::vector<int> compute_order() const
        {
            int nv = vertex_count();
            std::vector<int> indegree(nv, 0);
            for (auto const& ed : edges_) {
                ++indegree[ed.head];
            }
            using key = std::pair<int, int>;
            std::priority_queue<key, std::vector<key>, std::greater<key>> ready;
            for (int v = 0; v < nv; ++v) {
                if (indegree[v] == 0) {
                    ready.emplace(times_[v], v);
                }
            }
            std::vector<int> result;
            result.reserve(nv);
            while (!ready.empty()) {
                int v = ready.top().second;
                ready.pop();
                result.push_back(v);
                for (int e : out_[v]) {
                    int h = edges_[e].head;
                    if (--indegree[h] == 0) {
                        ready.emplace(times_[h], h);
                    }
                }
            }
            if (static_cast<int>(result.size()) != nv) {
                throw error("lattice contains a cycle");
            }
            return result;
        }

        int num_frames_ = 0;
        std::vector<int> times_;
        std::vector<fst_edge> edges_;
        std::vector<int> initials_;
        std::vector<int> finals_;
        std::vector<std::vector<int>> out_;
        std::vector<std::vector<int>> in_;
        std::vector<bool> is_initial_;
        std::vector<bool> is_final_;
        std::vector<int> order_;
    };

    inline std::vector<int> topological_order(fst const& f)
    {
        return f.order();
    }

    inline long hypothesis_space_edge_count(int num_frames, int num_labels, int max_duration)
    {
        long sum = 0;
        for (int t = 1; t <= num_frames; ++t) {
            sum += std::min(t, max_duration);
        }
        return sum * num_labels;
    }

    // All segments (s, t, l) with 0 <= s < t <= T and t - s <= D. Edges are
    // ordered by duration, then start time, then label.
    inline fst build_hypothesis_space(int num_frames, int num_labels, int max_duration)
    {
        if (num_frames < 1) {
            throw error("hypothesis space needs at least one frame");
        }
        if (num_labels < 1) {
            throw error("hypothesis space needs a non-empty label set");
        }
        if (max_duration < 1) {
            throw error("maximum segment duration must be positive");
        }

        std::vector<int> times(num_frames + 1);
        for (int t = 0; t <= num_frames; ++t) {
            times[t] = t;
        }

        std::vector<fst_edge> edges;
        edges.reserve(hypothesis_space_edge_count(num_frames, num_labels, max_duration));
        for (int d = 1; d <= std::min(max_duration, num_frames); ++d) {
            for (int s = 0; s + d <= num_frames; ++s) {
                for (int l = 0; l < num_labels; ++l) {
                    edges.push_back(fst_edge { s, s + d, l, 0.0 });
                }
            }
        }

        return fst(num_frames, std::move(times), std::move(edges), { 0 }, { num_frames });
    }

    // Vertices reachable from I and vertices that reach F.
    inline std::pair<std::vector<bool>, std::vector<bool>>
    reachability(fst const& f, std::vector<char> const& keep_edge)
    {
        int nv = f.vertex_count();
        std::vector<bool> access(nv, false), coaccess(nv, false);
        auto const& order = f.order();
        for (int v : f.initials()) {
            access[v] = true;
        }
        for (int v : order) {
            if (!access[v]) {
                continue;
            }
            for (int e : f.out_edges(v)) {
                if (keep_edge[e]) {
                    access[f.edge(e).head] = true;
                }
            }
        }
        for (int v : f.finals()) {
            coaccess[v] = true;
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int v = *it;
            if (coaccess[v]) {
                continue;
            }
            for (int e : f.out_edges(v)) {
                if (keep_edge[e] && coaccess[f.edge(e).head]) {
                    coaccess[v] = true;
                    break;
                }
            }
        }
        return { std::move(access), std::move(coaccess) };
    }

    // Keeps the marked edges that still lie on some I -> F path, and the
    // vertices they touch. edge_origin maps output edges to input edges.
    inline fst trimmed_subgraph(fst const& f, std::vector<char> const& keep_edge,
        std::vector<int>* edge_origin = nullptr)
    {
        auto [access, coaccess] = reachability(f, keep_edge);

        int nv = f.vertex_count();
        std::vector<int> vmap(nv, -1);
        std::vector<int> times;
        for (int v = 0; v < nv; ++v) {
            if (access[v] && coaccess[v]) {
                vmap[v] = static_cast<int>(times.size());
                times.push_back(f.time(v));
            }
        }

        std::vector<fst_edge> edges;
        if (edge_origin) {
            edge_origin->clear();
        }
        for (int e = 0; e < f.edge_count(); ++e) {
            auto const& ed = f.edge(e);
            if (keep_edge[e] && vmap[ed.tail] >= 0 && vmap[ed.head] >= 0) {
                edges.push_back(fst_edge { vmap[ed.tail], vmap[ed.head], ed.label, ed.weight });
                if (edge_origin) {
                    edge_origin->push_back(e);
                }
            }
        }

        std::vector<int> initials, finals;
        for (int v : f.initials()) {
            if (vmap[v] >= 0) {
                initials.push_back(vmap[v]);
            }
        }
        for (int v : f.finals()) {
            if (vmap[v] >= 0) {
                finals.push_back(vmap[v]);
            }
        }

        return fst(f.num_frames(), std::move(times), std::move(edges),
            std::move(initials), std::move(finals));
    }

    inline fst trim(fst const& f, std::vector<int>* edge_origin = nullptr)
    {
        return trimmed_subgraph(f, std::vector<char>(f.edge_count(), 1), edge_origin);
    }

    // Lattice text format:
    //   #frames <T>
    //   v <id> <time>
    //   e <id> <tail> <head> <label> <weight>
    //   i <vertex-id>
    //   f <vertex-id>
    inline void write_lattice(std::ostream& os, fst const& f, label_set const& labels)
    {
        os << "#frames " << f.num_frames() << '\n';
        for (int v = 0; v < f.vertex_count(); ++v) {
            os << "v " << v << ' ' << f.time(v) << '\n';
        }
        for (int e = 0; e < f.edge_count(); ++e) {
            auto const& ed = f.edge(e);
            os << "e " << e << ' ' << ed.tail << ' ' << ed.head << ' '
               << labels.name(ed.label) << ' ' << text::format_double(ed.weight) << '\n';
        }
        for (int v : f.initials()) {
            os << "i " << v << '\n';
        }
        for (int v : f.finals()) {
            os << "f " << v << '\n';
        }
    }

    // Unknown labels are interned into `labels`. Vertex and edge ids may be
    // sparse; they are renumbered densely in order of appearance.
    inline fst read_lattice(std::istream& is, label_set& labels)
    {
        std::string line;
        int lineno = 0;
        int num_frames = -1;

        std::map<long, int> vertex_index;
        std::vector<int> times;
        struct pending_edge {
            long tail, head;
            int label;
            double weight;
            int line;
        };
        std::vector<pending_edge> pending;
        std::map<long, int> edge_ids;
        std::vector<std::pair<long, int>> initial_refs, final_refs;

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
                if (num_frames < 0) {
                    throw parse_error(lineno, "negative frame count");
                }
            } else if (num_frames < 0) {
                throw parse_error(lineno, "missing '#frames' header");
            } else if (tok[0] == "v") {
                if (tok.size() != 3) {
                    throw parse_error(lineno, "expected 'v <id> <time>'");
                }
                long id = text::parse_int(tok[1], lineno);
                int t = static_cast<int>(text::parse_int(tok[2], lineno));
                if (t < 0 || t > num_frames) {
                    throw parse_error(lineno, "vertex time outside 0.." + std::to_string(num_frames));
                }
                if (!vertex_index.emplace(id, static_cast<int>(times.size())).second) {
                    throw parse_error(lineno, "duplicate vertex " + std::to_string(id));
                }
                times.push_back(t);
            } else if (tok[0] == "e") {
                if (tok.size() != 6) {
                    throw parse_error(lineno, "expected 'e <id> <tail> <head> <label> <weight>'");
                }
                long id = text::parse_int(tok[1], lineno);
                if (!edge_ids.emplace(id, static_cast<int>(pending.size())).second) {
                    throw parse_error(lineno, "duplicate edge " + std::to_string(id));
                }
                pending.push_back(pending_edge { text::parse_int(tok[2], lineno),
                    text::parse_int(tok[3], lineno), labels.add(std::string(tok[4])),
                    text::parse_finite(tok[5], lineno), lineno });
            } else if (tok[0] == "i" || tok[0] == "f") {
                if (tok.size() != 2) {
                    throw parse_error(lineno, "expected '" + std::string(tok[0]) + " <vertex-id>'");
                }
                auto ref = std::make_pair(text::parse_int(tok[1], lineno), lineno);
                (tok[0] == "i" ? initial_refs : final_refs).push_back(ref);
            } else {
                throw parse_error(lineno, "unknown record '" + std::string(tok[0]) + "'");
            }
        }
        if (num_frames < 0) {
            throw parse_error(lineno, "missing '#frames' header");
        }

        auto resolve = [&](long id, int at) {
            auto it = vertex_index.find(id);
            if (it == vertex_index.end()) {
                throw parse_error(at, "reference to undeclared vertex " + std::to_string(id));
            }
            return it->second;
        };

        std::vector<fst_edge> edges;
        edges.reserve(pending.size());
        for (auto const& p : pending) {
            int tail = resolve(p.tail, p.line);
            int head = resolve(p.head, p.line);
            if (times[head] <= times[tail]) {
                throw parse_error(p.line, "edge does not advance in time");
            }
            edges.push_back(fst_edge { tail, head, p.label, p.weight });
        }
        std::vector<int> initials, finals;
        for (auto [id, at] : initial_refs) {
            initials.push_back(resolve(id, at));
        }
        for (auto [id, at] : final_refs) {
            finals.push_back(resolve(id, at));
        }

        return fst(num_frames, std::move(times), std::move(edges),
            std::move(initials), std::move(finals));
    }

    // Segment tuples of all edges, sorted; used to compare lattices across
    // renumbering.
    inline std::vector<std::tuple<int, int, int>> segment_set(fst const& f)
    {
        std::vector<std::tuple<int, int, int>> result;
        result.reserve(f.edge_count());
        for (int e = 0; e < f.edge_count(); ++e) {
            auto s = f.segment_of(e);
            result.emplace_back(s.start, s.end, s.label);
        }
        std::sort(result.begin(), result.end());
        return result;
    }

}
