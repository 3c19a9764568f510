// dsc/corpus.hpp

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
#include "dsc/training.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dsc {

    struct transcription {
        std::string id;
        segment_path path;
    };

    // Reference transcriptions: segment lines "<start-frame> <end-frame> <label>"
    // using boundary times, so a segment covers frames start+1 .. end. A line
    // with a single token starts a new utterance with that id; a file holding
    // one utterance may omit it.
    inline std::vector<transcription> read_transcriptions(std::istream& is, label_set& labels)
    {
        std::vector<transcription> result;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (text::blank(line)) {
                continue;
            }
            auto tok = text::split(line);
            if (tok.size() == 1) {
                result.push_back(transcription { std::string(tok[0]), {} });
                continue;
            }
            if (tok.size() != 3) {
                throw parse_error(lineno, "expected '<start-frame> <end-frame> <label>'");
            }
            if (result.empty()) {
                result.emplace_back();
            }
            segment s { static_cast<int>(text::parse_int(tok[0], lineno)),
                static_cast<int>(text::parse_int(tok[1], lineno)), labels.add(std::string(tok[2])) };
            auto& segs = result.back().path.segments;
            if (s.start < 0 || s.end <= s.start) {
                throw parse_error(lineno, "segment must satisfy 0 <= start < end");
            }
            if ((segs.empty() && s.start != 0) || (!segs.empty() && segs.back().end != s.start)) {
                throw parse_error(lineno, "segments must be connected and start at frame 0");
            }
            segs.push_back(s);
        }
        return result;
    }

    inline void write_transcription(std::ostream& os, transcription const& t,
        label_set const& labels, bool with_id = true)
    {
        if (with_id) {
            os << t.id << '\n';
        }
        for (auto const& s : t.path.segments) {
            os << s.start << ' ' << s.end << ' ' << labels.name(s.label) << '\n';
        }
    }

    // TIMIT-style alignment: "<start-sample> <end-sample> <phone>" lines.
    // Sample offsets are rounded to frame boundaries; a phone that rounds to
    // zero frames is dropped and its span goes to the next phone. Not
    // checked against the real corpus.
    inline segment_path read_phn(std::istream& is, label_set& labels, int samples_per_frame = 160)
    {
        if (samples_per_frame < 1) {
            throw error("samples per frame must be positive");
        }
        segment_path path;
        std::string line;
        int lineno = 0, frame = 0;
        long last_end = -1;
        while (std::getline(is, line)) {
            ++lineno;
            if (text::blank(line)) {
                continue;
            }
            auto tok = text::split(line);
            if (tok.size() != 3) {
                throw parse_error(lineno, "expected '<start-sample> <end-sample> <phone>'");
            }
            long a = text::parse_int(tok[0], lineno), b = text::parse_int(tok[1], lineno);
            if (a < 0 || b <= a || (last_end >= 0 && a != last_end) || (last_end < 0 && a != 0)) {
                throw parse_error(lineno, "phones must be contiguous from sample 0");
            }
            last_end = b;
            int end = static_cast<int>((b + samples_per_frame / 2) / samples_per_frame);
            int label = labels.add(std::string(tok[2]));
            if (end > frame) {
                path.segments.push_back(segment { frame, end, label });
                frame = end;
            }
        }
        return path;
    }

    // Labels of a frame-label file: one label per line, one line per frame.
    inline std::vector<int> frame_labels_of(segment_path const& path)
    {
        std::vector<int> result;
        for (auto const& s : path.segments) {
            result.insert(result.end(), s.duration(), s.label);
        }
        return result;
    }

    template <class T, class Read>
    T read_file(std::filesystem::path const& p, Read&& read)
    {
        std::ifstream is(p);
        if (!is) {
            throw error("cannot open " + p.string());
        }
        try {
            return read(is);
        } catch (parse_error const& e) {
            throw error(p.string() + ": " + e.what());
        }
    }

    template <class Write>
    void write_file(std::filesystem::path const& p, Write&& write)
    {
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        std::ofstream os(p);
        if (!os) {
            throw error("cannot write " + p.string());
        }
        write(os);
    }

    // Files in `dir` with extension `ext`, sorted by name.
    inline std::vector<std::filesystem::path> list_files(std::filesystem::path const& dir,
        std::string const& ext)
    {
        std::vector<std::filesystem::path> result;
        if (!std::filesystem::is_directory(dir)) {
            throw error("not a directory: " + dir.string());
        }
        for (auto const& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ext) {
                result.push_back(entry.path());
            }
        }
        std::sort(result.begin(), result.end());
        return result;
    }

    // A data split directory holds <id>.post posteriors and <id>.trn
    // transcriptions (and optionally <id>.lat lattices). Label names are
    // interned into `labels` from the posterior headers.
    inline std::vector<utterance> load_split(std::filesystem::path const& dir, label_set& labels,
        std::filesystem::path const& lattice_dir = {})
    {
        std::vector<utterance> result;
        for (auto const& p : list_files(dir, ".post")) {
            utterance u;
            u.id = p.stem().string();
            u.post = read_file<posterior_matrix>(p, [](std::istream& is) { return read_posteriors(is); });
            if (labels.size() == 0) {
                labels = u.post.labels();
            } else if (!(u.post.labels() == labels)) {
                throw error(p.string() + ": label alphabet differs from the rest of the corpus");
            }
            auto trn = dir / (u.id + ".trn");
            if (std::filesystem::exists(trn)) {
                auto ts = read_file<std::vector<transcription>>(trn,
                    [&](std::istream& is) { return read_transcriptions(is, labels); });
                if (ts.size() != 1) {
                    throw error(trn.string() + ": expected exactly one utterance");
                }
                if (labels.size() != u.post.num_labels()) {
                    throw error(trn.string() + ": label missing from the posterior alphabet");
                }
                u.gold = ts.front().path;
                if (!u.gold.covers(u.post.num_frames())) {
                    throw error(trn.string() + ": transcription does not cover the utterance");
                }
            }
            if (!lattice_dir.empty()) {
                u.lattice = read_file<fst>(lattice_dir / (u.id + ".lat"),
                    [&](std::istream& is) { return read_lattice(is, labels); });
            }
            result.push_back(std::move(u));
        }
        return result;
    }

}
