// dsc/common.hpp

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

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dsc {

    struct error : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    // Malformed input text. The message carries the offending line number.
    struct parse_error : error {
        parse_error(int line, std::string const& msg)
            : error("line " + std::to_string(line) + ": " + msg), line(line)
        {}

        int line;
    };

    // Label alphabet. Ids are dense and assigned in insertion order.
    class label_set {
    public:
        label_set() = default;

        explicit label_set(std::vector<std::string> names)
        {
            for (auto& n : names) {
                add(n);
            }
        }

        int add(std::string const& name)
        {
            auto it = ids_.find(name);
            if (it != ids_.end()) {
                return it->second;
            }
            int id = static_cast<int>(names_.size());
            names_.push_back(name);
            ids_.emplace(name, id);
            return id;
        }

        int id(std::string const& name) const
        {
            auto it = ids_.find(name);
            if (it == ids_.end()) {
                throw error("unknown label '" + name + "'");
            }
            return it->second;
        }

        bool contains(std::string const& name) const { return ids_.count(name) > 0; }

        std::string const& name(int id) const { return names_.at(id); }

        std::vector<std::string> const& names() const { return names_; }

        int size() const { return static_cast<int>(names_.size()); }

        bool operator==(label_set const& other) const { return names_ == other.names_; }

    private:
        std::vector<std::string> names_;
        std::unordered_map<std::string, int> ids_;
    };

    // Labels "0", "1", ... for tests and synthetic corpora.
    inline label_set numbered_labels(int n)
    {
        label_set result;
        for (int i = 0; i < n; ++i) {
            result.add(std::to_string(i));
        }
        return result;
    }

    namespace text {

        inline std::vector<std::string_view> split(std::string_view line)
        {
            std::vector<std::string_view> result;
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
                    ++i;
                }
                std::size_t j = i;
                while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) {
                    ++j;
                }
                if (j > i) {
                    result.push_back(line.substr(i, j - i));
                }
                i = j;
            }
            return result;
        }

        inline bool blank(std::string_view line)
        {
            for (char c : line) {
                if (!std::isspace(static_cast<unsigned char>(c))) {
                    return false;
                }
            }
            return true;
        }

        inline long parse_int(std::string_view tok, int line)
        {
            long value = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
            if (ec != std::errc() || p != tok.data() + tok.size()) {
                throw parse_error(line, "expected integer, got '" + std::string(tok) + "'");
            }
            return value;
        }

        inline double parse_double(std::string_view tok, int line)
        {
            std::string s(tok);
            char* end = nullptr;
            double value = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size()) {
                throw parse_error(line, "expected number, got '" + s + "'");
            }
            return value;
        }

        inline double parse_finite(std::string_view tok, int line)
        {
            double value = parse_double(tok, line);
            if (!std::isfinite(value)) {
                throw parse_error(line, "non-finite value '" + std::string(tok) + "'");
            }
            return value;
        }

        // 17 significant digits: enough for an exact decimal round trip of a double.
        inline std::string format_double(double value)
        {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", value);
            return buf;
        }

    }

}
