// Copyright 2026 The fvslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plain-text `key = value` knob blocks.

#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "fvs/errors.hpp"

namespace fvs::detail {

inline std::string_view trim_kv(std::string_view s) {
    constexpr std::string_view ws = " \t\r{},";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Calls `fn(key, value)` per entry. Entries are separated by newlines or
/// `;`, keys and values by `=` or `:`, and `#` starts a comment.
template <typename Fn>
void for_each_kv(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find_first_of(";\n", pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim_kv(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find_first_of("=:");
        if (eq == std::string_view::npos) {
            throw ConfigError("expected key = value, got: " + std::string(line));
        }
        fn(trim_kv(line.substr(0, eq)), trim_kv(line.substr(eq + 1)));
    }
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "off" || v == "no") {
        return false;
    }
    throw ConfigError("bad boolean for " + std::string(key) + ": " + std::string(v));
}

inline std::size_t parse_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError("bad integer for " + std::string(key) + ": " + std::string(v));
    }
    return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) {
        throw ConfigError("bad number for " + std::string(key) + ": " + s);
    }
    return d;
}

}  // namespace fvs::detail
