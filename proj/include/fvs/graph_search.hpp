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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvs/core.hpp"
#include "fvs/filter_bitmap.hpp"
#include "fvs/hnsw.hpp"
#include "fvs/ledger.hpp"

namespace fvs {

struct SearchResult {
    std::vector<Neighbor> neighbors;  // ascending by score
    bool truncated = false;           // fewer than k passing results found
    std::size_t rounds = 1;           // iterative scan only
};

enum class NavixHeuristic : std::uint8_t { Blind, Directed, OnehopS };
std::string_view to_string(NavixHeuristic h);

/// Per-expansion record. `gather_accesses` counts the popped node's own page,
/// the 1-hop pages and any heaptid resolutions that touched a page; scoring
/// accesses are excluded.
struct ExpansionTrace {
    std::uint32_t node = 0;
    std::uint32_t fanout = 0;
    std::uint64_t gather_accesses = 0;
    std::uint32_t one_hop = 0;
    std::uint32_t two_hop = 0;
    NavixHeuristic heuristic = NavixHeuristic::Blind;
};

struct SearchTrace {
    std::vector<ExpansionTrace> expansions;
};

/// Heap address of an index tuple: a map lookup when `tm` is enabled,
/// otherwise a fetch of the index page.
HeapTid resolve_heaptid(const HnswIndex& index, IndexTid tid, const TranslationMap& tm, EventLedger& ledger);

/// Traversal-first search: the beam walks the unfiltered graph and only
/// passing nodes enter the result queue.
SearchResult sweeping_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                             const FilterBitmap& bitmap, EventLedger& ledger,
                             std::size_t max_visited = static_cast<std::size_t>(-1));

/// Resumable post-filtering. `max_scan_tuples` == 0 selects 20 * ef.
SearchResult iterative_scan(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                            const FilterBitmap& bitmap, std::size_t max_scan_tuples, EventLedger& ledger);

/// Filter-first search with run-time 2-hop expansion.
SearchResult acorn_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                          const FilterBitmap& bitmap, const TranslationMap& tm, bool adaptive_skip,
                          EventLedger& ledger, SearchTrace* trace = nullptr);

/// Sliding-window estimate of the local filter pass rate and the heuristic it
/// selects.
class NavixHeuristicState {
public:
    static constexpr double kDefaultThetaLow = 0.05;
    static constexpr double kDefaultThetaHigh = 0.5;
    static constexpr std::size_t kDefaultWindow = 256;

    NavixHeuristicState(double prior, double theta_low = kDefaultThetaLow, double theta_high = kDefaultThetaHigh,
                        std::size_t window = kDefaultWindow);

    [[nodiscard]] double estimate() const;
    [[nodiscard]] NavixHeuristic choose() const;
    void record(bool passed);

    [[nodiscard]] double theta_low() const { return theta_low_; }
    [[nodiscard]] double theta_high() const { return theta_high_; }
    [[nodiscard]] std::size_t window() const { return ring_.size(); }

private:
    double prior_;
    double theta_low_;
    double theta_high_;
    std::vector<std::uint8_t> ring_;
    std::size_t filled_ = 0;
    std::size_t head_ = 0;
    std::size_t passed_ = 0;
};

/// Filter-first search that picks Blind, Directed or OnehopS per expansion.
SearchResult navix_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                          const FilterBitmap& bitmap, const TranslationMap& tm, NavixHeuristicState& state,
                          EventLedger& ledger, SearchTrace* trace = nullptr);

enum class GraphStrategy : std::uint8_t { Sweeping, IterativeScan, Acorn, Navix };
std::string_view to_string(GraphStrategy s);
GraphStrategy parse_graph_strategy(std::string_view name);

/// Knobs of one graph strategy, read from a `key = value` block.
struct GraphSearchConfig {
    GraphStrategy strategy = GraphStrategy::Acorn;
    std::size_t ef = 64;
    std::size_t max_scan_tuples = 0;  // 0: 20 * ef
    bool tm_enabled = true;
    bool adaptive_skip = true;
    double theta_low = NavixHeuristicState::kDefaultThetaLow;
    double theta_high = NavixHeuristicState::kDefaultThetaHigh;
    std::size_t window = NavixHeuristicState::kDefaultWindow;

    /// Lines or `;`-separated `key = value` pairs; `#` starts a comment.
    /// Throws ConfigError on unknown keys or bad values.
    static GraphSearchConfig parse(std::string_view text);
    [[nodiscard]] std::string to_text() const;
};

/// Runs the strategy named by `config`.
SearchResult graph_search(const HnswIndex& index, std::span<const float> query, std::size_t k,
                          const FilterBitmap& bitmap, const GraphSearchConfig& config, EventLedger& ledger,
                          SearchTrace* trace = nullptr);

}  // namespace fvs
