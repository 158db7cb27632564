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

// Search-state plumbing shared by the plain and filtered graph searches.

#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "fvs/hnsw.hpp"

namespace fvs::detail {

struct Cand {
    float score = 0.0F;
    std::uint32_t node = 0;
};

inline bool cand_less(const Cand& a, const Cand& b) {
    return a.score < b.score || (a.score == b.score && a.node < b.node);
}

struct CandGreater {
    bool operator()(const Cand& a, const Cand& b) const { return cand_less(b, a); }
};
struct CandLess {
    bool operator()(const Cand& a, const Cand& b) const { return cand_less(a, b); }
};

/// C: closest on top.
using MinQueue = std::priority_queue<Cand, std::vector<Cand>, CandGreater>;
/// W: farthest on top (the eviction point).
using MaxQueue = std::priority_queue<Cand, std::vector<Cand>, CandLess>;

class VisitedSet {
public:
    explicit VisitedSet(std::size_t n) : seen_(n, 0) {}
    /// True if newly inserted.
    bool insert(std::uint32_t node) {
        if (seen_[node] != 0) {
            return false;
        }
        seen_[node] = 1;
        ++count_;
        return true;
    }
    [[nodiscard]] bool contains(std::uint32_t node) const { return seen_[node] != 0; }
    [[nodiscard]] std::size_t count() const { return count_; }

private:
    std::vector<std::uint8_t> seen_;
    std::size_t count_ = 0;
};

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Reads the meta page, then walks the upper layers greedily. Returns the
/// layer-0 entry candidate. The filter is never consulted here.
Cand zoom_in(const HnswIndex& index, std::span<const float> query, EventLedger& ledger);

/// Working set of one base-layer beam search.
struct BeamState {
    explicit BeamState(std::size_t n) : visited(n), expanded(n, 0) {}

    MinQueue candidates;  // C
    MaxQueue results;     // W
    VisitedSet visited;   // V
    std::vector<std::uint8_t> expanded;
    bool hit_visit_cap = false;
};

/// Traversal-first beam at layer 0. Every neighbor is scored; a neighbor that
/// beats W's farthest (or finds W short) enters C, and enters W only if it
/// passes `filter` (one filter_check each). With filter == nullptr this is the
/// plain HNSW base-layer search. Stops when C's best is worse than W's worst
/// with W full, or after `max_visited` scored nodes.
void run_beam(const HnswIndex& index, std::span<const float> query, BeamState& state, std::size_t ef,
              const FilterBitmap* filter, std::size_t max_visited, EventLedger& ledger);

/// Scores node `node` from its index page (one page_access, one distance).
/// Calls materialize when `keep(score)` holds while the page is still pinned.
template <typename Keep>
float score_node(const HnswIndex& index, std::uint32_t node, std::span<const float> query, EventLedger& ledger,
                 Keep&& keep, HeapTid* heaptid_out = nullptr) {
    PageView page = index.access_node(HnswIndex::tid_of_node(node), ledger);
    NodeView nv = index.node(page);
    const float d = distance(index.metric(), query, nv.vector());
    ledger.add(Counter::DistanceComputation);
    if (heaptid_out != nullptr) {
        *heaptid_out = nv.heaptid();
    }
    if (keep(d)) {
        (void)materialize_vector(page, 0, ledger);
    }
    return d;
}

/// Drains W into ascending order.
std::vector<Cand> drain_sorted(MaxQueue& w);

}  // namespace fvs::detail
