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

#include "fvs/ledger.hpp"

#include "fvs/errors.hpp"

namespace fvs {

std::string_view counter_name(Counter c) {
    switch (c) {
        case Counter::DistanceComputation:
            return "dist_comps";
        case Counter::FilterCheck:
            return "filter_checks";
        case Counter::Hop:
            return "hops";
        case Counter::LeafScanned:
            return "leaves";
        case Counter::PageAccess:
            return "page_accesses";
        case Counter::TranslationLookup:
            return "map_lookups";
        case Counter::TupleMaterialize:
            return "materializations";
        case Counter::ReorderFetch:
            return "reorder_fetches";
    }
    return "unknown";
}

EventLedger EventLedger::delta(const EventLedger& later, const EventLedger& earlier) {
    EventLedger d;
    for (std::size_t i = 0; i < kCounterCount; ++i) {
        if (later.counts[i] < earlier.counts[i]) {
            throw Error("EventLedger::delta: counters decreased");
        }
        d.counts[i] = later.counts[i] - earlier.counts[i];
    }
    return d;
}

CostWeights CostWeights::defaults(std::size_t dim) {
    CostWeights w;
    const auto d = static_cast<double>(dim);
    w[Counter::PageAccess] = 1000.0;
    w[Counter::TupleMaterialize] = 4.0 * d;
    w[Counter::DistanceComputation] = 2.0 * d;
    w[Counter::FilterCheck] = 5.0;
    w[Counter::TranslationLookup] = 20.0;
    w[Counter::ReorderFetch] = 1000.0;
    w[Counter::Hop] = 0.0;
    w[Counter::LeafScanned] = 0.0;
    return w;
}

std::array<double, kCounterCount> CostBreakdown::fractions() const {
    std::array<double, kCounterCount> f{};
    if (total <= 0.0) {
        return f;
    }
    for (std::size_t i = 0; i < kCounterCount; ++i) {
        f[i] = share[i] / total;
    }
    return f;
}

CostBreakdown weighted_breakdown(const EventLedger& ledger, const CostWeights& weights) {
    CostBreakdown b;
    for (std::size_t i = 0; i < kCounterCount; ++i) {
        if (weights.weight[i] < 0.0) {
            throw ConfigError("cost weights must be non-negative");
        }
        b.share[i] = static_cast<double>(ledger.counts[i]) * weights.weight[i];
    }
    for (double s : b.share) {
        b.total += s;
    }
    return b;
}

}  // namespace fvs
