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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fvs {

/// Events counted per query. Order is fixed: it is the CSV column order.
enum class Counter : std::uint8_t {
    DistanceComputation = 0,
    FilterCheck,
    Hop,
    LeafScanned,
    PageAccess,
    TranslationLookup,
    TupleMaterialize,
    ReorderFetch,
};

inline constexpr std::size_t kCounterCount = 8;

inline constexpr std::array<Counter, kCounterCount> kAllCounters = {
    Counter::DistanceComputation, Counter::FilterCheck,       Counter::Hop,
    Counter::LeafScanned,         Counter::PageAccess,        Counter::TranslationLookup,
    Counter::TupleMaterialize,    Counter::ReorderFetch,
};

std::string_view counter_name(Counter c);

/// Per-session event counts. Counters only grow while a query runs; the
/// harness resets the ledger between queries and sums ledgers after joins.
struct EventLedger {
    std::array<std::uint64_t, kCounterCount> counts{};

    std::uint64_t& operator[](Counter c) { return counts[static_cast<std::size_t>(c)]; }
    std::uint64_t operator[](Counter c) const { return counts[static_cast<std::size_t>(c)]; }

    void add(Counter c, std::uint64_t n = 1) { counts[static_cast<std::size_t>(c)] += n; }
    void reset() { counts.fill(0); }

    EventLedger& operator+=(const EventLedger& other) {
        for (std::size_t i = 0; i < kCounterCount; ++i) {
            counts[i] += other.counts[i];
        }
        return *this;
    }

    /// Component-wise difference; `later` must dominate `earlier`.
    static EventLedger delta(const EventLedger& later, const EventLedger& earlier);

    friend bool operator==(const EventLedger&, const EventLedger&) = default;
};

/// Abstract cost per event, in cycle-like units. Proxies only.
struct CostWeights {
    std::array<double, kCounterCount> weight{};

    double& operator[](Counter c) { return weight[static_cast<std::size_t>(c)]; }
    double operator[](Counter c) const { return weight[static_cast<std::size_t>(c)]; }

    /// page_access 1000, tuple_materialize 4*dim, distance 2*dim, filter 5,
    /// translation 20, reorder 1000, hop and leaf 0.
    static CostWeights defaults(std::size_t dim);
};

struct CostBreakdown {
    std::array<double, kCounterCount> share{};  // counter * weight
    double total = 0.0;

    double operator[](Counter c) const { return share[static_cast<std::size_t>(c)]; }
    /// share / total; all zero when total is zero.
    [[nodiscard]] std::array<double, kCounterCount> fractions() const;
};

/// Negative weights are rejected with ConfigError.
CostBreakdown weighted_breakdown(const EventLedger& ledger, const CostWeights& weights);

}  // namespace fvs
