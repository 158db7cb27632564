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
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fvs/graph_search.hpp"
#include "fvs/ledger.hpp"
#include "fvs/scann.hpp"
#include "fvs/workload.hpp"

namespace fvs {

/// |result ∩ truth[:k]| / k on row ids.
double recall_at_k(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k);

/// One searchable method with a single effort knob. Implementations must be
/// safe to call from several threads at once.
class Strategy {
public:
    virtual ~Strategy() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::string knob_name() const = 0;
    /// Knob values admissible for `k`, ascending by effort.
    [[nodiscard]] virtual std::vector<std::size_t> default_grid(std::size_t k) const = 0;
    [[nodiscard]] virtual SearchResult search(std::span<const float> query, std::size_t k, std::size_t knob,
                                              const FilterBitmap& bitmap, EventLedger& ledger) const = 0;
    /// Semicolon-separated knob settings for the CSV.
    [[nodiscard]] virtual std::string knobs_text(std::size_t knob) const;
};

/// Graph strategy whose knob is ef; the remaining settings come from `base`.
class GraphStrategyRunner final : public Strategy {
public:
    GraphStrategyRunner(const HnswIndex& index, GraphSearchConfig base) : index_(&index), base_(base) {}
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] std::string knob_name() const override { return "ef"; }
    [[nodiscard]] std::vector<std::size_t> default_grid(std::size_t k) const override;
    [[nodiscard]] SearchResult search(std::span<const float> query, std::size_t k, std::size_t knob,
                                      const FilterBitmap& bitmap, EventLedger& ledger) const override;
    [[nodiscard]] std::string knobs_text(std::size_t knob) const override;

private:
    const HnswIndex* index_;
    GraphSearchConfig base_;
};

/// ScaNN with leaves_to_scan as the knob.
class ScannStrategyRunner final : public Strategy {
public:
    ScannStrategyRunner(const ScannIndex& index, std::size_t reorder_factor)
        : index_(&index), reorder_factor_(reorder_factor) {}
    [[nodiscard]] std::string name() const override { return "scann"; }
    [[nodiscard]] std::string knob_name() const override { return "leaves_to_scan"; }
    [[nodiscard]] std::vector<std::size_t> default_grid(std::size_t k) const override;
    [[nodiscard]] SearchResult search(std::span<const float> query, std::size_t k, std::size_t knob,
                                      const FilterBitmap& bitmap, EventLedger& ledger) const override;
    [[nodiscard]] std::string knobs_text(std::size_t knob) const override;

private:
    const ScannIndex* index_;
    std::size_t reorder_factor_;
};

/// Roughly geometric grid 1, 2, 3, 4, 6, 8, 12, 16, ... clipped to [lo, hi];
/// always ends with `hi`.
std::vector<std::size_t> effort_grid(std::size_t lo, std::size_t hi);

struct OperatingPoint {
    std::size_t knob = 0;
    double recall = 0.0;
    bool below_target = false;
};

/// Smallest grid value whose mean recall over `slice` reaches `target`;
/// otherwise the largest value, flagged below_target. Throws ConfigError on
/// an empty slice or grid.
OperatingPoint tune_to_recall(const Strategy& strategy, std::span<const std::size_t> grid,
                              std::span<const WorkloadEntry* const> slice, std::size_t k, double target);

struct StrategySpec {
    std::shared_ptr<const Strategy> strategy;
    std::vector<std::size_t> grid;  // empty: strategy default
};

struct RunConfig {
    std::string dataset = "dataset";
    std::vector<StrategySpec> strategies;
    const Workload* workload = nullptr;
    std::vector<std::size_t> ks{10};
    double target_recall = 0.95;
    std::size_t workers = 16;
    std::size_t repetitions = 5;
    CostWeights weights;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;
};

struct MetricsRecord {
    std::string dataset;
    std::string strategy;
    std::size_t k = 0;
    double selectivity = 0.0;
    std::string correlation;
    std::string knobs;
    double recall = 0.0;
    double mean_latency_us = 0.0;
    double p50_us = 0.0;
    double p95_us = 0.0;
    double qps = 0.0;
    EventLedger ledger;  // sums over the measured queries
    double weighted_total = 0.0;
    double truncated_frac = 0.0;
};

/// Per cell (strategy, k, selectivity, correlation): tune on a holdout of the
/// cell's queries, then measure the rest `repetitions` times with `workers`
/// concurrent sessions. One record per cell and repetition.
std::vector<MetricsRecord> run_experiment(const RunConfig& config);

inline constexpr const char* kCsvHeader =
    "dataset,strategy,k,selectivity,correlation,knobs,recall,mean_latency_us,p50_us,p95_us,qps,dist_comps,"
    "filter_checks,hops,leaves,page_accesses,map_lookups,materializations,reorder_fetches,weighted_total,"
    "truncated_frac";

void write_csv(std::ostream& out, std::span<const MetricsRecord> records);
/// Throws DataError on a malformed file.
std::vector<MetricsRecord> read_csv(std::istream& in);

bool is_traversal_first(const std::string& strategy);

struct CrossoverKey {
    std::string dataset;
    std::size_t k = 0;
    std::string correlation;
    friend auto operator<=>(const CrossoverKey&, const CrossoverKey&) = default;
};

/// Smallest selectivity at which the best traversal-first strategy's mean QPS
/// beats the best filter-first one. Empty when either side is missing or it
/// never happens.
std::optional<double> find_crossover(std::span<const MetricsRecord> records, const CrossoverKey& key);

struct ReportOptions {
    CostWeights weights;
    std::string svg_path;  // empty: no chart
};

/// Plain-text tables: mean QPS per selectivity and strategy, cost shares per
/// cell, and crossover points.
void write_report(std::ostream& out, std::span<const MetricsRecord> records, const ReportOptions& options);

/// Stacked-bar chart of cost shares, one bar per cell.
void write_breakdown_svg(std::ostream& out, std::span<const MetricsRecord> records, const CostWeights& weights);

}  // namespace fvs
