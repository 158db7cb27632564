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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvs/core.hpp"
#include "fvs/filter_bitmap.hpp"

namespace fvs {

enum class Correlation : std::uint8_t { HighPositive, MediumPositive, LowPositive, Negative, None };

inline constexpr std::array<Correlation, 5> kAllCorrelations = {
    Correlation::HighPositive, Correlation::MediumPositive, Correlation::LowPositive, Correlation::Negative,
    Correlation::None};

std::string_view to_string(Correlation c);
Correlation parse_correlation(std::string_view name);

/// Row ids sorted by ascending score to a query, ties by row id.
struct RankedArray {
    std::vector<RowId> ids;
    std::vector<float> scores;
    [[nodiscard]] std::size_t size() const { return ids.size(); }
};

RankedArray rank_all(const Dataset& ds, std::span<const float> query);

/// Number of leading ranked positions a correlation samples from.
std::size_t window_size(Correlation c, std::size_t n);
/// round(s * n).
std::size_t target_cardinality(double selectivity, std::size_t n);

inline constexpr double kDefaultTemperature = 0.25;

/// Draws round(s * N) rows without replacement from the correlation's window,
/// weighting by exp(-z / tau) over min-max normalized window scores. An
/// `exclude` row (a query sampled from the dataset) is never selected.
/// Throws WindowOverflow when the window is too small.
FilterBitmap generate_bitmap(const RankedArray& ranked, double selectivity, Correlation corr, std::uint64_t seed,
                             double tau = kDefaultTemperature, std::optional<RowId> exclude = std::nullopt);

/// Mean of rank / (N - 1) over the selected rows.
double mean_normalized_rank(const RankedArray& ranked, const FilterBitmap& bitmap);

/// Exact filtered top-k.
std::vector<Neighbor> ground_truth(const Dataset& ds, std::span<const float> query, const FilterBitmap& bitmap,
                                   std::size_t k);

inline constexpr std::uint32_t kWorkloadVersion = 1;

struct WorkloadHeader {
    std::uint32_t version = kWorkloadVersion;
    std::uint64_t dataset_hash = 0;
    std::size_t n = 0;
    std::size_t dim = 0;
    DistanceMetric metric = DistanceMetric::L2Squared;
    std::vector<std::size_t> ks;
    double tau = kDefaultTemperature;
    std::uint64_t seed = 0;

    friend bool operator==(const WorkloadHeader&, const WorkloadHeader&) = default;
};

struct WorkloadEntry {
    std::uint64_t query_id = 0;
    std::vector<float> query;
    double selectivity = 0.0;
    Correlation correlation = Correlation::None;
    std::uint64_t seed = 0;
    FilterBitmap bitmap;
    std::map<std::size_t, std::vector<Neighbor>> truth;  // by k

    friend bool operator==(const WorkloadEntry&, const WorkloadEntry&) = default;
};

struct Workload {
    WorkloadHeader header;
    std::vector<WorkloadEntry> entries;

    friend bool operator==(const Workload&, const Workload&) = default;
};

struct WorkloadSpec {
    std::vector<double> selectivities;
    std::vector<Correlation> correlations;
    std::vector<std::size_t> ks{10};
    double tau = kDefaultTemperature;
    std::uint64_t seed = 0;
};

/// Query vectors for a workload. `self_rows[i]`, when set, is the dataset row
/// query i was copied from; that row is excluded from its bitmaps.
struct BaseQueries {
    std::vector<std::vector<float>> vectors;
    std::vector<std::optional<RowId>> self_rows;
};

BaseQueries queries_from(const Dataset& held_out);
/// Samples `count` distinct dataset rows as queries.
BaseQueries sample_queries(const Dataset& ds, std::size_t count, std::uint64_t seed);

/// One entry per (query, selectivity, correlation), in that nesting order.
/// Infeasible cells are skipped and reported through `warnings`. Throws
/// ConfigError if a selectivity yields fewer rows than the largest k.
Workload generate_workload(const Dataset& ds, const BaseQueries& queries, const WorkloadSpec& spec,
                           std::vector<std::string>* warnings = nullptr);

/// Sorted row ids as (start, length) runs.
std::vector<std::pair<RowId, std::uint64_t>> encode_runs(const FilterBitmap& bitmap);
FilterBitmap decode_runs(std::size_t universe, std::span<const std::pair<RowId, std::uint64_t>> runs);

void write_workload_jsonl(const std::filesystem::path& path, const Workload& w);
void write_workload_binary(const std::filesystem::path& path, const Workload& w);
/// Reads either form, detected from the leading bytes.
Workload read_workload(const std::filesystem::path& path);

}  // namespace fvs
