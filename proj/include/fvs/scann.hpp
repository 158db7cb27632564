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
#include "fvs/graph_search.hpp"
#include "fvs/storage.hpp"

namespace fvs {

struct ScannBuildParams {
    std::size_t num_leaves = 0;  // 0: round(sqrt(N))
    std::uint32_t max_num_levels = 1;
    std::uint32_t kmeans_iters = 10;
    bool quantize = false;
    std::uint64_t seed = 0;
};

/// Per-dimension min/max scalar quantizer to 8-bit codes.
class Sq8Codebook {
public:
    Sq8Codebook() = default;
    Sq8Codebook(std::vector<float> min, std::vector<float> max);
    static Sq8Codebook fit(const Dataset& ds);

    [[nodiscard]] std::size_t dim() const { return min_.size(); }
    [[nodiscard]] const std::vector<float>& min() const { return min_; }
    [[nodiscard]] const std::vector<float>& max() const { return max_; }

    void encode(std::span<const float> x, std::uint8_t* code) const;
    void decode(const std::uint8_t* code, float* out) const;
    /// Distance between a full-precision query and a decoded code.
    [[nodiscard]] float score(DistanceMetric metric, std::span<const float> query, const std::uint8_t* code) const;

private:
    std::vector<float> min_;
    std::vector<float> max_;
    std::vector<float> step_;  // (max - min) / 255
};

struct KMeansResult {
    std::size_t dim = 0;
    std::vector<float> centroids;         // k * dim
    std::vector<std::uint32_t> assignment;  // per input row
};

/// Lloyd's iterations under squared L2 with k-means++ seeding. An empty
/// cluster takes the point farthest from the centroid of the largest cluster.
/// `rows` selects the dataset rows to cluster.
KMeansResult kmeans(const Dataset& ds, std::span<const RowId> rows, std::size_t k, std::uint32_t iters,
                    std::uint64_t seed);

/// Partitioned index in the ScannIndex relation: a meta page, centroid
/// tables, one page chain per leaf and, when quantized, a codebook page.
class ScannIndex {
public:
    static ScannIndex build(const Dataset& ds, const ScannBuildParams& params, PagedStore& store,
                            const HeapFile& heap);
    static ScannIndex open(const PagedStore& store);

    [[nodiscard]] const PagedStore& store() const { return *store_; }
    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] DistanceMetric metric() const { return metric_; }
    [[nodiscard]] std::size_t num_leaves() const { return num_leaves_; }
    [[nodiscard]] std::size_t num_branches() const { return num_branches_; }
    [[nodiscard]] std::uint32_t levels() const { return levels_; }
    [[nodiscard]] bool quantized() const { return quantize_; }
    [[nodiscard]] std::size_t entry_bytes() const;
    [[nodiscard]] std::size_t members_per_page() const;

    /// Uncounted inspection of leaf `leaf`.
    [[nodiscard]] std::vector<RowId> leaf_members(std::size_t leaf) const;
    [[nodiscard]] std::size_t leaf_chain_length(std::size_t leaf) const;
    [[nodiscard]] std::vector<float> leaf_centroid(std::size_t leaf) const;

    /// Three-stage search: score centroids, pick `leaves_to_scan` leaves, scan
    /// their page chains probing the bitmap for every member, score passers,
    /// and, if quantized, rescore the top k * reorder_factor from the heap.
    [[nodiscard]] SearchResult filtered_search(std::span<const float> query, std::size_t k,
                                               std::size_t leaves_to_scan, std::size_t reorder_factor,
                                               const FilterBitmap& bitmap, EventLedger& ledger) const;

private:
    explicit ScannIndex(const PagedStore& store) : store_(&store), heap_(HeapFile::open(store)) {}
    void load_meta();

    struct CentroidEntry {
        std::uint32_t child;       // leaf id, or first leaf of a branch
        std::uint32_t first_page;  // leaf chain head (leaf entries)
        std::uint32_t count;       // members, or leaves of a branch
    };
    // Reads entries [begin, end) of a centroid table, scoring each.
    void score_table(std::uint32_t first_block, std::size_t begin, std::size_t end, std::span<const float> query,
                     EventLedger& ledger, std::vector<std::pair<float, CentroidEntry>>& out) const;
    [[nodiscard]] std::size_t centroid_entry_bytes() const { return 16 + 4 * dim_; }
    [[nodiscard]] std::size_t centroids_per_page() const;

    const PagedStore* store_;
    HeapFile heap_;
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    DistanceMetric metric_ = DistanceMetric::L2Squared;
    std::size_t num_leaves_ = 0;
    std::size_t num_branches_ = 0;
    std::uint32_t levels_ = 1;
    bool quantize_ = false;
    std::uint32_t branch_table_ = kInvalidBlock;
    std::uint32_t leaf_table_ = kInvalidBlock;
    Sq8Codebook codebook_;
};

struct ScannSearchConfig {
    std::size_t leaves_to_scan = 1;
    std::size_t reorder_factor = 1;

    /// `key = value` pairs separated by newlines or `;`.
    static ScannSearchConfig parse(std::string_view text);
    [[nodiscard]] std::string to_text() const;
};

}  // namespace fvs
