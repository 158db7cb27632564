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
#include <vector>

#include "fvs/core.hpp"
#include "fvs/storage.hpp"

namespace fvs {

struct HnswBuildParams {
    std::uint32_t M = 32;
    std::uint32_t ef_construction = 200;
    /// m_L; zero means 1/ln(M).
    double level_scale = 0.0;
    std::uint64_t seed = 0;
};

/// Largest L_max with (L_max + 2) * M * tid_size <= usable page bytes: the
/// neighbor slots of a node (2M at layer 0, M above) must share one page.
/// Throws GraphInfeasible when not even a single-layer node fits.
int compute_lmax(std::uint32_t M, const PageGeometry& geometry = {});

/// Serialized size of a node tuple with `level` upper layers.
std::size_t node_tuple_bytes(std::size_t dim, std::uint32_t level, std::uint32_t M);

/// Highest level whose node tuple (neighbors and inline vector) fits on one page,
/// never above compute_lmax(M).
int node_level_cap(std::size_t dim, std::uint32_t M, const PageGeometry& geometry = {});

/// Indirection from an index tuple to its heap tuple, filled at build time.
/// Cheap handle over a table owned by the index.
class TranslationMap {
public:
    TranslationMap() = default;
    TranslationMap(const std::vector<HeapTid>* table, bool enabled) : table_(table), enabled_(enabled) {}

    [[nodiscard]] bool enabled() const { return enabled_ && table_ != nullptr; }
    [[nodiscard]] HeapTid lookup(IndexTid tid) const;
    [[nodiscard]] std::size_t size() const { return table_ == nullptr ? 0 : table_->size(); }

private:
    const std::vector<HeapTid>* table_ = nullptr;
    bool enabled_ = false;
};

/// Decoded view of a node tuple on its index page.
class NodeView {
public:
    NodeView(const PageView& page, std::uint32_t M);

    [[nodiscard]] HeapTid heaptid() const { return heaptid_; }
    [[nodiscard]] std::uint32_t level() const { return level_; }
    [[nodiscard]] std::span<const float> vector() const { return vector_; }
    [[nodiscard]] std::size_t neighbor_count(std::uint32_t layer) const;
    [[nodiscard]] IndexTid neighbor(std::uint32_t layer, std::size_t i) const;
    void neighbors(std::uint32_t layer, std::vector<IndexTid>& out) const;

private:
    [[nodiscard]] std::size_t layer_offset(std::uint32_t layer) const;

    std::span<const std::byte> item_;
    std::uint32_t M_;
    HeapTid heaptid_;
    std::uint32_t level_ = 0;
    std::span<const float> vector_;
};

/// Hierarchical small-world graph living in the HnswIndex relation of a
/// PagedStore: a meta page at block 0, then one node tuple per page. Node
/// `i` (row id order) sits at block i + 1.
class HnswIndex {
public:
    /// Builds the graph for every row of `ds` (already loaded into `heap`) and
    /// writes it into `store`. Throws GraphInfeasible if a node cannot fit a page.
    static HnswIndex build(const Dataset& ds, const HnswBuildParams& params, PagedStore& store, const HeapFile& heap);
    /// Reopens an index written by build(); rebuilds the translation table.
    static HnswIndex open(const PagedStore& store);

    [[nodiscard]] const PagedStore& store() const { return *store_; }
    [[nodiscard]] const HeapFile& heap() const { return heap_; }
    [[nodiscard]] const HnswBuildParams& params() const { return params_; }
    [[nodiscard]] std::size_t size() const { return node_count_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] DistanceMetric metric() const { return metric_; }
    [[nodiscard]] std::uint32_t M() const { return params_.M; }
    [[nodiscard]] std::uint32_t max_level() const { return max_level_; }
    [[nodiscard]] std::uint32_t level_cap() const { return level_cap_; }
    [[nodiscard]] IndexTid entry_point() const { return {entry_block_, 1}; }
    [[nodiscard]] std::uint32_t fanout(std::uint32_t layer) const { return layer == 0 ? 2 * params_.M : params_.M; }

    [[nodiscard]] TranslationMap translation_map(bool enabled = true) const { return {&translation_, enabled}; }

    /// Counted read of one node page.
    [[nodiscard]] PageView access_node(IndexTid tid, EventLedger& ledger) const {
        return store_->access({Relation::HnswIndex, tid.block}, ledger);
    }
    [[nodiscard]] NodeView node(const PageView& page) const { return NodeView(page, params_.M); }
    [[nodiscard]] RowId rowid_of(HeapTid tid) const { return heap_.rowid_of(tid); }

    [[nodiscard]] static std::uint32_t node_id(IndexTid tid) { return tid.block - 1; }
    [[nodiscard]] static IndexTid tid_of_node(std::uint32_t id) { return {id + 1, 1}; }

    /// Uncounted structural inspection (tests, statistics).
    [[nodiscard]] NodeView inspect(std::uint32_t node_id) const {
        return NodeView(store_->peek({Relation::HnswIndex, node_id + 1}), params_.M);
    }

    /// Plain HNSW search: greedy zoom-in over the upper layers, then a beam of
    /// width `ef` at layer 0. Returns at most k results, ascending.
    [[nodiscard]] std::vector<Neighbor> search_unfiltered(std::span<const float> query, std::size_t k,
                                                          std::size_t ef, EventLedger& ledger) const;

private:
    HnswIndex(const PagedStore& store, HeapFile heap) : store_(&store), heap_(std::move(heap)) {}
    void load_meta();

    const PagedStore* store_;
    HeapFile heap_;
    HnswBuildParams params_;
    std::size_t node_count_ = 0;
    std::size_t dim_ = 0;
    DistanceMetric metric_ = DistanceMetric::L2Squared;
    std::uint32_t entry_block_ = kInvalidBlock;
    std::uint32_t max_level_ = 0;
    std::uint32_t level_cap_ = 0;
    std::vector<HeapTid> translation_;  // indexed by block
};

}  // namespace fvs
