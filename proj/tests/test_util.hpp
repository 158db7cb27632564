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

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "fvs/core.hpp"
#include "fvs/dataset_io.hpp"
#include "fvs/hnsw.hpp"
#include "fvs/scann.hpp"
#include "fvs/storage.hpp"

namespace fvs::testing {

inline Dataset uniform_dataset(std::size_t n, std::size_t dim, std::uint64_t seed, std::size_t extra = 0,
                               Dataset* held_out = nullptr) {
    SyntheticSpec spec;
    spec.n = n;
    spec.dim = dim;
    spec.seed = seed;
    SyntheticData d = generate_synthetic(spec, extra);
    if (held_out != nullptr) {
        *held_out = std::move(d.held_out);
    }
    return std::move(d.base);
}

// Reference scorer written out longhand, independent of the library kernel.
inline double reference_score(DistanceMetric metric, std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (metric == DistanceMetric::L2Squared) {
            const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            acc += d * d;
        } else {
            acc -= static_cast<double>(a[i]) * static_cast<double>(b[i]);
        }
    }
    return acc;
}

// Full sort of every eligible row; returns row ids of the k closest.
inline std::vector<RowId> reference_topk(const Dataset& ds, std::span<const float> q, std::size_t k,
                                         const FilterBitmap* filter = nullptr) {
    std::vector<std::pair<double, RowId>> all;
    for (RowId r = 0; r < ds.size(); ++r) {
        if (filter == nullptr || filter->probe(r)) {
            all.emplace_back(reference_score(ds.metric(), q, ds.row(r)), r);
        }
    }
    std::sort(all.begin(), all.end());
    std::vector<RowId> out;
    for (std::size_t i = 0; i < k && i < all.size(); ++i) {
        out.push_back(all[i].second);
    }
    return out;
}

inline std::set<RowId> id_set(std::span<const Neighbor> v) {
    std::set<RowId> s;
    for (const auto& n : v) {
        s.insert(n.rowid);
    }
    return s;
}

inline std::set<RowId> id_set(std::span<const RowId> v) { return {v.begin(), v.end()}; }

// Store, heap and graph built together; the index points into the store.
struct GraphFixture {
    Dataset ds;
    PagedStore store;
    std::optional<HeapFile> heap;
    std::optional<HnswIndex> index;

    static std::unique_ptr<GraphFixture> make(Dataset ds, std::uint32_t M, std::uint32_t efc, std::uint64_t seed) {
        auto f = std::make_unique<GraphFixture>();
        f->ds = std::move(ds);
        f->heap.emplace(load_heap(f->store, f->ds));
        HnswBuildParams p;
        p.M = M;
        p.ef_construction = efc;
        p.seed = seed;
        f->index.emplace(HnswIndex::build(f->ds, p, f->store, *f->heap));
        return f;
    }
};

struct ScannFixture {
    Dataset ds;
    PagedStore store;
    std::optional<HeapFile> heap;
    std::optional<ScannIndex> index;

    static std::unique_ptr<ScannFixture> make(Dataset ds, const ScannBuildParams& p) {
        auto f = std::make_unique<ScannFixture>();
        f->ds = std::move(ds);
        f->heap.emplace(load_heap(f->store, f->ds));
        f->index.emplace(ScannIndex::build(f->ds, p, f->store, *f->heap));
        return f;
    }
};

}  // namespace fvs::testing
