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

#include "fvs/scann.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fvs/detail/kv.hpp"
#include "fvs/rng.hpp"

namespace fvs {

namespace {

constexpr std::size_t kCentroidVectorOffset = 16;
constexpr std::size_t kMemberCodeOffset = 8;

struct ScannMetaRecord {
    std::uint64_t seed;
    std::uint64_t n;
    std::uint32_t dim;
    std::uint32_t metric;
    std::uint32_t num_leaves;
    std::uint32_t num_branches;
    std::uint32_t levels;
    std::uint32_t kmeans_iters;
    std::uint32_t quantize;
    std::uint32_t branch_table;
    std::uint32_t leaf_table;
    std::uint32_t codebook_block;
};
static_assert(sizeof(ScannMetaRecord) == 56);

float l2(std::span<const float> a, std::span<const float> b) { return distance(DistanceMetric::L2Squared, a, b); }

struct Cluster {
    std::vector<float> centroid;
    std::vector<RowId> members;
};

void repair_empty(const Dataset& ds, std::span<const RowId> rows, std::size_t k, std::vector<float>& centroids,
                  std::vector<std::uint32_t>& assignment) {
    const std::size_t dim = ds.dim();
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignment) {
        ++sizes[a];
    }
    for (std::size_t e = 0; e < k; ++e) {
        if (sizes[e] != 0) {
            continue;
        }
        const auto largest =
            static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        if (sizes[largest] < 2) {
            throw ConfigError("k-means: cannot repair empty cluster");
        }
        std::span<const float> lc(centroids.data() + largest * dim, dim);
        std::size_t far = 0;
        float far_d = -1.0F;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (assignment[i] != largest) {
                continue;
            }
            const float d = l2(ds.row(rows[i]), lc);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        assignment[far] = static_cast<std::uint32_t>(e);
        --sizes[largest];
        ++sizes[e];
        auto row = ds.row(rows[far]);
        std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(e * dim));
    }
}

void assign(const Dataset& ds, std::span<const RowId> rows, std::size_t k, const std::vector<float>& centroids,
            std::vector<std::uint32_t>& assignment) {
    const std::size_t dim = ds.dim();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto x = ds.row(rows[i]);
        std::uint32_t best = 0;
        float best_d = l2(x, {centroids.data(), dim});
        for (std::size_t c = 1; c < k; ++c) {
            const float d = l2(x, {centroids.data() + c * dim, dim});
            if (d < best_d) {
                best_d = d;
                best = static_cast<std::uint32_t>(c);
            }
        }
        assignment[i] = best;
    }
}

// Largest-remainder split of `total` leaves over branches, at least one per
// branch and never more than the branch holds.
std::vector<std::size_t> split_leaves(std::size_t total, const std::vector<std::size_t>& sizes, std::size_t n) {
    const std::size_t b = sizes.size();
    std::vector<std::size_t> out(b);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const double exact = static_cast<double>(total) * static_cast<double>(sizes[i]) / static_cast<double>(n);
        out[i] = std::clamp<std::size_t>(static_cast<std::size_t>(exact), 1, sizes[i]);
        rem.emplace_back(exact - std::floor(exact), i);
        used += out[i];
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
    while (used < total) {
        bool moved = false;
        for (const auto& [r, i] : rem) {
            if (used < total && out[i] < sizes[i]) {
                ++out[i];
                ++used;
                moved = true;
            }
        }
        if (!moved) {
            break;
        }
    }
    while (used > total) {
        const auto i = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
        if (out[i] <= 1) {
            break;
        }
        --out[i];
        --used;
    }
    return out;
}

void write_centroid_table(PagedStore& store, std::size_t dim, const std::vector<std::vector<float>>& centroids,
                          const std::vector<std::array<std::uint32_t, 3>>& fields, std::uint32_t& first_block) {
    const PageGeometry& geom = store.geometry();
    const std::size_t entry = kCentroidVectorOffset + 4 * dim;
    const std::size_t per_page = geom.usable_bytes() / entry;
    if (per_page == 0) {
        throw ConfigError("centroid entry does not fit on a page");
    }
    const std::size_t pages = (centroids.size() + per_page - 1) / per_page;
    first_block = kInvalidBlock;
    std::vector<std::byte> buf(entry);
    for (std::size_t p = 0; p < pages; ++p) {
        const std::size_t begin = p * per_page;
        const std::size_t count = std::min(per_page, centroids.size() - begin);
        PageHeader h;
        h.kind = PageKind::ScannCentroids;
        h.item_count = static_cast<std::uint16_t>(count);
        h.item_size = static_cast<std::uint32_t>(entry);
        h.vector_dim = static_cast<std::uint32_t>(dim);
        h.vector_offset = kCentroidVectorOffset;
        h.encoding = VectorEncoding::Float32;
        const std::uint32_t block = store.allocate(Relation::ScannIndex, h);
        if (p == 0) {
            first_block = block;
        } else {
            auto prev = store.mutable_page({Relation::ScannIndex, block - 1});
            auto ph = prev.header();
            ph.next_block = block;
            prev.set_header(ph);
        }
        auto w = store.mutable_page({Relation::ScannIndex, block});
        for (std::size_t i = 0; i < count; ++i) {
            std::fill(buf.begin(), buf.end(), std::byte{0});
            std::memcpy(buf.data(), fields[begin + i].data(), 12);
            std::memcpy(buf.data() + kCentroidVectorOffset, centroids[begin + i].data(), 4 * dim);
            w.write(geom.reserved_bytes + i * entry, buf.data(), entry);
        }
    }
}

}  // namespace

Sq8Codebook::Sq8Codebook(std::vector<float> min, std::vector<float> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) {
        throw DimensionMismatch("codebook min/max dims differ");
    }
    step_.resize(min_.size());
    for (std::size_t d = 0; d < min_.size(); ++d) {
        step_[d] = max_[d] > min_[d] ? (max_[d] - min_[d]) / 255.0F : 0.0F;
    }
}

Sq8Codebook Sq8Codebook::fit(const Dataset& ds) {
    if (ds.size() == 0) {
        throw DataError("cannot fit a codebook on an empty dataset");
    }
    std::vector<float> lo(ds.row(0).begin(), ds.row(0).end());
    std::vector<float> hi = lo;
    for (std::size_t i = 1; i < ds.size(); ++i) {
        auto r = ds.row(i);
        for (std::size_t d = 0; d < r.size(); ++d) {
            lo[d] = std::min(lo[d], r[d]);
            hi[d] = std::max(hi[d], r[d]);
        }
    }
    return {std::move(lo), std::move(hi)};
}

void Sq8Codebook::encode(std::span<const float> x, std::uint8_t* code) const {
    if (x.size() != dim()) {
        throw DimensionMismatch("codebook encode dim mismatch");
    }
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (step_[d] == 0.0F) {
            code[d] = 0;
            continue;
        }
        const float q = std::round((x[d] - min_[d]) / step_[d]);
        code[d] = static_cast<std::uint8_t>(std::clamp(q, 0.0F, 255.0F));
    }
}

void Sq8Codebook::decode(const std::uint8_t* code, float* out) const {
    for (std::size_t d = 0; d < dim(); ++d) {
        out[d] = min_[d] + static_cast<float>(code[d]) * step_[d];
    }
}

float Sq8Codebook::score(DistanceMetric metric, std::span<const float> query, const std::uint8_t* code) const {
    float acc = 0.0F;
    if (metric == DistanceMetric::L2Squared) {
        for (std::size_t d = 0; d < dim(); ++d) {
            const float diff = query[d] - (min_[d] + static_cast<float>(code[d]) * step_[d]);
            acc += diff * diff;
        }
        return acc;
    }
    for (std::size_t d = 0; d < dim(); ++d) {
        acc += query[d] * (min_[d] + static_cast<float>(code[d]) * step_[d]);
    }
    return -acc;
}

KMeansResult kmeans(const Dataset& ds, std::span<const RowId> rows, std::size_t k, std::uint32_t iters,
                    std::uint64_t seed) {
    if (k == 0 || k > rows.size()) {
        throw ConfigError("k-means: need 1 <= k <= rows (k=" + std::to_string(k) + ", rows=" +
                          std::to_string(rows.size()) + ")");
    }
    const std::size_t dim = ds.dim();
    const std::size_t m = rows.size();
    Rng rng(derive_seed(seed, "kmeans"));

    KMeansResult out;
    out.dim = dim;
    out.centroids.resize(k * dim);
    out.assignment.assign(m, 0);

    // k-means++ seeding.
    std::vector<double> d2(m, 0.0);
    std::size_t pick = rng.below(m);
    std::copy_n(ds.row(rows[pick]).data(), dim, out.centroids.begin());
    for (std::size_t i = 0; i < m; ++i) {
        d2[i] = l2(ds.row(rows[i]), ds.row(rows[pick]));
    }
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            pick = m - 1;
            for (std::size_t i = 0; i < m; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(m);  // all points coincide with a centroid
        }
        std::span<const float> cv = ds.row(rows[pick]);
        std::copy(cv.begin(), cv.end(), out.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
        for (std::size_t i = 0; i < m; ++i) {
            d2[i] = std::min(d2[i], static_cast<double>(l2(ds.row(rows[i]), cv)));
        }
    }

    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::uint32_t it = 0; it < iters; ++it) {
        assign(ds, rows, k, out.centroids, out.assignment);
        repair_empty(ds, rows, k, out.centroids, out.assignment);
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t c = out.assignment[i];
            auto x = ds.row(rows[i]);
            for (std::size_t d = 0; d < dim; ++d) {
                sums[c * dim + d] += x[d];
            }
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t d = 0; d < dim; ++d) {
                out.centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] / static_cast<double>(counts[c]));
            }
        }
    }
    assign(ds, rows, k, out.centroids, out.assignment);
    repair_empty(ds, rows, k, out.centroids, out.assignment);
    return out;
}

std::size_t ScannIndex::entry_bytes() const {
    return kMemberCodeOffset + (quantize_ ? dim_ : 4 * dim_);
}

std::size_t ScannIndex::members_per_page() const { return store_->geometry().usable_bytes() / entry_bytes(); }

std::size_t ScannIndex::centroids_per_page() const {
    return store_->geometry().usable_bytes() / centroid_entry_bytes();
}

ScannIndex ScannIndex::build(const Dataset& ds, const ScannBuildParams& params, PagedStore& store,
                             const HeapFile& heap) {
    const std::size_t n = ds.size();
    if (n == 0) {
        throw ConfigError("ScaNN build needs a non-empty dataset");
    }
    if (heap.size() != n || heap.dim() != ds.dim()) {
        throw ConfigError("heap does not hold the dataset being indexed");
    }
    if (store.page_count(Relation::ScannIndex) != 0) {
        throw StorageError("store already holds a ScaNN index");
    }
    const std::size_t num_leaves =
        params.num_leaves == 0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n)))))
            : params.num_leaves;
    if (num_leaves > n) {
        throw ConfigError("num_leaves (" + std::to_string(num_leaves) + ") exceeds N (" + std::to_string(n) + ")");
    }
    if (params.max_num_levels < 1 || params.max_num_levels > 2) {
        throw ConfigError("max_num_levels must be 1 or 2");
    }
    if (params.kmeans_iters < 1) {
        throw ConfigError("kmeans_iters must be >= 1");
    }
    const std::size_t dim = ds.dim();
    const PageGeometry& geom = store.geometry();

    std::vector<Cluster> leaves;
    std::vector<Cluster> branches;
    std::vector<std::array<std::uint32_t, 3>> branch_fields;
    std::vector<RowId> all(n);
    std::iota(all.begin(), all.end(), RowId{0});

    auto split = [&](const std::vector<RowId>& rows, std::size_t k, std::uint64_t seed, std::vector<Cluster>& out) {
        const KMeansResult km = kmeans(ds, rows, k, params.kmeans_iters, seed);
        const std::size_t base = out.size();
        out.resize(base + k);
        for (std::size_t c = 0; c < k; ++c) {
            out[base + c].centroid.assign(km.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim),
                                          km.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[base + km.assignment[i]].members.push_back(rows[i]);
        }
    };

    const std::uint32_t levels = num_leaves == 1 ? 1 : params.max_num_levels;
    if (levels == 1) {
        split(all, num_leaves, derive_seed(params.seed, "scann-leaves"), leaves);
    } else {
        const std::size_t nb = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_leaves)))), 1, num_leaves);
        split(all, nb, derive_seed(params.seed, "scann-branches"), branches);
        std::vector<std::size_t> sizes;
        for (const auto& b : branches) {
            sizes.push_back(b.members.size());
        }
        const auto per_branch = split_leaves(num_leaves, sizes, n);
        for (std::size_t b = 0; b < branches.size(); ++b) {
            const auto first = static_cast<std::uint32_t>(leaves.size());
            split(branches[b].members, per_branch[b], derive_seed(params.seed, b), leaves);
            branch_fields.push_back({first, kInvalidBlock, static_cast<std::uint32_t>(per_branch[b])});
        }
    }

    Sq8Codebook codebook;
    if (params.quantize) {
        codebook = Sq8Codebook::fit(ds);
    }

    PageHeader meta_header;
    meta_header.kind = PageKind::ScannMeta;
    meta_header.item_count = 1;
    meta_header.item_size = sizeof(ScannMetaRecord);
    store.allocate(Relation::ScannIndex, meta_header);

    const std::size_t entry = kMemberCodeOffset + (params.quantize ? dim : 4 * dim);
    const std::size_t per_page = geom.usable_bytes() / entry;
    if (per_page == 0) {
        throw ConfigError("leaf member entry does not fit on a page");
    }
    std::vector<std::array<std::uint32_t, 3>> leaf_fields;
    std::vector<std::vector<float>> leaf_centroids;
    std::vector<std::byte> buf(entry);
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        auto& members = leaves[l].members;
        std::sort(members.begin(), members.end());
        const std::size_t pages = (members.size() + per_page - 1) / per_page;
        std::uint32_t first = kInvalidBlock;
        for (std::size_t p = 0; p < pages; ++p) {
            const std::size_t begin = p * per_page;
            const std::size_t count = std::min(per_page, members.size() - begin);
            PageHeader h;
            h.kind = PageKind::ScannLeaf;
            h.item_count = static_cast<std::uint16_t>(count);
            h.item_size = static_cast<std::uint32_t>(entry);
            h.vector_dim = static_cast<std::uint32_t>(dim);
            h.vector_offset = kMemberCodeOffset;
            h.encoding = params.quantize ? VectorEncoding::Sq8 : VectorEncoding::Float32;
            h.aux = static_cast<std::uint32_t>(l);
            const std::uint32_t block = store.allocate(Relation::ScannIndex, h);
            if (p == 0) {
                first = block;
            } else {
                auto prev = store.mutable_page({Relation::ScannIndex, block - 1});
                auto ph = prev.header();
                ph.next_block = block;
                prev.set_header(ph);
            }
            auto w = store.mutable_page({Relation::ScannIndex, block});
            for (std::size_t i = 0; i < count; ++i) {
                const RowId r = members[begin + i];
                std::fill(buf.begin(), buf.end(), std::byte{0});
                encode_tid(heap.tid_of(r), buf.data());
                if (params.quantize) {
                    codebook.encode(ds.row(r), reinterpret_cast<std::uint8_t*>(buf.data() + kMemberCodeOffset));
                } else {
                    std::memcpy(buf.data() + kMemberCodeOffset, ds.row(r).data(), 4 * dim);
                }
                w.write(geom.reserved_bytes + i * entry, buf.data(), entry);
            }
        }
        leaf_fields.push_back({static_cast<std::uint32_t>(l), first, static_cast<std::uint32_t>(members.size())});
        leaf_centroids.push_back(leaves[l].centroid);
    }

    ScannMetaRecord rec{};
    write_centroid_table(store, dim, leaf_centroids, leaf_fields, rec.leaf_table);
    if (levels == 2) {
        std::vector<std::vector<float>> branch_centroids;
        for (const auto& b : branches) {
            branch_centroids.push_back(b.centroid);
        }
        write_centroid_table(store, dim, branch_centroids, branch_fields, rec.branch_table);
    } else {
        rec.branch_table = kInvalidBlock;
    }
    rec.codebook_block = kInvalidBlock;
    if (params.quantize) {
        if (8 * dim > geom.usable_bytes()) {
            throw ConfigError("SQ8 codebook does not fit on one page");
        }
        PageHeader h;
        h.kind = PageKind::ScannCentroids;
        h.item_count = 1;
        h.item_size = static_cast<std::uint32_t>(8 * dim);
        h.vector_dim = static_cast<std::uint32_t>(dim);
        h.encoding = VectorEncoding::Float32;
        rec.codebook_block = store.allocate(Relation::ScannIndex, h);
        auto w = store.mutable_page({Relation::ScannIndex, rec.codebook_block});
        w.write(geom.reserved_bytes, codebook.min().data(), 4 * dim);
        w.write(geom.reserved_bytes + 4 * dim, codebook.max().data(), 4 * dim);
    }
    rec.seed = params.seed;
    rec.n = n;
    rec.dim = static_cast<std::uint32_t>(dim);
    rec.metric = static_cast<std::uint32_t>(ds.metric());
    rec.num_leaves = static_cast<std::uint32_t>(leaves.size());
    rec.num_branches = static_cast<std::uint32_t>(branches.size());
    rec.levels = levels;
    rec.kmeans_iters = params.kmeans_iters;
    rec.quantize = params.quantize ? 1 : 0;
    store.mutable_page({Relation::ScannIndex, 0}).write(geom.reserved_bytes, &rec, sizeof rec);

    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    if (!store.metadata().empty()) {
        meta = nlohmann::ordered_json::parse(store.metadata(), nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) {
            meta = nlohmann::ordered_json::object();
        }
    }
    meta["scann"] = {{"num_leaves", leaves.size()},
                     {"max_num_levels", levels},
                     {"kmeans_iters", params.kmeans_iters},
                     {"quantize", params.quantize},
                     {"seed", params.seed}};
    store.set_metadata(meta.dump());
    return open(store);
}

ScannIndex ScannIndex::open(const PagedStore& store) {
    if (store.page_count(Relation::ScannIndex) == 0) {
        throw StorageError("store has no ScaNN index");
    }
    ScannIndex index(store);
    index.load_meta();
    return index;
}

void ScannIndex::load_meta() {
    PageView meta = store_->peek({Relation::ScannIndex, 0});
    if (meta.header().kind != PageKind::ScannMeta) {
        throw StorageError("ScaNN meta page missing");
    }
    ScannMetaRecord rec{};
    std::memcpy(&rec, meta.item(0).data(), sizeof rec);
    n_ = rec.n;
    dim_ = rec.dim;
    metric_ = static_cast<DistanceMetric>(rec.metric);
    num_leaves_ = rec.num_leaves;
    num_branches_ = rec.num_branches;
    levels_ = rec.levels;
    quantize_ = rec.quantize != 0;
    branch_table_ = rec.branch_table;
    leaf_table_ = rec.leaf_table;
    if (quantize_) {
        PageView cb = store_->peek({Relation::ScannIndex, rec.codebook_block});
        auto item = cb.item(0);
        std::vector<float> lo(dim_);
        std::vector<float> hi(dim_);
        std::memcpy(lo.data(), item.data(), 4 * dim_);
        std::memcpy(hi.data(), item.data() + 4 * dim_, 4 * dim_);
        codebook_ = Sq8Codebook(std::move(lo), std::move(hi));
    }
}

void ScannIndex::score_table(std::uint32_t first_block, std::size_t begin, std::size_t end,
                             std::span<const float> query, EventLedger& ledger,
                             std::vector<std::pair<float, CentroidEntry>>& out) const {
    const std::size_t per_page = centroids_per_page();
    std::size_t i = begin;
    while (i < end) {
        const std::size_t page_no = i / per_page;
        PageView page = store_->access({Relation::ScannIndex, first_block + static_cast<std::uint32_t>(page_no)},
                                       ledger);
        const std::size_t page_end = std::min(end, (page_no + 1) * per_page);
        for (; i < page_end; ++i) {
            const std::size_t slot = i % per_page;
            auto item = page.item(slot);
            CentroidEntry e{};
            std::memcpy(&e.child, item.data(), 4);
            std::memcpy(&e.first_page, item.data() + 4, 4);
            std::memcpy(&e.count, item.data() + 8, 4);
            const float d = distance(metric_, query, page.vector(slot));
            ledger.add(Counter::DistanceComputation);
            out.emplace_back(d, e);
        }
    }
}

std::vector<RowId> ScannIndex::leaf_members(std::size_t leaf) const {
    if (leaf >= num_leaves_) {
        throw ConfigError("leaf out of range");
    }
    const std::size_t per_page = centroids_per_page();
    PageView table = store_->peek({Relation::ScannIndex, leaf_table_ + static_cast<std::uint32_t>(leaf / per_page)});
    std::uint32_t block = 0;
    std::memcpy(&block, table.item(leaf % per_page).data() + 4, 4);
    std::vector<RowId> out;
    while (block != kInvalidBlock) {
        PageView page = store_->peek({Relation::ScannIndex, block});
        const PageHeader h = page.header();
        for (std::size_t s = 0; s < h.item_count; ++s) {
            out.push_back(heap_.rowid_of(decode_tid<HeapTag>(page.item(s).data())));
        }
        block = h.next_block;
    }
    return out;
}

std::size_t ScannIndex::leaf_chain_length(std::size_t leaf) const {
    if (leaf >= num_leaves_) {
        throw ConfigError("leaf out of range");
    }
    const std::size_t per_page = centroids_per_page();
    PageView table = store_->peek({Relation::ScannIndex, leaf_table_ + static_cast<std::uint32_t>(leaf / per_page)});
    std::uint32_t block = 0;
    std::memcpy(&block, table.item(leaf % per_page).data() + 4, 4);
    std::size_t len = 0;
    while (block != kInvalidBlock) {
        ++len;
        block = store_->peek({Relation::ScannIndex, block}).header().next_block;
    }
    return len;
}

std::vector<float> ScannIndex::leaf_centroid(std::size_t leaf) const {
    if (leaf >= num_leaves_) {
        throw ConfigError("leaf out of range");
    }
    const std::size_t per_page = centroids_per_page();
    PageView table = store_->peek({Relation::ScannIndex, leaf_table_ + static_cast<std::uint32_t>(leaf / per_page)});
    auto v = table.vector(leaf % per_page);
    return {v.begin(), v.end()};
}

SearchResult ScannIndex::filtered_search(std::span<const float> query, std::size_t k, std::size_t leaves_to_scan,
                                         std::size_t reorder_factor, const FilterBitmap& bitmap,
                                         EventLedger& ledger) const {
    if (k == 0 || leaves_to_scan == 0 || reorder_factor == 0) {
        throw ConfigError("k, leaves_to_scan and reorder_factor must be >= 1");
    }
    if (query.size() != dim_) {
        throw DimensionMismatch("query dim " + std::to_string(query.size()) + " != index dim " +
                                std::to_string(dim_));
    }
    if (bitmap.universe() != n_) {
        throw ConfigError("bitmap universe does not match index size");
    }
    leaves_to_scan = std::min(leaves_to_scan, num_leaves_);
    (void)store_->access({Relation::ScannIndex, 0}, ledger);

    auto by_score = [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second.child < b.second.child);
    };

    // Stages 1-2: centroids.
    std::vector<std::pair<float, CentroidEntry>> leaf_scores;
    if (levels_ == 1) {
        score_table(leaf_table_, 0, num_leaves_, query, ledger, leaf_scores);
    } else {
        std::vector<std::pair<float, CentroidEntry>> branch_scores;
        score_table(branch_table_, 0, num_branches_, query, ledger, branch_scores);
        std::sort(branch_scores.begin(), branch_scores.end(), by_score);
        std::size_t covered = 0;
        for (const auto& [d, b] : branch_scores) {
            if (covered >= 2 * leaves_to_scan) {
                break;
            }
            score_table(leaf_table_, b.child, b.child + b.count, query, ledger, leaf_scores);
            covered += b.count;
        }
    }
    const std::size_t take = std::min(leaves_to_scan, leaf_scores.size());
    std::partial_sort(leaf_scores.begin(), leaf_scores.begin() + static_cast<std::ptrdiff_t>(take),
                      leaf_scores.end(), by_score);

    // Stage 3: leaf chains.
    struct Hit {
        float score;
        RowId rowid;
        HeapTid tid;
    };
    std::vector<Hit> hits;
    for (std::size_t l = 0; l < take; ++l) {
        ledger.add(Counter::LeafScanned);
        std::uint32_t block = leaf_scores[l].second.first_page;
        while (block != kInvalidBlock) {
            PageView page = store_->access({Relation::ScannIndex, block}, ledger);
            const PageHeader h = page.header();
            for (std::size_t s = 0; s < h.item_count; ++s) {
                auto item = page.item(s);
                const HeapTid tid = decode_tid<HeapTag>(item.data());
                const RowId r = heap_.rowid_of(tid);
                ledger.add(Counter::FilterCheck);
                if (!bitmap.probe(r)) {
                    continue;
                }
                float d = 0.0F;
                if (quantize_) {
                    d = codebook_.score(metric_, query,
                                        reinterpret_cast<const std::uint8_t*>(item.data() + kMemberCodeOffset));
                } else {
                    d = distance(metric_, query, page.vector(s));
                }
                ledger.add(Counter::DistanceComputation);
                hits.push_back({d, r, tid});
            }
            block = h.next_block;
        }
    }
    auto hit_less = [](const Hit& a, const Hit& b) {
        return a.score < b.score || (a.score == b.score && a.rowid < b.rowid);
    };

    // Reordering with full-precision vectors from the heap.
    if (quantize_) {
        const std::size_t keep = std::min(hits.size(), k * reorder_factor);
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_less);
        hits.resize(keep);
        for (Hit& h : hits) {
            ledger.add(Counter::ReorderFetch);
            const HeapTuple t = heap_.fetch(*store_, h.tid, ledger);
            h.score = distance(metric_, query, t.vector);
            ledger.add(Counter::DistanceComputation);
        }
    }
    const std::size_t out_n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(out_n), hits.end(), hit_less);
    SearchResult out;
    for (std::size_t i = 0; i < out_n; ++i) {
        out.neighbors.push_back({hits[i].rowid, hits[i].score});
    }
    out.truncated = out.neighbors.size() < k;
    return out;
}

ScannSearchConfig ScannSearchConfig::parse(std::string_view text) {
    ScannSearchConfig cfg;
    detail::for_each_kv(text, [&](std::string_view key, std::string_view value) {
        if (key == "leaves_to_scan") {
            cfg.leaves_to_scan = detail::parse_size(key, value);
        } else if (key == "reorder_factor") {
            cfg.reorder_factor = detail::parse_size(key, value);
        } else if (key == "strategy" && value == "scann") {
            // accepted for symmetry with graph blocks
        } else {
            throw ConfigError("unknown ScaNN search key: " + std::string(key));
        }
    });
    if (cfg.leaves_to_scan == 0 || cfg.reorder_factor == 0) {
        throw ConfigError("leaves_to_scan and reorder_factor must be >= 1");
    }
    return cfg;
}

std::string ScannSearchConfig::to_text() const {
    std::ostringstream os;
    os << "leaves_to_scan = " << leaves_to_scan << "\n"
       << "reorder_factor = " << reorder_factor << "\n";
    return os.str();
}

}  // namespace fvs
