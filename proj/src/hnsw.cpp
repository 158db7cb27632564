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

#include "fvs/hnsw.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fvs/detail/beam.hpp"
#include "fvs/rng.hpp"

namespace fvs {

namespace {

constexpr std::size_t kNodeVectorOffset = 12;  // heaptid(6) + level(2) + dim(4)

struct HnswMetaRecord {
    std::uint64_t seed;
    std::uint64_t node_count;
    double level_scale;
    std::uint32_t M;
    std::uint32_t ef_construction;
    std::uint32_t dim;
    std::uint32_t metric;
    std::uint32_t entry_block;
    std::uint32_t max_level;
    std::uint32_t level_cap;
    std::uint32_t reserved;
};
static_assert(sizeof(HnswMetaRecord) == 56);

double effective_level_scale(const HnswBuildParams& p) {
    return p.level_scale > 0.0 ? p.level_scale : 1.0 / std::log(static_cast<double>(p.M));
}

// In-memory graph used only while building; the search path reads pages.
class GraphBuilder {
public:
    GraphBuilder(const Dataset& ds, const HnswBuildParams& params, std::uint32_t level_cap)
        : ds_(ds), params_(params), level_cap_(level_cap), links_(ds.size()), levels_(ds.size()),
          visit_tag_(ds.size(), 0) {}

    void build() {
        Rng rng(derive_seed(params_.seed, "hnsw-levels"));
        const double ml = effective_level_scale(params_);
        for (std::size_t i = 0; i < ds_.size(); ++i) {
            const double u = rng.uniform_open0();
            const auto level = static_cast<std::uint32_t>(std::floor(-std::log(u) * ml));
            levels_[i] = std::min(level, level_cap_);
        }
        for (std::uint32_t i = 0; i < ds_.size(); ++i) {
            insert(i);
        }
    }

    [[nodiscard]] std::uint32_t entry() const { return entry_; }
    [[nodiscard]] std::uint32_t max_level() const { return max_level_; }
    [[nodiscard]] std::uint32_t level(std::uint32_t n) const { return levels_[n]; }
    [[nodiscard]] const std::vector<std::uint32_t>& links(std::uint32_t n, std::uint32_t layer) const {
        return links_[n][layer];
    }

private:
    float dist(std::uint32_t a, std::uint32_t b) const { return distance(ds_.metric(), ds_.row(a), ds_.row(b)); }

    std::uint32_t cap(std::uint32_t layer) const { return layer == 0 ? 2 * params_.M : params_.M; }

    std::vector<detail::Cand> search_layer(std::uint32_t q, const std::vector<detail::Cand>& entries, std::size_t ef,
                                           std::uint32_t layer) {
        ++epoch_;
        detail::MinQueue c;
        detail::MaxQueue w;
        for (const auto& e : entries) {
            visit_tag_[e.node] = epoch_;
            c.push(e);
            w.push(e);
        }
        while (w.size() > ef) {
            w.pop();
        }
        while (!c.empty()) {
            const detail::Cand cur = c.top();
            if (w.size() >= ef && detail::cand_less(w.top(), cur)) {
                break;
            }
            c.pop();
            for (std::uint32_t n : links_[cur.node][layer]) {
                if (visit_tag_[n] == epoch_) {
                    continue;
                }
                visit_tag_[n] = epoch_;
                const detail::Cand nc{dist(q, n), n};
                if (w.size() < ef || detail::cand_less(nc, w.top())) {
                    c.push(nc);
                    w.push(nc);
                    if (w.size() > ef) {
                        w.pop();
                    }
                }
            }
        }
        return detail::drain_sorted(w);
    }

    // Keeps a candidate only if it is closer to the base than to every neighbor
    // already kept.
    std::vector<std::uint32_t> select_heuristic(const std::vector<detail::Cand>& sorted, std::size_t m) const {
        std::vector<std::uint32_t> kept;
        for (const auto& cand : sorted) {
            if (kept.size() >= m) {
                break;
            }
            bool good = true;
            for (std::uint32_t r : kept) {
                if (dist(cand.node, r) < cand.score) {
                    good = false;
                    break;
                }
            }
            if (good) {
                kept.push_back(cand.node);
            }
        }
        return kept;
    }

    void insert(std::uint32_t q) {
        const std::uint32_t level = levels_[q];
        links_[q].assign(level + 1, {});
        if (q == 0) {
            entry_ = 0;
            max_level_ = level;
            return;
        }
        detail::Cand cur{dist(q, entry_), entry_};
        for (std::uint32_t layer = max_level_; layer > level; --layer) {
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::uint32_t n : links_[cur.node][layer]) {
                    const float d = dist(q, n);
                    if (d < cur.score) {
                        cur = {d, n};
                        changed = true;
                    }
                }
            }
        }
        std::vector<detail::Cand> entries{cur};
        for (int layer = static_cast<int>(std::min(level, max_level_)); layer >= 0; --layer) {
            const auto l = static_cast<std::uint32_t>(layer);
            auto found = search_layer(q, entries, params_.ef_construction, l);
            auto selected = select_heuristic(found, params_.M);
            links_[q][l] = selected;
            for (std::uint32_t e : selected) {
                auto& back = links_[e][l];
                back.push_back(q);
                if (back.size() > cap(l)) {
                    std::vector<detail::Cand> scored;
                    scored.reserve(back.size());
                    for (std::uint32_t b : back) {
                        scored.push_back({dist(e, b), b});
                    }
                    std::sort(scored.begin(), scored.end(), detail::cand_less);
                    back.clear();
                    for (std::size_t i = 0; i < cap(l); ++i) {
                        back.push_back(scored[i].node);
                    }
                }
            }
            entries = std::move(found);
        }
        if (level > max_level_) {
            max_level_ = level;
            entry_ = q;
        }
    }

    const Dataset& ds_;
    HnswBuildParams params_;
    std::uint32_t level_cap_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::vector<std::uint32_t> levels_;
    std::vector<std::uint32_t> visit_tag_;
    std::uint32_t epoch_ = 0;
    std::uint32_t entry_ = 0;
    std::uint32_t max_level_ = 0;
};

void record_build_knobs(PagedStore& store, const char* key, nlohmann::ordered_json knobs) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    if (!store.metadata().empty()) {
        meta = nlohmann::ordered_json::parse(store.metadata(), nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) {
            meta = nlohmann::ordered_json::object();
        }
    }
    meta[key] = std::move(knobs);
    store.set_metadata(meta.dump());
}

}  // namespace

int compute_lmax(std::uint32_t M, const PageGeometry& geometry) {
    if (M < 1) {
        throw ConfigError("compute_lmax: M must be >= 1");
    }
    const std::uint64_t per_layer = static_cast<std::uint64_t>(M) * geometry.tid_size_bytes;
    const auto lmax = static_cast<std::int64_t>(geometry.usable_bytes() / per_layer) - 2;
    if (lmax < 0) {
        throw GraphInfeasible("M=" + std::to_string(M) + ": even a single-layer neighbor list (2M slots) exceeds " +
                              std::to_string(geometry.usable_bytes()) + " usable page bytes");
    }
    return static_cast<int>(lmax);
}

std::size_t node_tuple_bytes(std::size_t dim, std::uint32_t level, std::uint32_t M) {
    return kNodeVectorOffset + dim * sizeof(float) + (level + 1) * sizeof(std::uint16_t) +
           static_cast<std::size_t>(level + 2) * M * 6;
}

int node_level_cap(std::size_t dim, std::uint32_t M, const PageGeometry& geometry) {
    const int lmax = compute_lmax(M, geometry);
    for (int level = lmax; level >= 0; --level) {
        if (node_tuple_bytes(dim, static_cast<std::uint32_t>(level), M) <= geometry.usable_bytes()) {
            return level;
        }
    }
    throw GraphInfeasible("a node tuple of dim " + std::to_string(dim) + " with M=" + std::to_string(M) +
                          " does not fit on one page");
}

HeapTid TranslationMap::lookup(IndexTid tid) const {
    if (table_ == nullptr || tid.block == 0 || tid.block >= table_->size()) {
        throw StorageError("translation map miss for index block " + std::to_string(tid.block));
    }
    return (*table_)[tid.block];
}

NodeView::NodeView(const PageView& page, std::uint32_t M) : item_(page.item(0)), M_(M) {
    heaptid_ = decode_tid<HeapTag>(item_.data());
    std::uint16_t level = 0;
    std::memcpy(&level, item_.data() + 6, sizeof level);
    level_ = level;
    vector_ = page.vector(0);
}

std::size_t NodeView::layer_offset(std::uint32_t layer) const {
    std::size_t off = kNodeVectorOffset + vector_.size() * sizeof(float);
    for (std::uint32_t l = 0; l < layer; ++l) {
        const std::uint32_t cap = l == 0 ? 2 * M_ : M_;
        off += sizeof(std::uint16_t) + static_cast<std::size_t>(cap) * 6;
    }
    return off;
}

std::size_t NodeView::neighbor_count(std::uint32_t layer) const {
    if (layer > level_) {
        return 0;
    }
    std::uint16_t count = 0;
    std::memcpy(&count, item_.data() + layer_offset(layer), sizeof count);
    return count;
}

IndexTid NodeView::neighbor(std::uint32_t layer, std::size_t i) const {
    return decode_tid<IndexTag>(item_.data() + layer_offset(layer) + sizeof(std::uint16_t) + i * 6);
}

void NodeView::neighbors(std::uint32_t layer, std::vector<IndexTid>& out) const {
    out.clear();
    if (layer > level_) {
        return;
    }
    const std::size_t off = layer_offset(layer);
    std::uint16_t count = 0;
    std::memcpy(&count, item_.data() + off, sizeof count);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(decode_tid<IndexTag>(item_.data() + off + sizeof(std::uint16_t) + i * 6));
    }
}

HnswIndex HnswIndex::build(const Dataset& ds, const HnswBuildParams& params, PagedStore& store, const HeapFile& heap) {
    if (params.M < 2) {
        throw ConfigError("HNSW M must be >= 2");
    }
    if (params.ef_construction < 1) {
        throw ConfigError("HNSW ef_construction must be >= 1");
    }
    if (heap.size() != ds.size() || heap.dim() != ds.dim()) {
        throw ConfigError("heap does not hold the dataset being indexed");
    }
    if (store.page_count(Relation::HnswIndex) != 0) {
        throw StorageError("store already holds an HNSW index");
    }
    const PageGeometry& geom = store.geometry();
    const auto level_cap = static_cast<std::uint32_t>(node_level_cap(ds.dim(), params.M, geom));

    GraphBuilder graph(ds, params, level_cap);
    if (ds.size() > 0) {
        graph.build();
    }

    PageHeader meta_header;
    meta_header.kind = PageKind::HnswMeta;
    meta_header.item_count = 1;
    meta_header.item_size = sizeof(HnswMetaRecord);
    store.allocate(Relation::HnswIndex, meta_header);

    std::vector<std::byte> tuple;
    for (std::uint32_t n = 0; n < ds.size(); ++n) {
        const std::uint32_t level = graph.level(n);
        const std::size_t bytes = node_tuple_bytes(ds.dim(), level, params.M);
        if (bytes > geom.usable_bytes()) {
            throw GraphInfeasible("node tuple exceeds one page");
        }
        tuple.assign(bytes, std::byte{0});
        encode_tid(heap.tid_of(n), tuple.data());
        const auto lvl16 = static_cast<std::uint16_t>(level);
        const auto dim32 = static_cast<std::uint32_t>(ds.dim());
        std::memcpy(tuple.data() + 6, &lvl16, 2);
        std::memcpy(tuple.data() + 8, &dim32, 4);
        auto row = ds.row(n);
        std::memcpy(tuple.data() + kNodeVectorOffset, row.data(), row.size_bytes());
        std::size_t off = kNodeVectorOffset + row.size_bytes();
        for (std::uint32_t l = 0; l <= level; ++l) {
            const auto& links = graph.links(n, l);
            const std::uint32_t cap = l == 0 ? 2 * params.M : params.M;
            const auto count = static_cast<std::uint16_t>(links.size());
            std::memcpy(tuple.data() + off, &count, 2);
            for (std::size_t i = 0; i < links.size(); ++i) {
                encode_tid(tid_of_node(links[i]), tuple.data() + off + 2 + i * 6);
            }
            off += 2 + static_cast<std::size_t>(cap) * 6;
        }
        PageHeader h;
        h.kind = PageKind::HnswNode;
        h.item_count = 1;
        h.item_size = static_cast<std::uint32_t>(bytes);
        h.vector_dim = dim32;
        h.vector_offset = kNodeVectorOffset;
        h.encoding = VectorEncoding::Float32;
        h.aux = level;
        const std::uint32_t block = store.allocate(Relation::HnswIndex, h);
        store.mutable_page({Relation::HnswIndex, block}).write(geom.reserved_bytes, tuple.data(), tuple.size());
    }

    HnswMetaRecord rec{};
    rec.seed = params.seed;
    rec.node_count = ds.size();
    rec.level_scale = effective_level_scale(params);
    rec.M = params.M;
    rec.ef_construction = params.ef_construction;
    rec.dim = static_cast<std::uint32_t>(ds.dim());
    rec.metric = static_cast<std::uint32_t>(ds.metric());
    rec.entry_block = ds.size() > 0 ? tid_of_node(graph.entry()).block : kInvalidBlock;
    rec.max_level = graph.max_level();
    rec.level_cap = level_cap;
    store.mutable_page({Relation::HnswIndex, 0}).write(geom.reserved_bytes, &rec, sizeof rec);

    record_build_knobs(store, "hnsw",
                       {{"M", params.M},
                        {"ef_construction", params.ef_construction},
                        {"level_scale", rec.level_scale},
                        {"seed", params.seed},
                        {"level_cap", level_cap}});

    return open(store);
}

HnswIndex HnswIndex::open(const PagedStore& store) {
    if (store.page_count(Relation::HnswIndex) == 0) {
        throw StorageError("store has no HNSW index");
    }
    HnswIndex index(store, HeapFile::open(store));
    index.load_meta();
    return index;
}

void HnswIndex::load_meta() {
    PageView meta = store_->peek({Relation::HnswIndex, 0});
    if (meta.header().kind != PageKind::HnswMeta) {
        throw StorageError("HNSW meta page missing");
    }
    auto item = meta.item(0);
    HnswMetaRecord rec{};
    std::memcpy(&rec, item.data(), sizeof rec);
    params_.M = rec.M;
    params_.ef_construction = rec.ef_construction;
    params_.level_scale = rec.level_scale;
    params_.seed = rec.seed;
    node_count_ = rec.node_count;
    dim_ = rec.dim;
    metric_ = static_cast<DistanceMetric>(rec.metric);
    entry_block_ = rec.entry_block;
    max_level_ = rec.max_level;
    level_cap_ = rec.level_cap;
    if (store_->page_count(Relation::HnswIndex) != node_count_ + 1) {
        throw StorageError("HNSW page count does not match node count");
    }
    translation_.assign(node_count_ + 1, HeapTid{});
    for (std::uint32_t b = 1; b <= node_count_; ++b) {
        translation_[b] = NodeView(store_->peek({Relation::HnswIndex, b}), params_.M).heaptid();
    }
}

std::vector<Neighbor> HnswIndex::search_unfiltered(std::span<const float> query, std::size_t k, std::size_t ef,
                                                   EventLedger& ledger) const {
    if (ef < k) {
        throw ConfigError("search: ef must be >= k");
    }
    if (query.size() != dim_) {
        throw DimensionMismatch("search: query dim mismatch");
    }
    if (node_count_ == 0 || k == 0) {
        return {};
    }
    const detail::Cand ep = detail::zoom_in(*this, query, ledger);
    detail::BeamState state(node_count_);
    state.visited.insert(ep.node);
    state.candidates.push(ep);
    state.results.push(ep);
    detail::run_beam(*this, query, state, ef, nullptr, detail::kUnbounded, ledger);
    auto sorted = detail::drain_sorted(state.results);
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < sorted.size() && i < k; ++i) {
        out.push_back({heap_.rowid_of(translation_[tid_of_node(sorted[i].node).block]), sorted[i].score});
    }
    std::sort(out.begin(), out.end(), closer);
    return out;
}

namespace detail {

Cand zoom_in(const HnswIndex& index, std::span<const float> query, EventLedger& ledger) {
    (void)index.store().access({Relation::HnswIndex, 0}, ledger);  // meta page: entry point
    Cand cur{0.0F, HnswIndex::node_id(index.entry_point())};
    cur.score = score_node(index, cur.node, query, ledger, [](float) { return true; });
    std::vector<IndexTid> nbrs;
    for (std::uint32_t layer = index.max_level(); layer >= 1; --layer) {
        bool changed = true;
        while (changed) {
            changed = false;
            ledger.add(Counter::Hop);
            {
                PageView page = index.access_node(HnswIndex::tid_of_node(cur.node), ledger);
                index.node(page).neighbors(layer, nbrs);
            }
            for (IndexTid t : nbrs) {
                const std::uint32_t n = HnswIndex::node_id(t);
                const float d = score_node(index, n, query, ledger, [&](float s) { return s < cur.score; });
                if (d < cur.score) {
                    cur = {d, n};
                    changed = true;
                }
            }
        }
    }
    return cur;
}

void run_beam(const HnswIndex& index, std::span<const float> query, BeamState& state, std::size_t ef,
              const FilterBitmap* filter, std::size_t max_visited, EventLedger& ledger) {
    std::vector<IndexTid> nbrs;
    while (!state.candidates.empty()) {
        const Cand c = state.candidates.top();
        if (state.results.size() >= ef && cand_less(state.results.top(), c)) {
            break;
        }
        state.candidates.pop();
        if (state.expanded[c.node] != 0) {
            continue;
        }
        state.expanded[c.node] = 1;
        ledger.add(Counter::Hop);
        {
            PageView page = index.access_node(HnswIndex::tid_of_node(c.node), ledger);
            index.node(page).neighbors(0, nbrs);
        }
        for (IndexTid t : nbrs) {
            const std::uint32_t n = HnswIndex::node_id(t);
            if (state.visited.contains(n)) {
                continue;
            }
            if (state.visited.count() >= max_visited) {
                state.hit_visit_cap = true;
                return;
            }
            state.visited.insert(n);
            bool admit = false;
            HeapTid heaptid;
            const float d = score_node(
                index, n, query, ledger,
                [&](float s) {
                    admit = state.results.size() < ef || cand_less(Cand{s, n}, state.results.top());
                    return admit;
                },
                &heaptid);
            if (!admit) {
                continue;
            }
            state.candidates.push({d, n});
            if (filter != nullptr) {
                ledger.add(Counter::FilterCheck);
                if (!filter->probe(index.rowid_of(heaptid))) {
                    continue;
                }
            }
            state.results.push({d, n});
            if (state.results.size() > ef) {
                state.results.pop();
            }
        }
    }
}

std::vector<Cand> drain_sorted(MaxQueue& w) {
    std::vector<Cand> out;
    out.reserve(w.size());
    while (!w.empty()) {
        out.push_back(w.top());
        w.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace detail

}  // namespace fvs
