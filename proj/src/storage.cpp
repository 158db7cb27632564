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

#include "fvs/storage.hpp"

#include <bit>
#include <fstream>

namespace fvs {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

namespace {

constexpr std::array<char, 8> kStoreMagic = {'F', 'V', 'S', 'S', 'T', 'O', 'R', 'E'};
constexpr std::uint32_t kStoreVersion = 1;

std::string relation_name(Relation r) {
    switch (r) {
        case Relation::Heap:
            return "heap";
        case Relation::HnswIndex:
            return "hnsw";
        case Relation::ScannIndex:
            return "scann";
    }
    return "?";
}

template <typename T>
void put_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw StorageError("store file truncated");
    }
    return v;
}

PageHeader decode_header(std::span<const std::byte> bytes) {
    PageHeader h;
    if (bytes.size() < sizeof(PageHeader)) {
        return h;
    }
    std::memcpy(&h, bytes.data(), sizeof(PageHeader));
    return h;
}

}  // namespace

PageHeader PageView::header() const { return decode_header(bytes_); }

std::span<const std::byte> PageView::item(std::size_t slot) const {
    const PageHeader h = header();
    if (slot >= h.item_count) {
        throw StorageError("empty slot " + std::to_string(slot) + " on block " + std::to_string(id_.block));
    }
    const std::size_t begin = geometry_->reserved_bytes + slot * h.item_size;
    if (begin + h.item_size > bytes_.size()) {
        throw StorageError("item extends past written page bytes");
    }
    return bytes_.subspan(begin, h.item_size);
}

std::span<const float> PageView::vector(std::size_t slot) const {
    const PageHeader h = header();
    if (h.encoding != VectorEncoding::Float32) {
        throw StorageError("page does not hold float32 vectors");
    }
    auto it = item(slot);
    const std::byte* p = it.data() + h.vector_offset;
    if (reinterpret_cast<std::uintptr_t>(p) % alignof(float) != 0 ||
        h.vector_offset + h.vector_dim * sizeof(float) > it.size()) {
        throw StorageError("malformed vector tuple");
    }
    return {reinterpret_cast<const float*>(p), h.vector_dim};
}

Vector materialize_vector(const PageView& view, std::size_t slot, EventLedger& ledger) {
    auto v = view.vector(slot);
    ledger.add(Counter::TupleMaterialize);
    return Vector(std::vector<float>(v.begin(), v.end()));
}

PagedStore::PagedStore(PageGeometry geometry) : geometry_(geometry) {
    if (geometry_.reserved_bytes < sizeof(PageHeader) || geometry_.reserved_bytes >= geometry_.page_size_bytes) {
        throw ConfigError("invalid page geometry");
    }
}

std::uint32_t PagedStore::allocate(Relation relation, const PageHeader& header) {
    auto& pages = relations_[static_cast<std::size_t>(relation)];
    pages.emplace_back(geometry_.reserved_bytes, std::byte{0});
    std::memcpy(pages.back().data(), &header, sizeof(PageHeader));
    return static_cast<std::uint32_t>(pages.size() - 1);
}

std::uint32_t PagedStore::page_count(Relation relation) const {
    return static_cast<std::uint32_t>(relations_[static_cast<std::size_t>(relation)].size());
}

const std::vector<std::byte>& PagedStore::page_bytes(PageId id) const {
    const auto& pages = relations_[static_cast<std::size_t>(id.relation)];
    if (id.block >= pages.size()) {
        throw StorageError("unknown page " + relation_name(id.relation) + ":" + std::to_string(id.block));
    }
    return pages[id.block];
}

PageView PagedStore::access(PageId id, EventLedger& ledger) const {
    // pin + shared lock, read, release: accounting only, everything is resident
    const auto& bytes = page_bytes(id);
    ledger.add(Counter::PageAccess);
    return PageView(id, bytes, &geometry_);
}

PageView PagedStore::peek(PageId id) const { return PageView(id, page_bytes(id), &geometry_); }

PagedStore::PageWriter PagedStore::mutable_page(PageId id) {
    auto& pages = relations_[static_cast<std::size_t>(id.relation)];
    if (id.block >= pages.size()) {
        throw StorageError("unknown page " + relation_name(id.relation) + ":" + std::to_string(id.block));
    }
    return PageWriter(pages[id.block], geometry_);
}

void PagedStore::PageWriter::write(std::size_t offset, const void* src, std::size_t len) {
    if (offset + len > geometry_->page_size_bytes) {
        throw StorageError("write past end of page");
    }
    if (bytes_->size() < offset + len) {
        bytes_->resize(offset + len, std::byte{0});
    }
    std::memcpy(bytes_->data() + offset, src, len);
}

void PagedStore::PageWriter::set_header(const PageHeader& header) { write(0, &header, sizeof header); }

PageHeader PagedStore::PageWriter::header() const { return decode_header(*bytes_); }

void PagedStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StorageError("cannot write store " + path.string());
    }
    out.write(kStoreMagic.data(), kStoreMagic.size());
    put_raw(out, kStoreVersion);
    put_raw(out, geometry_.page_size_bytes);
    put_raw(out, geometry_.reserved_bytes);
    put_raw(out, geometry_.tid_size_bytes);
    put_raw(out, static_cast<std::uint64_t>(metadata_.size()));
    out.write(metadata_.data(), static_cast<std::streamsize>(metadata_.size()));
    put_raw(out, static_cast<std::uint32_t>(kRelationCount));
    for (const auto& pages : relations_) {
        put_raw(out, static_cast<std::uint32_t>(pages.size()));
        for (const auto& page : pages) {
            put_raw(out, static_cast<std::uint32_t>(page.size()));
            out.write(reinterpret_cast<const char*>(page.data()), static_cast<std::streamsize>(page.size()));
        }
    }
    if (!out) {
        throw StorageError("failed writing store " + path.string());
    }
}

PagedStore PagedStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open store " + path.string());
    }
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kStoreMagic) {
        throw StorageError("not a store file: " + path.string());
    }
    if (get_raw<std::uint32_t>(in) != kStoreVersion) {
        throw StorageError("unsupported store version in " + path.string());
    }
    PageGeometry g;
    g.page_size_bytes = get_raw<std::uint32_t>(in);
    g.reserved_bytes = get_raw<std::uint32_t>(in);
    g.tid_size_bytes = get_raw<std::uint32_t>(in);
    PagedStore store(g);
    const auto meta_len = get_raw<std::uint64_t>(in);
    store.metadata_.resize(meta_len);
    if (!in.read(store.metadata_.data(), static_cast<std::streamsize>(meta_len))) {
        throw StorageError("store file truncated");
    }
    if (get_raw<std::uint32_t>(in) != kRelationCount) {
        throw StorageError("unexpected relation count in " + path.string());
    }
    for (auto& pages : store.relations_) {
        const auto count = get_raw<std::uint32_t>(in);
        pages.resize(count);
        for (auto& page : pages) {
            const auto len = get_raw<std::uint32_t>(in);
            if (len > g.page_size_bytes) {
                throw StorageError("page larger than page size in " + path.string());
            }
            page.resize(len);
            if (!in.read(reinterpret_cast<char*>(page.data()), len)) {
                throw StorageError("store file truncated");
            }
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// Heap

namespace {
constexpr std::size_t kHeapVectorOffset = 12;  // rowid(8) + length(2) + pad(2)
}

std::size_t HeapFile::tuple_bytes_for(std::size_t dim) {
    const std::size_t raw = 8 + 2 + dim * sizeof(float);
    return (raw + 7) / 8 * 8;
}

HeapFile::HeapFile(std::size_t dim, const PageGeometry& geometry)
    : dim_(dim), tuple_bytes_(tuple_bytes_for(dim)), per_page_(geometry.usable_bytes() / tuple_bytes_) {
    if (dim == 0) {
        throw ConfigError("heap dim must be > 0");
    }
    if (per_page_ == 0) {
        throw ConfigError("heap tuple of dim " + std::to_string(dim) + " does not fit on a page");
    }
}

HeapFile HeapFile::open(const PagedStore& store) {
    if (store.page_count(Relation::Heap) == 0) {
        throw StorageError("store has an empty heap");
    }
    const PageHeader h0 = store.peek({Relation::Heap, 0}).header();
    HeapFile heap(h0.vector_dim, store.geometry());
    for (std::uint32_t b = 0; b < store.page_count(Relation::Heap); ++b) {
        heap.rows_ += store.peek({Relation::Heap, b}).header().item_count;
    }
    return heap;
}

HeapTid HeapFile::insert(PagedStore& store, RowId rowid, std::span<const float> vector) {
    if (vector.size() != dim_) {
        throw DimensionMismatch("heap insert: dim mismatch");
    }
    if (rowid != rows_) {
        throw StorageError("heap rows must be inserted densely in rowid order");
    }
    const HeapTid tid = tid_of(rowid);
    if (tid.block == store.page_count(Relation::Heap)) {
        PageHeader h;
        h.kind = PageKind::HeapData;
        h.item_size = static_cast<std::uint32_t>(tuple_bytes_);
        h.vector_dim = static_cast<std::uint32_t>(dim_);
        h.vector_offset = kHeapVectorOffset;
        h.encoding = VectorEncoding::Float32;
        store.allocate(Relation::Heap, h);
    }
    auto page = store.mutable_page({Relation::Heap, tid.block});
    PageHeader h = page.header();
    const std::size_t base = store.geometry().reserved_bytes + (tid.offset - 1U) * tuple_bytes_;
    const auto len = static_cast<std::uint16_t>(dim_);
    page.put(base, static_cast<std::uint64_t>(rowid));
    page.put(base + 8, len);
    page.write(base + kHeapVectorOffset, vector.data(), vector.size_bytes());
    const std::size_t tail = kHeapVectorOffset + vector.size_bytes();
    if (tail < tuple_bytes_) {
        static constexpr std::array<std::byte, 8> kZeros{};
        page.write(base + tail, kZeros.data(), tuple_bytes_ - tail);
    }
    h.item_count = static_cast<std::uint16_t>(h.item_count + 1);
    page.set_header(h);
    ++rows_;
    return tid;
}

HeapTuple HeapFile::fetch(const PagedStore& store, HeapTid tid, EventLedger& ledger) const {
    if (tid.offset == 0 || tid.offset > per_page_ || rowid_of(tid) >= rows_) {
        throw StorageError("dangling heap tid (" + std::to_string(tid.block) + "," + std::to_string(tid.offset) + ")");
    }
    PageView view = store.access({Relation::Heap, tid.block}, ledger);
    const std::size_t slot = tid.offset - 1U;
    auto item = view.item(slot);
    HeapTuple t;
    std::memcpy(&t.rowid, item.data(), sizeof(std::uint64_t));
    t.vector = view.vector(slot);
    return t;
}

HeapTid HeapFile::tid_of(RowId rowid) const {
    return HeapTid{static_cast<std::uint32_t>(rowid / per_page_), static_cast<std::uint16_t>(rowid % per_page_ + 1)};
}

RowId HeapFile::rowid_of(HeapTid tid) const {
    return static_cast<RowId>(tid.block) * per_page_ + (tid.offset - 1U);
}

HeapFile load_heap(PagedStore& store, const Dataset& ds) {
    HeapFile heap(ds.dim(), store.geometry());
    for (RowId r = 0; r < ds.size(); ++r) {
        heap.insert(store, r, ds.row(r));
    }
    return heap;
}

}  // namespace fvs
