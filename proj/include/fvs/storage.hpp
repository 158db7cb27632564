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
#include <cstring>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fvs/core.hpp"
#include "fvs/errors.hpp"
#include "fvs/ledger.hpp"

namespace fvs {

struct PageGeometry {
    std::uint32_t page_size_bytes = 8192;
    std::uint32_t reserved_bytes = 64;
    std::uint32_t tid_size_bytes = 6;

    [[nodiscard]] std::uint32_t usable_bytes() const { return page_size_bytes - reserved_bytes; }

    friend bool operator==(const PageGeometry&, const PageGeometry&) = default;
};

/// Tuple identifier: (block, 1-based slot). The tag keeps index and heap
/// identifiers from being mixed up.
template <typename Tag>
struct BasicTid {
    std::uint32_t block = 0;
    std::uint16_t offset = 0;

    friend bool operator==(const BasicTid&, const BasicTid&) = default;
    friend auto operator<=>(const BasicTid&, const BasicTid&) = default;
};

struct HeapTag {};
struct IndexTag {};
using HeapTid = BasicTid<HeapTag>;
using IndexTid = BasicTid<IndexTag>;

/// Packs a tid into its 6-byte on-page form.
template <typename Tag>
void encode_tid(BasicTid<Tag> tid, std::byte* out) {
    std::memcpy(out, &tid.block, 4);
    std::memcpy(out + 4, &tid.offset, 2);
}

template <typename Tag>
BasicTid<Tag> decode_tid(const std::byte* in) {
    BasicTid<Tag> tid;
    std::memcpy(&tid.block, in, 4);
    std::memcpy(&tid.offset, in + 4, 2);
    return tid;
}

/// Separate files inside one store.
enum class Relation : std::uint8_t { Heap = 0, HnswIndex = 1, ScannIndex = 2 };
inline constexpr std::size_t kRelationCount = 3;

struct PageId {
    Relation relation = Relation::Heap;
    std::uint32_t block = 0;
};

inline constexpr std::uint32_t kInvalidBlock = 0xFFFFFFFFU;

enum class PageKind : std::uint16_t {
    Empty = 0,
    HeapData = 1,
    HnswMeta = 2,
    HnswNode = 3,
    ScannMeta = 4,
    ScannCentroids = 5,
    ScannLeaf = 6,
};

enum class VectorEncoding : std::uint8_t { None = 0, Float32 = 1, Sq8 = 2 };

/// Lives in the reserved area at the start of every page. Items on a page are
/// fixed-size and packed back to back after the reserved area.
struct PageHeader {
    PageKind kind = PageKind::Empty;
    std::uint16_t item_count = 0;
    std::uint32_t item_size = 0;
    std::uint32_t next_block = kInvalidBlock;  // page chains (leaves, centroid tables)
    std::uint32_t vector_dim = 0;
    std::uint16_t vector_offset = 0;  // within an item
    VectorEncoding encoding = VectorEncoding::None;
    std::uint8_t pad = 0;
    std::uint32_t aux = 0;  // kind-specific (e.g. owning leaf id)
};
static_assert(sizeof(PageHeader) == 24, "PageHeader must have no padding bytes");

/// Read-only view of one page. Valid until the next access in the same
/// session; anything needed longer must be copied with materialize_vector.
class PageView {
public:
    PageView(PageId id, std::span<const std::byte> bytes, const PageGeometry* geometry)
        : id_(id), bytes_(bytes), geometry_(geometry) {}

    [[nodiscard]] PageId id() const { return id_; }
    [[nodiscard]] PageHeader header() const;
    [[nodiscard]] std::span<const std::byte> bytes() const { return bytes_; }
    /// Bytes of item `slot` (0-based). Throws StorageError on empty slot.
    [[nodiscard]] std::span<const std::byte> item(std::size_t slot) const;
    /// Zero-copy float view of the vector stored in item `slot`.
    [[nodiscard]] std::span<const float> vector(std::size_t slot) const;

    template <typename T>
    [[nodiscard]] T read(std::size_t offset) const {
        T v;
        std::memcpy(&v, bytes_.data() + offset, sizeof(T));
        return v;
    }

private:
    PageId id_;
    std::span<const std::byte> bytes_;
    const PageGeometry* geometry_;
};

/// Copies the vector of 0-based `slot` (tid offset - 1) into query-local memory
/// (one tuple_materialize).
Vector materialize_vector(const PageView& view, std::size_t slot, EventLedger& ledger);

/// Page arena. All pages stay resident; every counted read goes through
/// `access`. Build-time writers use `mutable_page` and are not counted.
class PagedStore {
public:
    explicit PagedStore(PageGeometry geometry = {});

    [[nodiscard]] const PageGeometry& geometry() const { return geometry_; }

    /// Appends a zeroed page and returns its block number.
    std::uint32_t allocate(Relation relation, const PageHeader& header);
    [[nodiscard]] std::uint32_t page_count(Relation relation) const;

    /// Counted access: one page_access per call, no deduplication.
    [[nodiscard]] PageView access(PageId id, EventLedger& ledger) const;
    /// Uncounted read for build and maintenance paths.
    [[nodiscard]] PageView peek(PageId id) const;

    class PageWriter {
    public:
        PageWriter(std::vector<std::byte>& bytes, const PageGeometry& geometry) : bytes_(&bytes), geometry_(&geometry) {}
        void write(std::size_t offset, const void* src, std::size_t len);
        template <typename T>
        void put(std::size_t offset, const T& v) {
            write(offset, &v, sizeof(T));
        }
        void set_header(const PageHeader& header);
        [[nodiscard]] PageHeader header() const;

    private:
        std::vector<std::byte>* bytes_;
        const PageGeometry* geometry_;
    };
    PageWriter mutable_page(PageId id);

    /// Free-form build record (JSON), persisted in the file header.
    void set_metadata(std::string metadata) { metadata_ = std::move(metadata); }
    [[nodiscard]] const std::string& metadata() const { return metadata_; }

    void save(const std::filesystem::path& path) const;
    static PagedStore load(const std::filesystem::path& path);

    friend bool operator==(const PagedStore&, const PagedStore&) = default;

private:
    [[nodiscard]] const std::vector<std::byte>& page_bytes(PageId id) const;

    PageGeometry geometry_;
    std::string metadata_;
    // Pages keep only their written prefix; the logical size is page_size_bytes.
    std::array<std::vector<std::vector<std::byte>>, kRelationCount> relations_;
};

struct HeapTuple {
    RowId rowid = 0;
    std::span<const float> vector;  // view into the page
};

/// Heap of (rowid, full-precision vector) tuples. Rows are inserted densely in
/// rowid order, so a heap tid is a pure function of the row id.
class HeapFile {
public:
    HeapFile(std::size_t dim, const PageGeometry& geometry);
    /// Reopens the heap of an existing store.
    static HeapFile open(const PagedStore& store);

    /// align8(8-byte rowid + 2-byte length + dim*4), with the vector 4-byte aligned.
    static std::size_t tuple_bytes_for(std::size_t dim);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t tuple_bytes() const { return tuple_bytes_; }
    [[nodiscard]] std::size_t tuples_per_page() const { return per_page_; }
    [[nodiscard]] std::size_t size() const { return rows_; }

    HeapTid insert(PagedStore& store, RowId rowid, std::span<const float> vector);
    /// One page_access.
    [[nodiscard]] HeapTuple fetch(const PagedStore& store, HeapTid tid, EventLedger& ledger) const;

    [[nodiscard]] HeapTid tid_of(RowId rowid) const;
    [[nodiscard]] RowId rowid_of(HeapTid tid) const;

private:
    std::size_t dim_;
    std::size_t tuple_bytes_;
    std::size_t per_page_;
    std::size_t rows_ = 0;
};

/// Writes every row of `ds` into the heap of `store`.
HeapFile load_heap(PagedStore& store, const Dataset& ds);

}  // namespace fvs
