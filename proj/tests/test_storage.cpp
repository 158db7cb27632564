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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "fvs/ledger.hpp"
#include "fvs/storage.hpp"
#include "test_util.hpp"

namespace fvs {
namespace {

TEST(PageGeometry, Defaults) {
    const PageGeometry g;
    EXPECT_EQ(g.page_size_bytes, 8192U);
    EXPECT_EQ(g.reserved_bytes, 64U);
    EXPECT_EQ(g.usable_bytes(), 8128U);
    EXPECT_EQ(g.tid_size_bytes, 6U);
}

TEST(Tid, SixByteEncodingRoundTrip) {
    std::array<std::byte, 6> buf{};
    const HeapTid t{0xA1B2C3D4U, 0xBEEF};
    encode_tid(t, buf.data());
    EXPECT_EQ(decode_tid<HeapTag>(buf.data()), t);
}

TEST(PageAccess, CountsEveryAccess) {
    PagedStore store;
    const auto block = store.allocate(Relation::Heap, PageHeader{});
    EventLedger ledger;
    (void)store.access({Relation::Heap, block}, ledger);
    (void)store.access({Relation::Heap, block}, ledger);
    EXPECT_EQ(ledger[Counter::PageAccess], 2U);
    (void)store.peek({Relation::Heap, block});
    EXPECT_EQ(ledger[Counter::PageAccess], 2U);
}

TEST(PageAccess, UnknownPageThrows) {
    PagedStore store;
    EventLedger ledger;
    EXPECT_THROW((void)store.access({Relation::HnswIndex, 3}, ledger), StorageError);
}

TEST(Heap, TupleBytesLayout) {
    // 8 rowid + 2 length + 4*dim, 8-byte aligned.
    EXPECT_EQ(HeapFile::tuple_bytes_for(128), 528U);
    EXPECT_EQ(HeapFile::tuple_bytes_for(1), 16U);
    EXPECT_EQ(HeapFile::tuple_bytes_for(16), 80U);
}

TEST(Heap, PageCountFromDensity) {
    const Dataset ds = testing::uniform_dataset(1000, 128, 1);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    const std::size_t per_page = 8128 / 528;
    EXPECT_EQ(heap.tuples_per_page(), per_page);
    EXPECT_EQ(store.page_count(Relation::Heap), (1000 + per_page - 1) / per_page);
}

TEST(Heap, FetchAfterInsertIsBitwiseIdentical) {
    const Dataset ds = testing::uniform_dataset(300, 24, 9);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    for (RowId r = 0; r < ds.size(); ++r) {
        EventLedger ledger;
        const HeapTuple t = heap.fetch(store, heap.tid_of(r), ledger);
        EXPECT_EQ(t.rowid, r);
        ASSERT_EQ(t.vector.size(), ds.dim());
        EXPECT_EQ(std::memcmp(t.vector.data(), ds.row(r).data(), ds.dim() * sizeof(float)), 0);
        EXPECT_EQ(ledger[Counter::PageAccess], 1U);
        EXPECT_EQ(heap.rowid_of(heap.tid_of(r)), r);
    }
}

TEST(Heap, DanglingTidThrows) {
    const Dataset ds = testing::uniform_dataset(10, 4, 9);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    EventLedger ledger;
    EXPECT_THROW((void)heap.fetch(store, HeapTid{500, 1}, ledger), StorageError);
    EXPECT_THROW((void)heap.fetch(store, HeapTid{0, 0}, ledger), StorageError);
    EXPECT_THROW((void)heap.fetch(store, HeapTid{0, 200}, ledger), StorageError);
}

TEST(Heap, ReopenFromStore) {
    const Dataset ds = testing::uniform_dataset(100, 5, 2);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    const HeapFile again = HeapFile::open(store);
    EXPECT_EQ(again.size(), heap.size());
    EXPECT_EQ(again.dim(), heap.dim());
}

TEST(Materialize, CopyOutlivesPage) {
    const Dataset ds = testing::uniform_dataset(20, 6, 2);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    EventLedger ledger;
    const HeapTid tid = heap.tid_of(3);
    const PageView view = store.access({Relation::Heap, tid.block}, ledger);
    const Vector copy = materialize_vector(view, tid.offset - 1U, ledger);
    EXPECT_EQ(ledger[Counter::TupleMaterialize], 1U);
    (void)store.access({Relation::Heap, tid.block}, ledger);
    EXPECT_EQ(std::vector<float>(copy.values().begin(), copy.values().end()),
              std::vector<float>(ds.row(3).begin(), ds.row(3).end()));
}

TEST(Materialize, EmptySlotThrows) {
    const Dataset ds = testing::uniform_dataset(2, 6, 2);
    PagedStore store;
    (void)load_heap(store, ds);
    EventLedger ledger;
    const PageView view = store.access({Relation::Heap, 0}, ledger);
    EXPECT_THROW((void)materialize_vector(view, 50, ledger), StorageError);
}

TEST(StoreFile, BitExactRoundTrip) {
    const Dataset ds = testing::uniform_dataset(200, 12, 5);
    PagedStore store;
    (void)load_heap(store, ds);
    store.set_metadata(R"({"note":"x"})");
    const auto path = std::filesystem::temp_directory_path() / "fvs_storage_roundtrip.fvs";
    store.save(path);
    const PagedStore back = PagedStore::load(path);
    EXPECT_TRUE(back == store);
    std::filesystem::remove(path);
}

TEST(StoreFile, RejectsGarbage) {
    const auto path = std::filesystem::temp_directory_path() / "fvs_storage_garbage.fvs";
    {
        std::ofstream out(path, std::ios::binary);
        out << "definitely not a store";
    }
    EXPECT_THROW((void)PagedStore::load(path), StorageError);
    std::filesystem::remove(path);
}

TEST(Ledger, MergeAndDelta) {
    EventLedger a;
    a.add(Counter::Hop, 3);
    a.add(Counter::PageAccess);
    EventLedger b = a;
    b.add(Counter::FilterCheck, 7);
    const EventLedger d = EventLedger::delta(b, a);
    EXPECT_EQ(d[Counter::FilterCheck], 7U);
    EXPECT_EQ(d[Counter::Hop], 0U);
    a += b;
    EXPECT_EQ(a[Counter::Hop], 6U);
    a.reset();
    EXPECT_EQ(a, EventLedger{});
}

TEST(WeightedBreakdown, ZeroLedger) {
    EXPECT_EQ(weighted_breakdown(EventLedger{}, CostWeights::defaults(16)).total, 0.0);
}

TEST(WeightedBreakdown, Arithmetic) {
    EventLedger l;
    l.add(Counter::PageAccess, 2);
    l.add(Counter::DistanceComputation, 3);
    CostWeights w;
    w[Counter::PageAccess] = 1000;
    w[Counter::DistanceComputation] = 10;
    const CostBreakdown b = weighted_breakdown(l, w);
    EXPECT_EQ(b.total, 2030.0);
    EXPECT_EQ(b[Counter::PageAccess], 2000.0);
    EXPECT_EQ(b[Counter::DistanceComputation], 30.0);
}

TEST(WeightedBreakdown, ZeroingAWeightRemovesItsShare) {
    EventLedger l;
    for (std::size_t i = 0; i < kCounterCount; ++i) {
        l.counts[i] = 11 * (i + 1);
    }
    const CostWeights w = CostWeights::defaults(32);
    const CostBreakdown full = weighted_breakdown(l, w);
    for (Counter c : kAllCounters) {
        CostWeights z = w;
        z[c] = 0;
        EXPECT_DOUBLE_EQ(weighted_breakdown(l, z).total, full.total - full[c]);
    }
    double sum = 0;
    for (double f : full.fractions()) {
        sum += f;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(WeightedBreakdown, DefaultsAndValidation) {
    const CostWeights w = CostWeights::defaults(16);
    EXPECT_EQ(w[Counter::PageAccess], 1000);
    EXPECT_EQ(w[Counter::TupleMaterialize], 64);
    EXPECT_EQ(w[Counter::DistanceComputation], 32);
    EXPECT_EQ(w[Counter::FilterCheck], 5);
    EXPECT_EQ(w[Counter::TranslationLookup], 20);
    EXPECT_EQ(w[Counter::ReorderFetch], 1000);
    EXPECT_EQ(w[Counter::Hop], 0);
    CostWeights bad = w;
    bad[Counter::Hop] = -1;
    EXPECT_THROW((void)weighted_breakdown(EventLedger{}, bad), ConfigError);
}

}  // namespace
}  // namespace fvs
