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

#include <algorithm>
#include <numeric>
#include <set>

#include "fvs/rng.hpp"
#include "fvs/scann.hpp"
#include "test_util.hpp"

namespace fvs {
namespace {

using testing::ScannFixture;

FilterBitmap every_nth(std::size_t n, std::size_t step) {
    FilterBitmap f(n);
    for (RowId r = 0; r < n; r += step) {
        f.set(r);
    }
    return f;
}

FilterBitmap random_bitmap(std::size_t n, double s, std::uint64_t seed) {
    Rng rng(seed);
    FilterBitmap f(n);
    const auto target = static_cast<std::size_t>(std::llround(s * static_cast<double>(n)));
    while (f.cardinality() < target) {
        f.set(rng.below(n));
    }
    return f;
}

TEST(Sq8, ReconstructionWithinOneStep) {
    const Dataset ds = testing::uniform_dataset(500, 16, 4);
    const Sq8Codebook cb = Sq8Codebook::fit(ds);
    std::vector<std::uint8_t> code(16);
    std::vector<float> back(16);
    for (RowId r = 0; r < ds.size(); ++r) {
        cb.encode(ds.row(r), code.data());
        cb.decode(code.data(), back.data());
        for (std::size_t d = 0; d < 16; ++d) {
            const float step = (cb.max()[d] - cb.min()[d]) / 255.0F;
            EXPECT_LE(std::abs(back[d] - ds.row(r)[d]), step * 0.5F + 1e-6F);
            EXPECT_LE(step, 1.0F / 255.0F + 1e-7F);
        }
    }
}

TEST(Sq8, DegenerateDimension) {
    const Dataset ds(2, DistanceMetric::L2Squared, {1.0F, 0.0F, 1.0F, 5.0F});
    const Sq8Codebook cb = Sq8Codebook::fit(ds);
    std::array<std::uint8_t, 2> code{};
    std::array<float, 2> back{};
    cb.encode(ds.row(0), code.data());
    EXPECT_EQ(code[0], 0);
    cb.decode(code.data(), back.data());
    EXPECT_EQ(back[0], 1.0F);
}

TEST(KMeans, SeparatedBlobs) {
    // Two tight blobs 1.0 apart with sigma 0.01.
    Rng rng(3);
    std::vector<float> v;
    for (int i = 0; i < 200; ++i) {
        const float c = i < 100 ? 0.0F : 1.0F;
        for (int d = 0; d < 4; ++d) {
            v.push_back(c + 0.01F * static_cast<float>(rng.normal()));
        }
    }
    const Dataset ds(4, DistanceMetric::L2Squared, v);
    auto f = ScannFixture::make(ds, {2, 1, 10, false, 1});
    const ScannIndex& idx = *f->index;
    for (std::size_t leaf = 0; leaf < 2; ++leaf) {
        const auto own = idx.leaf_centroid(leaf);
        const auto other = idx.leaf_centroid(1 - leaf);
        const auto members = idx.leaf_members(leaf);
        EXPECT_EQ(members.size(), 100U);
        for (RowId r : members) {
            EXPECT_LT(distance(DistanceMetric::L2Squared, ds.row(r), own),
                      distance(DistanceMetric::L2Squared, ds.row(r), other));
        }
    }
}

TEST(KMeans, NoEmptyClustersAndDeterministic) {
    const Dataset ds = testing::uniform_dataset(300, 3, 8);
    std::vector<RowId> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    const auto a = kmeans(ds, rows, 40, 5, 11);
    const auto b = kmeans(ds, rows, 40, 5, 11);
    EXPECT_EQ(a.centroids, b.centroids);
    EXPECT_EQ(a.assignment, b.assignment);
    std::vector<int> sizes(40, 0);
    for (auto c : a.assignment) {
        ++sizes[c];
    }
    for (int s : sizes) {
        EXPECT_GT(s, 0);
    }
    EXPECT_THROW((void)kmeans(ds, rows, 301, 5, 11), ConfigError);
}

TEST(ScannBuild, SingletonLeavesAreExact) {
    const Dataset ds = testing::uniform_dataset(100, 8, 2);
    auto f = ScannFixture::make(ds, {100, 1, 5, false, 3});
    EXPECT_EQ(f->index->num_leaves(), 100U);
    const FilterBitmap all = FilterBitmap::all(100);
    for (RowId q = 0; q < 10; ++q) {
        EventLedger ledger;
        const auto r = f->index->filtered_search(ds.row(q), 5, 100, 1, all, ledger);
        EXPECT_EQ(r.neighbors, brute_force_topk(ds, ds.row(q), 5));
    }
}

TEST(ScannBuild, TooManyLeaves) {
    const Dataset ds = testing::uniform_dataset(10, 4, 2);
    PagedStore store;
    const HeapFile heap = load_heap(store, ds);
    EXPECT_THROW((void)ScannIndex::build(ds, {11, 1, 5, false, 3}, store, heap), ConfigError);
}

class ScannSuite : public ::testing::TestWithParam<std::tuple<bool, std::uint32_t>> {
protected:
    void SetUp() override {
        Dataset base = testing::uniform_dataset(3000, 16, 41, 30, &queries_);
        ScannBuildParams p;
        p.quantize = std::get<0>(GetParam());
        p.max_num_levels = std::get<1>(GetParam());
        p.seed = 5;
        f_ = ScannFixture::make(std::move(base), p);
    }
    std::unique_ptr<ScannFixture> f_;
    Dataset queries_;
};

TEST_P(ScannSuite, LeavesPartitionRows) {
    const ScannIndex& idx = *f_->index;
    EXPECT_EQ(idx.num_leaves(), 55U);  // round(sqrt(3000))
    std::vector<int> seen(f_->ds.size(), 0);
    for (std::size_t l = 0; l < idx.num_leaves(); ++l) {
        const auto m = idx.leaf_members(l);
        const std::size_t per = idx.members_per_page();
        EXPECT_EQ(per, 8128 / idx.entry_bytes());
        EXPECT_EQ(idx.leaf_chain_length(l), (m.size() + per - 1) / per);
        for (RowId r : m) {
            ++seen[r];
        }
    }
    for (int s : seen) {
        EXPECT_EQ(s, 1);
    }
    EXPECT_EQ(idx.entry_bytes(), idx.quantized() ? 8U + 16U : 8U + 64U);
}

TEST_P(ScannSuite, FullScanMatchesOracle) {
    const ScannIndex& idx = *f_->index;
    const FilterBitmap all = FilterBitmap::all(f_->ds.size());
    const FilterBitmap some = every_nth(f_->ds.size(), 7);
    for (const FilterBitmap* bm : {&all, &some}) {
        for (RowId q = 0; q < queries_.size(); ++q) {
            EventLedger ledger;
            const auto r = idx.filtered_search(queries_.row(q), 10, idx.num_leaves(), 1000, *bm, ledger);
            EXPECT_EQ(testing::id_set(r.neighbors),
                      testing::id_set(testing::reference_topk(f_->ds, queries_.row(q), 10, bm)));
        }
    }
}

TEST_P(ScannSuite, FilterChecksCountEveryScannedMember) {
    const ScannIndex& idx = *f_->index;
    const std::size_t L = 5;
    std::vector<std::uint64_t> checks;
    std::vector<std::uint64_t> dists;
    for (double s : {0.01, 0.1, 0.5, 0.9}) {
        const FilterBitmap bm = random_bitmap(f_->ds.size(), s, 17);
        EventLedger ledger;
        (void)idx.filtered_search(queries_.row(0), 10, L, 1, bm, ledger);
        checks.push_back(ledger[Counter::FilterCheck]);
        dists.push_back(ledger[Counter::DistanceComputation]);
        EXPECT_EQ(ledger[Counter::LeafScanned], L);
    }
    for (std::size_t i = 1; i < checks.size(); ++i) {
        EXPECT_EQ(checks[i], checks[0]);
        EXPECT_GT(dists[i], dists[i - 1]);
    }
}

TEST_P(ScannSuite, LeafScanAccessesEachChainPageOnce) {
    const ScannIndex& idx = *f_->index;
    const FilterBitmap all_pass = every_nth(f_->ds.size(), 1);
    EventLedger one;
    (void)idx.filtered_search(queries_.row(0), 10, 1, 1, all_pass, one);
    EventLedger two;
    (void)idx.filtered_search(queries_.row(0), 10, 2, 1, all_pass, two);
    // The extra leaf contributes its chain pages plus its members' checks.
    EXPECT_GE(two[Counter::PageAccess], one[Counter::PageAccess] + 1);
    std::uint64_t members_total = 0;
    for (std::size_t l = 0; l < idx.num_leaves(); ++l) {
        members_total += idx.leaf_members(l).size();
    }
    EventLedger all;
    (void)idx.filtered_search(queries_.row(0), 10, idx.num_leaves(), 1, all_pass, all);
    EXPECT_EQ(all[Counter::FilterCheck], members_total);
}

TEST_P(ScannSuite, RecallMonotoneInLeaves) {
    const ScannIndex& idx = *f_->index;
    const FilterBitmap bm = random_bitmap(f_->ds.size(), 0.3, 2);
    double prev = 0.0;
    for (std::size_t L : {1U, 2U, 4U, 8U, 16U, 55U}) {
        double sum = 0.0;
        for (RowId q = 0; q < queries_.size(); ++q) {
            EventLedger ledger;
            const auto got = testing::id_set(idx.filtered_search(queries_.row(q), 10, L, 4, bm, ledger).neighbors);
            for (RowId r : testing::reference_topk(f_->ds, queries_.row(q), 10, &bm)) {
                sum += static_cast<double>(got.count(r));
            }
        }
        const double recall = sum / (10.0 * static_cast<double>(queries_.size()));
        EXPECT_GE(recall, prev - 1e-12) << "L " << L;
        prev = recall;
    }
}

INSTANTIATE_TEST_SUITE_P(Layouts, ScannSuite,
                         ::testing::Combine(::testing::Bool(), ::testing::Values(1U, 2U)));

TEST(ScannReorder, FetchesOneHeapTuplePerCandidate) {
    const Dataset ds = testing::uniform_dataset(1000, 16, 6);
    auto f = ScannFixture::make(ds, {0, 1, 10, true, 2});
    const FilterBitmap all = FilterBitmap::all(1000);
    EventLedger plain;
    (void)f->index->filtered_search(ds.row(3), 10, 3, 1, all, plain);
    EventLedger reordered;
    (void)f->index->filtered_search(ds.row(3), 10, 3, 4, all, reordered);
    EXPECT_EQ(plain[Counter::ReorderFetch], 10U);
    EXPECT_EQ(reordered[Counter::ReorderFetch], 40U);
    EXPECT_EQ(reordered[Counter::PageAccess] - plain[Counter::PageAccess], 30U);
}

TEST(ScannReorder, QuantizedEqualsExactWithFullReorder) {
    Dataset queries;
    const Dataset ds = testing::uniform_dataset(1000, 16, 6, 20, &queries);
    auto exact = ScannFixture::make(ds, {0, 1, 10, false, 2});
    auto quant = ScannFixture::make(ds, {0, 1, 10, true, 2});
    const FilterBitmap bm = every_nth(1000, 3);
    for (RowId q = 0; q < queries.size(); ++q) {
        EventLedger a;
        EventLedger b;
        const auto ra = exact->index->filtered_search(queries.row(q), 10, 4, 1, bm, a);
        const auto rb = quant->index->filtered_search(queries.row(q), 10, 4, 1000, bm, b);
        EXPECT_EQ(testing::id_set(ra.neighbors), testing::id_set(rb.neighbors));
    }
}

TEST(ScannSearch, TruncatedWhenTooFewPassers) {
    const Dataset ds = testing::uniform_dataset(1000, 8, 6);
    auto f = ScannFixture::make(ds, {0, 1, 10, false, 2});
    const FilterBitmap bm = every_nth(1000, 100);
    EventLedger ledger;
    const auto r = f->index->filtered_search(ds.row(0), 10, 1, 1, bm, ledger);
    EXPECT_TRUE(r.truncated);
    EXPECT_THROW((void)f->index->filtered_search(ds.row(0), 10, 0, 1, bm, ledger), ConfigError);
}

TEST(ScannSearch, ReopenAndDeterminism) {
    const Dataset ds = testing::uniform_dataset(800, 8, 6);
    auto a = ScannFixture::make(ds, {0, 2, 10, true, 2});
    auto b = ScannFixture::make(ds, {0, 2, 10, true, 2});
    EXPECT_TRUE(a->store == b->store);
    const ScannIndex again = ScannIndex::open(a->store);
    const FilterBitmap all = FilterBitmap::all(800);
    EventLedger l1;
    EventLedger l2;
    EXPECT_EQ(a->index->filtered_search(ds.row(5), 10, 4, 2, all, l1).neighbors,
              again.filtered_search(ds.row(5), 10, 4, 2, all, l2).neighbors);
    EXPECT_EQ(l1, l2);
    EXPECT_NE(a->store.metadata().find("\"scann\""), std::string::npos);
}

TEST(ScannSearchConfig, Parse) {
    const auto c = ScannSearchConfig::parse("leaves_to_scan = 12; reorder_factor = 3");
    EXPECT_EQ(c.leaves_to_scan, 12U);
    EXPECT_EQ(c.reorder_factor, 3U);
    EXPECT_EQ(ScannSearchConfig::parse(c.to_text()).leaves_to_scan, 12U);
    EXPECT_THROW((void)ScannSearchConfig::parse("leaves = 3"), ConfigError);
}

}  // namespace
}  // namespace fvs
