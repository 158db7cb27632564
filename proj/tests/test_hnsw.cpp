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

#include <set>

#include "fvs/hnsw.hpp"
#include "test_util.hpp"

namespace fvs {
namespace {

using testing::GraphFixture;

double mean_recall(const GraphFixture& f, const Dataset& queries, std::size_t k, std::size_t ef) {
    double sum = 0;
    for (RowId q = 0; q < queries.size(); ++q) {
        EventLedger ledger;
        const auto got = testing::id_set(f.index->search_unfiltered(queries.row(q), k, ef, ledger));
        const auto want = testing::reference_topk(f.ds, queries.row(q), k);
        std::size_t hit = 0;
        for (RowId r : want) {
            hit += got.count(r);
        }
        sum += static_cast<double>(hit) / static_cast<double>(k);
    }
    return sum / static_cast<double>(queries.size());
}

TEST(ComputeLmax, PageLimitValues) {
    EXPECT_EQ(compute_lmax(40), 31);
    EXPECT_EQ(compute_lmax(80), 14);
    EXPECT_EQ(compute_lmax(32), 40);  // floor(8128 / 192) - 2
}

TEST(ComputeLmax, InfeasibleFanout) {
    EXPECT_THROW((void)compute_lmax(700), GraphInfeasible);
    EXPECT_NO_THROW((void)compute_lmax(677));  // 2 * 677 * 6 = 8124
    EXPECT_THROW((void)compute_lmax(678), GraphInfeasible);
}

TEST(ComputeLmax, SatisfiesInequalityMaximally) {
    const PageGeometry g;
    for (std::uint32_t M = 1; M <= 677; ++M) {
        const int l = compute_lmax(M);
        ASSERT_GE(l, 0);
        EXPECT_LE(static_cast<std::uint64_t>(l + 2) * M * 6, g.usable_bytes());
        EXPECT_GT(static_cast<std::uint64_t>(l + 3) * M * 6, g.usable_bytes());
    }
}

TEST(NodeLevelCap, NeverAboveLmaxAndFits) {
    const PageGeometry g;
    for (std::uint32_t M : {4U, 16U, 32U, 40U, 80U}) {
        for (std::size_t dim : {4U, 128U, 960U}) {
            const int cap = node_level_cap(dim, M);
            EXPECT_LE(cap, compute_lmax(M));
            EXPECT_LE(node_tuple_bytes(dim, static_cast<std::uint32_t>(cap), M), g.usable_bytes());
        }
    }
    EXPECT_THROW((void)node_level_cap(2000, 32), GraphInfeasible);
}

TEST(Build, SingleNode) {
    auto f = GraphFixture::make(Dataset(3, DistanceMetric::L2Squared, {1, 2, 3}), 8, 16, 1);
    EXPECT_EQ(f->index->size(), 1U);
    EXPECT_EQ(HnswIndex::node_id(f->index->entry_point()), 0U);
    EventLedger ledger;
    const auto r = f->index->search_unfiltered(std::vector<float>{0, 0, 0}, 1, 1, ledger);
    ASSERT_EQ(r.size(), 1U);
    EXPECT_EQ(r[0].rowid, 0U);
}

class SmallGraph : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        Dataset queries;
        Dataset base = testing::uniform_dataset(1000, 16, 21, 50, &queries);
        fixture_ = GraphFixture::make(std::move(base), 8, 64, 5).release();
        queries_ = new Dataset(std::move(queries));
    }
    static void TearDownTestSuite() {
        delete fixture_;
        delete queries_;
    }
    static GraphFixture* fixture_;
    static Dataset* queries_;
};
GraphFixture* SmallGraph::fixture_ = nullptr;
Dataset* SmallGraph::queries_ = nullptr;

TEST_F(SmallGraph, EveryTupleFitsOnePage) {
    const HnswIndex& idx = *fixture_->index;
    const PageGeometry g;
    for (std::uint32_t i = 0; i < idx.size(); ++i) {
        const NodeView n = idx.inspect(i);
        EXPECT_LE(n.level(), idx.level_cap());
        EXPECT_LE(static_cast<int>(n.level()), compute_lmax(idx.M()));
        EXPECT_LE(node_tuple_bytes(idx.dim(), n.level(), idx.M()), g.usable_bytes());
    }
}

TEST_F(SmallGraph, NeighborListsRespectFanout) {
    const HnswIndex& idx = *fixture_->index;
    std::vector<IndexTid> nbrs;
    for (std::uint32_t i = 0; i < idx.size(); ++i) {
        const NodeView n = idx.inspect(i);
        for (std::uint32_t layer = 0; layer <= n.level(); ++layer) {
            n.neighbors(layer, nbrs);
            EXPECT_LE(nbrs.size(), idx.fanout(layer));
            std::set<std::uint32_t> uniq;
            for (IndexTid t : nbrs) {
                const auto id = HnswIndex::node_id(t);
                ASSERT_LT(id, idx.size());
                EXPECT_NE(id, i);
                EXPECT_GE(idx.inspect(id).level(), layer);
                uniq.insert(id);
            }
            EXPECT_EQ(uniq.size(), nbrs.size());
        }
        EXPECT_EQ(idx.rowid_of(n.heaptid()), i);
    }
}

TEST_F(SmallGraph, EntryPointHasTopLevel) {
    const HnswIndex& idx = *fixture_->index;
    EXPECT_EQ(idx.inspect(HnswIndex::node_id(idx.entry_point())).level(), idx.max_level());
}

TEST_F(SmallGraph, ExhaustiveBeamIsExact) {
    EXPECT_EQ(mean_recall(*fixture_, *queries_, 10, fixture_->ds.size()), 1.0);
}

TEST_F(SmallGraph, StoredVectorFindsItself) {
    for (RowId r = 0; r < 100; ++r) {
        EventLedger ledger;
        const auto res = fixture_->index->search_unfiltered(fixture_->ds.row(r * 7), 1, 16, ledger);
        ASSERT_EQ(res.size(), 1U);
        EXPECT_EQ(res[0].rowid, r * 7);
        EXPECT_EQ(res[0].score, 0.0F);
    }
}

TEST_F(SmallGraph, RecallMonotoneInEf) {
    double prev = 0.0;
    for (std::size_t ef : {10U, 20U, 40U, 80U}) {
        const double r = mean_recall(*fixture_, *queries_, 10, ef);
        EXPECT_GE(r, prev) << "ef " << ef;
        prev = r;
    }
}

TEST_F(SmallGraph, ResultsAscendingAndCountersConsistent) {
    EventLedger ledger;
    const auto r = fixture_->index->search_unfiltered(queries_->row(0), 10, 40, ledger);
    ASSERT_EQ(r.size(), 10U);
    for (std::size_t i = 1; i < r.size(); ++i) {
        EXPECT_TRUE(closer(r[i - 1], r[i]));
    }
    EXPECT_GT(ledger[Counter::Hop], 0U);
    EXPECT_GE(ledger[Counter::DistanceComputation], ledger[Counter::Hop]);
    EXPECT_LE(ledger[Counter::Hop], fixture_->ds.size() + 64);
    EXPECT_EQ(ledger[Counter::FilterCheck], 0U);
}

TEST_F(SmallGraph, EfBelowKRejected) {
    EventLedger ledger;
    EXPECT_THROW((void)fixture_->index->search_unfiltered(queries_->row(0), 10, 5, ledger), ConfigError);
}

TEST_F(SmallGraph, ReopenGivesIdenticalSearch) {
    const HnswIndex again = HnswIndex::open(fixture_->store);
    for (RowId q = 0; q < 10; ++q) {
        EventLedger a;
        EventLedger b;
        EXPECT_EQ(fixture_->index->search_unfiltered(queries_->row(q), 10, 32, a),
                  again.search_unfiltered(queries_->row(q), 10, 32, b));
        EXPECT_EQ(a, b);
    }
}

TEST_F(SmallGraph, BuildKnobsRecorded) {
    const std::string& meta = fixture_->store.metadata();
    EXPECT_NE(meta.find("\"hnsw\""), std::string::npos);
    EXPECT_NE(meta.find("\"ef_construction\":64"), std::string::npos);
}

TEST(Build, DeterministicForSeed) {
    const Dataset ds = testing::uniform_dataset(400, 8, 3);
    auto a = GraphFixture::make(ds, 6, 32, 9);
    auto b = GraphFixture::make(ds, 6, 32, 9);
    EXPECT_TRUE(a->store == b->store);
    auto c = GraphFixture::make(ds, 6, 32, 10);
    EXPECT_FALSE(a->store == c->store);
}

TEST(Build, LayerOccupancyNearInverseM) {
    const std::uint32_t M = 16;
    auto f = GraphFixture::make(testing::uniform_dataset(10000, 4, 8), M, 24, 2);
    std::size_t upper = 0;
    for (std::uint32_t i = 0; i < f->index->size(); ++i) {
        upper += f->index->inspect(i).level() > 0 ? 1 : 0;
    }
    const double frac = static_cast<double>(upper) / 10000.0;
    EXPECT_GT(frac, 0.5 / M);
    EXPECT_LT(frac, 1.5 / M);
}

TEST(TranslationMap, LookupMatchesTupleHeaptid) {
    auto f = GraphFixture::make(testing::uniform_dataset(200, 4, 8), 4, 16, 2);
    const TranslationMap tm = f->index->translation_map();
    for (std::uint32_t i = 0; i < f->index->size(); ++i) {
        EXPECT_EQ(tm.lookup(HnswIndex::tid_of_node(i)), f->index->inspect(i).heaptid());
    }
    EXPECT_THROW((void)tm.lookup(IndexTid{100000, 1}), StorageError);
}

}  // namespace
}  // namespace fvs
