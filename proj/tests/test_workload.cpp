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

#include <filesystem>
#include <fstream>

#include "fvs/rng.hpp"
#include "fvs/workload.hpp"
#include "test_util.hpp"

namespace fvs {
namespace {

namespace fs = std::filesystem;

Dataset line4() { return Dataset(1, DistanceMetric::L2Squared, {0.0F, 1.0F, 2.0F, 3.0F}); }

std::size_t max_rank(const RankedArray& ranked, const FilterBitmap& bm) {
    std::size_t m = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (bm.probe(ranked.ids[i])) {
            m = i;
        }
    }
    return m;
}

TEST(RankAll, ColinearPoints) {
    const Dataset ds = line4();
    EXPECT_EQ(rank_all(ds, std::vector<float>{0.0F}).ids, (std::vector<RowId>{0, 1, 2, 3}));
    EXPECT_EQ(rank_all(ds, std::vector<float>{3.0F}).ids, (std::vector<RowId>{3, 2, 1, 0}));
}

TEST(RankAll, AgreesWithOracleOrder) {
    const Dataset ds = testing::uniform_dataset(600, 8, 3);
    const auto ranked = rank_all(ds, ds.row(9));
    const auto full = brute_force_topk(ds, ds.row(9), ds.size());
    ASSERT_EQ(full.size(), ranked.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_EQ(full[i].rowid, ranked.ids[i]);
        EXPECT_EQ(full[i].score, ranked.scores[i]);
    }
}

TEST(Windows, Sizes) {
    EXPECT_EQ(window_size(Correlation::HighPositive, 10), 4U);
    EXPECT_EQ(window_size(Correlation::MediumPositive, 9), 5U);
    EXPECT_EQ(window_size(Correlation::LowPositive, 9), 9U);
    EXPECT_EQ(window_size(Correlation::Negative, 9), 9U);
    EXPECT_EQ(window_size(Correlation::None, 9), 9U);
    EXPECT_EQ(target_cardinality(0.1, 1000), 100U);
    EXPECT_EQ(target_cardinality(0.0005, 1000), 1U);  // round half away from zero
    EXPECT_THROW((void)target_cardinality(0.0, 10), ConfigError);
    EXPECT_THROW((void)target_cardinality(1.5, 10), ConfigError);
}

TEST(Correlation, NamesRoundTrip) {
    for (Correlation c : kAllCorrelations) {
        EXPECT_EQ(parse_correlation(to_string(c)), c);
    }
    EXPECT_THROW((void)parse_correlation("sideways"), ConfigError);
}

class Bitmaps : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        ds_ = new Dataset(testing::uniform_dataset(1000, 8, 12));
        ranked_ = new RankedArray(rank_all(*ds_, ds_->row(0)));
    }
    static void TearDownTestSuite() {
        delete ds_;
        delete ranked_;
    }
    static Dataset* ds_;
    static RankedArray* ranked_;
};
Dataset* Bitmaps::ds_ = nullptr;
RankedArray* Bitmaps::ranked_ = nullptr;

TEST_F(Bitmaps, NoneHasExactCardinality) {
    EXPECT_EQ(generate_bitmap(*ranked_, 0.1, Correlation::None, 1).cardinality(), 100U);
}

TEST_F(Bitmaps, ExactCardinalityAndWindowContainment) {
    for (Correlation c : kAllCorrelations) {
        for (double s : {0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9}) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const std::size_t target = target_cardinality(s, 1000);
                if (target > window_size(c, 1000)) {
                    EXPECT_THROW((void)generate_bitmap(*ranked_, s, c, seed), WindowOverflow);
                    continue;
                }
                const FilterBitmap bm = generate_bitmap(*ranked_, s, c, seed);
                EXPECT_EQ(bm.cardinality(), target);
                EXPECT_LT(max_rank(*ranked_, bm), window_size(c, 1000));
            }
        }
    }
}

TEST_F(Bitmaps, HighPositiveOverflowExample) {
    EXPECT_THROW((void)generate_bitmap(*ranked_, 0.5, Correlation::HighPositive, 0), WindowOverflow);
}

TEST_F(Bitmaps, DeterministicPerSeed) {
    for (Correlation c : kAllCorrelations) {
        EXPECT_EQ(generate_bitmap(*ranked_, 0.2, c, 9), generate_bitmap(*ranked_, 0.2, c, 9));
        EXPECT_NE(generate_bitmap(*ranked_, 0.2, c, 9), generate_bitmap(*ranked_, 0.2, c, 10));
    }
}

TEST_F(Bitmaps, ExcludeRowNeverSelected) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FilterBitmap bm = generate_bitmap(*ranked_, 0.3, Correlation::HighPositive, seed, 0.25, RowId{0});
        EXPECT_FALSE(bm.probe(0));
        EXPECT_EQ(bm.cardinality(), 300U);
    }
    // A full window minus the excluded row cannot hold the whole target.
    EXPECT_THROW((void)generate_bitmap(*ranked_, 1.0, Correlation::None, 0, 0.25, RowId{0}), WindowOverflow);
}

TEST_F(Bitmaps, TemperatureSharpensConcentration) {
    const double sharp = mean_normalized_rank(*ranked_, generate_bitmap(*ranked_, 0.05, Correlation::LowPositive, 3, 0.05));
    const double broad = mean_normalized_rank(*ranked_, generate_bitmap(*ranked_, 0.05, Correlation::LowPositive, 3, 5.0));
    EXPECT_LT(sharp, broad);
    EXPECT_THROW((void)generate_bitmap(*ranked_, 0.05, Correlation::LowPositive, 3, 0.0), ConfigError);
}

TEST(CorrelationOrdering, MeanNormalizedRankOverSeeds) {
    const Dataset ds = testing::uniform_dataset(10000, 16, 77);
    std::array<double, 5> mean{};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ranked = rank_all(ds, ds.row(seed * 31));
        for (std::size_t i = 0; i < kAllCorrelations.size(); ++i) {
            mean[i] += mean_normalized_rank(ranked, generate_bitmap(ranked, 0.05, kAllCorrelations[i], seed)) / 20.0;
        }
    }
    const auto at = [&](Correlation c) { return mean[static_cast<std::size_t>(c)]; };
    EXPECT_LT(at(Correlation::HighPositive), at(Correlation::MediumPositive));
    EXPECT_LT(at(Correlation::MediumPositive), at(Correlation::LowPositive));
    EXPECT_LT(at(Correlation::LowPositive), at(Correlation::None));
    EXPECT_LT(at(Correlation::None), at(Correlation::Negative));
}

TEST(GroundTruth, EqualsFilteredRanking) {
    const Dataset ds = testing::uniform_dataset(800, 8, 5);
    const auto ranked = rank_all(ds, ds.row(4));
    const FilterBitmap bm = generate_bitmap(ranked, 0.1, Correlation::MediumPositive, 2);
    const auto gt = ground_truth(ds, ds.row(4), bm, 10);
    std::vector<RowId> from_rank;
    for (RowId r : ranked.ids) {
        if (bm.probe(r) && from_rank.size() < 10) {
            from_rank.push_back(r);
        }
    }
    ASSERT_EQ(gt.size(), 10U);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(gt[i].rowid, from_rank[i]);
    }
}

TEST(Runs, EncodeDecode) {
    const std::vector<std::uint64_t> ids{0, 1, 2, 7, 9, 10, 63, 64, 65};
    const FilterBitmap bm = FilterBitmap::from_rowids(100, ids);
    const auto runs = encode_runs(bm);
    EXPECT_EQ(runs.size(), 4U);
    EXPECT_EQ(runs[0], (std::pair<RowId, std::uint64_t>{0, 3}));
    EXPECT_EQ(decode_runs(100, runs), bm);
    const std::vector<std::pair<RowId, std::uint64_t>> bad{{98, 5}};
    EXPECT_THROW((void)decode_runs(100, bad), DataError);
}

class WorkloadFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("fvs_wl_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

TEST_F(WorkloadFiles, ShapeAndExactness) {
    Dataset held;
    const Dataset ds = testing::uniform_dataset(2000, 8, 5, 2, &held);
    WorkloadSpec spec;
    spec.selectivities = {0.05};
    spec.correlations = {Correlation::None};
    spec.ks = {5, 10};
    spec.seed = 3;
    const Workload w = generate_workload(ds, queries_from(held), spec);
    ASSERT_EQ(w.entries.size(), 2U);
    for (const auto& e : w.entries) {
        EXPECT_EQ(e.bitmap.cardinality(), 100U);
        EXPECT_EQ(e.truth.at(10), ground_truth(ds, e.query, e.bitmap, 10));
        EXPECT_EQ(e.truth.at(5), std::vector<Neighbor>(e.truth.at(10).begin(), e.truth.at(10).begin() + 5));
    }
    EXPECT_EQ(w.header.dataset_hash, ds.content_hash());
}

TEST_F(WorkloadFiles, SkipsOverflowWithWarning) {
    const Dataset ds = testing::uniform_dataset(600, 4, 5);
    WorkloadSpec spec;
    spec.selectivities = {0.1, 0.5};
    spec.correlations = {Correlation::HighPositive, Correlation::None};
    std::vector<std::string> warnings;
    const Workload w = generate_workload(ds, sample_queries(ds, 3, 1), spec, &warnings);
    EXPECT_EQ(w.entries.size(), 3U * 3U);
    EXPECT_EQ(warnings.size(), 3U);
    for (const auto& e : w.entries) {
        EXPECT_EQ(e.bitmap.cardinality(), target_cardinality(e.selectivity, 600));
    }
}

TEST_F(WorkloadFiles, SampledQueriesExcludeThemselves) {
    const Dataset ds = testing::uniform_dataset(500, 4, 5);
    const BaseQueries q = sample_queries(ds, 5, 9);
    WorkloadSpec spec;
    spec.selectivities = {0.2};
    spec.correlations = {Correlation::HighPositive};
    const Workload w = generate_workload(ds, q, spec);
    for (std::size_t i = 0; i < w.entries.size(); ++i) {
        ASSERT_TRUE(q.self_rows[i].has_value());
        EXPECT_FALSE(w.entries[i].bitmap.probe(*q.self_rows[i]));
    }
}

TEST_F(WorkloadFiles, RejectsCardinalityBelowK) {
    const Dataset ds = testing::uniform_dataset(500, 4, 5);
    WorkloadSpec spec;
    spec.selectivities = {0.01};
    spec.correlations = {Correlation::None};
    spec.ks = {10};
    EXPECT_THROW((void)generate_workload(ds, sample_queries(ds, 1, 1), spec), ConfigError);
}

TEST_F(WorkloadFiles, JsonlAndBinaryRoundTrip) {
    const Dataset ds = testing::uniform_dataset(1500, 6, 5);
    WorkloadSpec spec;
    spec.selectivities = {0.02, 0.3};
    spec.correlations = {Correlation::Negative, Correlation::MediumPositive};
    spec.ks = {1, 10};
    spec.seed = 44;
    const Workload w = generate_workload(ds, sample_queries(ds, 4, 2), spec);
    write_workload_jsonl(dir_ / "w.jsonl", w);
    write_workload_binary(dir_ / "w.bin", w);
    EXPECT_EQ(read_workload(dir_ / "w.jsonl"), w);
    EXPECT_EQ(read_workload(dir_ / "w.bin"), w);
    EXPECT_EQ(generate_workload(ds, sample_queries(ds, 4, 2), spec), w);
}

TEST_F(WorkloadFiles, MalformedInputsAreDataErrors) {
    {
        std::ofstream out(dir_ / "junk.jsonl");
        out << "{\"format\":\"fvs-workload\",\"version\":99}\n";
    }
    EXPECT_THROW((void)read_workload(dir_ / "junk.jsonl"), DataError);
    {
        std::ofstream out(dir_ / "junk2.jsonl");
        out << "not json\n";
    }
    EXPECT_THROW((void)read_workload(dir_ / "junk2.jsonl"), DataError);
    EXPECT_THROW((void)read_workload(dir_ / "missing.jsonl"), DataError);
}

}  // namespace
}  // namespace fvs
