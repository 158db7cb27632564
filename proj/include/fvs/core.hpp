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
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvs/errors.hpp"
#include "fvs/filter_bitmap.hpp"

namespace fvs {

using RowId = std::uint64_t;

/// Both metrics are reported in comparator space: smaller score = closer.
enum class DistanceMetric : std::uint8_t { L2Squared = 0, InnerProduct = 1 };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_metric(std::string_view name);

/// Squared L2 distance, or the negated inner product.
float distance(DistanceMetric metric, std::span<const float> a, std::span<const float> b);

/// Owned, finite, non-empty float32 vector.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::vector<float> values);
    Vector(std::initializer_list<float> values) : Vector(std::vector<float>(values)) {}

    [[nodiscard]] std::size_t dim() const { return values_.size(); }
    [[nodiscard]] std::span<const float> values() const { return values_; }
    [[nodiscard]] const float* data() const { return values_.data(); }
    float operator[](std::size_t i) const { return values_[i]; }

    operator std::span<const float>() const { return values_; }  // NOLINT(google-explicit-constructor)

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<float> values_;
};

/// Row-major collection of N vectors of one dimension. Row ids are 0..N-1.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t dim, DistanceMetric metric, std::vector<float> values);

    [[nodiscard]] std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] DistanceMetric metric() const { return metric_; }
    [[nodiscard]] std::span<const float> row(RowId id) const {
        return {values_.data() + id * dim_, dim_};
    }
    [[nodiscard]] std::span<const float> raw() const { return values_; }

    /// FNV-1a over (N, dim, metric, raw bytes); identifies the dataset in workload files.
    [[nodiscard]] std::uint64_t content_hash() const;

private:
    std::size_t dim_ = 0;
    DistanceMetric metric_ = DistanceMetric::L2Squared;
    std::vector<float> values_;
};

struct Neighbor {
    RowId rowid = 0;
    float score = 0.0F;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending score, ties by ascending rowid.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    return a.score < b.score || (a.score == b.score && a.rowid < b.rowid);
}

/// Exact top-k by exhaustive scan. When `filter` is given only its members are
/// eligible; fewer than k members raises InsufficientCandidates.
std::vector<Neighbor> brute_force_topk(const Dataset& ds, std::span<const float> query, std::size_t k,
                                       const FilterBitmap* filter = nullptr);

}  // namespace fvs
