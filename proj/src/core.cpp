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

#include "fvs/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace fvs {

std::string_view to_string(DistanceMetric metric) {
    switch (metric) {
        case DistanceMetric::L2Squared:
            return "l2";
        case DistanceMetric::InnerProduct:
            return "ip";
    }
    return "unknown";
}

DistanceMetric parse_metric(std::string_view name) {
    if (name == "l2" || name == "L2" || name == "l2sq") {
        return DistanceMetric::L2Squared;
    }
    if (name == "ip" || name == "IP" || name == "inner_product") {
        return DistanceMetric::InnerProduct;
    }
    throw ConfigError("unknown metric '" + std::string(name) + "' (expected l2 or ip)");
}

float distance(DistanceMetric metric, std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("distance: dim " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    const std::size_t n = a.size();
    if (metric == DistanceMetric::L2Squared) {
        float acc = 0.0F;
        for (std::size_t i = 0; i < n; ++i) {
            const float d = a[i] - b[i];
            acc += d * d;
        }
        return acc;
    }
    float dot = 0.0F;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
    }
    return -dot;
}

Vector::Vector(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw DimensionMismatch("vector must have dim > 0");
    }
    for (float v : values_) {
        if (!std::isfinite(v)) {
            throw DataError("vector contains a non-finite value");
        }
    }
}

Dataset::Dataset(std::size_t dim, DistanceMetric metric, std::vector<float> values)
    : dim_(dim), metric_(metric), values_(std::move(values)) {
    if (dim_ == 0) {
        throw DimensionMismatch("dataset dim must be > 0");
    }
    if (values_.size() % dim_ != 0) {
        throw DataError("dataset payload is not a multiple of dim");
    }
    for (float v : values_) {
        if (!std::isfinite(v)) {
            throw DataError("dataset contains a non-finite value");
        }
    }
}

std::uint64_t Dataset::content_hash() const {
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&](const void* p, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= kPrime;
        }
    };
    const std::uint64_t n = size();
    const std::uint64_t d = dim_;
    const auto m = static_cast<std::uint8_t>(metric_);
    mix(&n, sizeof n);
    mix(&d, sizeof d);
    mix(&m, sizeof m);
    mix(values_.data(), values_.size() * sizeof(float));
    return h;
}

std::vector<Neighbor> brute_force_topk(const Dataset& ds, std::span<const float> query, std::size_t k,
                                       const FilterBitmap* filter) {
    if (k == 0) {
        throw ConfigError("brute_force_topk: k must be >= 1");
    }
    if (query.size() != ds.dim()) {
        throw DimensionMismatch("brute_force_topk: query dim " + std::to_string(query.size()) +
                                " vs dataset dim " + std::to_string(ds.dim()));
    }
    const std::size_t eligible = filter != nullptr ? filter->cardinality() : ds.size();
    if (eligible < k) {
        throw InsufficientCandidates("brute_force_topk: " + std::to_string(eligible) +
                                     " eligible rows < k=" + std::to_string(k));
    }
    std::vector<Neighbor> all;
    all.reserve(eligible);
    for (RowId r = 0; r < ds.size(); ++r) {
        if (filter != nullptr && !filter->probe(r)) {
            continue;
        }
        all.push_back({r, distance(ds.metric(), query, ds.row(r))});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
    all.resize(k);
    return all;
}

FilterBitmap::FilterBitmap(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}

FilterBitmap FilterBitmap::all(std::size_t universe) {
    FilterBitmap b(universe);
    for (std::size_t i = 0; i < b.words_.size(); ++i) {
        b.words_[i] = ~0ULL;
    }
    if (universe % 64 != 0 && !b.words_.empty()) {
        b.words_.back() = (1ULL << (universe % 64)) - 1;
    }
    b.cardinality_ = universe;
    return b;
}

FilterBitmap FilterBitmap::from_rowids(std::size_t universe, std::span<const std::uint64_t> rowids) {
    FilterBitmap b(universe);
    for (auto r : rowids) {
        b.set(r);
    }
    return b;
}

void FilterBitmap::set(std::uint64_t rowid) {
    if (rowid >= universe_) {
        throw ConfigError("FilterBitmap::set: rowid " + std::to_string(rowid) + " out of range");
    }
    auto& w = words_[rowid >> 6];
    const std::uint64_t bit = 1ULL << (rowid & 63);
    if ((w & bit) == 0) {
        w |= bit;
        ++cardinality_;
    }
}

std::vector<std::uint64_t> FilterBitmap::rowids() const {
    std::vector<std::uint64_t> out;
    out.reserve(cardinality_);
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
        std::uint64_t w = words_[wi];
        while (w != 0) {
            const int bit = std::countr_zero(w);
            out.push_back(wi * 64 + static_cast<std::uint64_t>(bit));
            w &= w - 1;
        }
    }
    return out;
}

}  // namespace fvs
