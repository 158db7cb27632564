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
#include <span>
#include <vector>

namespace fvs {

/// Dense set of qualifying row ids for one query. Structured predicates are
/// never evaluated directly: a filter check is a probe into this set.
class FilterBitmap {
public:
    FilterBitmap() = default;
    explicit FilterBitmap(std::size_t universe);

    static FilterBitmap all(std::size_t universe);
    static FilterBitmap from_rowids(std::size_t universe, std::span<const std::uint64_t> rowids);

    void set(std::uint64_t rowid);

    [[nodiscard]] bool probe(std::uint64_t rowid) const {
        return rowid < universe_ && ((words_[rowid >> 6] >> (rowid & 63)) & 1U) != 0;
    }

    [[nodiscard]] std::size_t cardinality() const { return cardinality_; }
    [[nodiscard]] std::size_t universe() const { return universe_; }
    [[nodiscard]] double selectivity() const {
        return universe_ == 0 ? 0.0 : static_cast<double>(cardinality_) / static_cast<double>(universe_);
    }

    /// Members in ascending order.
    [[nodiscard]] std::vector<std::uint64_t> rowids() const;

    friend bool operator==(const FilterBitmap&, const FilterBitmap&) = default;

private:
    std::size_t universe_ = 0;
    std::size_t cardinality_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace fvs
