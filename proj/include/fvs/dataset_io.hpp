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

#include <cstdint>
#include <filesystem>
#include <string>

#include "fvs/core.hpp"

namespace fvs {

/// fvecs: per vector, a little-endian int32 dim followed by dim float32s.
Dataset read_fvecs(const std::filesystem::path& path, DistanceMetric metric);
void write_fvecs(const std::filesystem::path& path, const Dataset& ds);

/// Raw row-major float32 matrix plus a JSON sidecar `<path>.json` holding
/// {"n", "dim", "metric"}.
Dataset read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Dataset& ds);
std::filesystem::path descriptor_path(const std::filesystem::path& raw_path);

/// Dispatches on extension: `.fvecs` (metric required) or raw+descriptor.
Dataset load_dataset(const std::filesystem::path& path, DistanceMetric fvecs_metric = DistanceMetric::L2Squared);

enum class Distribution : std::uint8_t { Uniform, GaussianMixture };

Distribution parse_distribution(const std::string& name);

struct SyntheticSpec {
    std::size_t n = 0;
    std::size_t dim = 0;
    Distribution distribution = Distribution::Uniform;
    std::size_t components = 50;
    /// Standard deviation of each mixture component relative to the unit cube
    /// that holds the component means.
    float component_stddev = 0.05F;
    DistanceMetric metric = DistanceMetric::L2Squared;
    std::uint64_t seed = 0;
};

/// Uniform cube [0,1)^dim or a Gaussian mixture. Deterministic for a fixed spec.
/// `extra` additional rows are drawn from the same distribution and returned
/// separately (held-out queries).
struct SyntheticData {
    Dataset base;
    Dataset held_out;
};
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::size_t extra = 0);

}  // namespace fvs
