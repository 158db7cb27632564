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

#include "fvs/dataset_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fvs/rng.hpp"

namespace fvs {

namespace fs = std::filesystem;

Dataset read_fvecs(const fs::path& path, DistanceMetric metric) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open fvecs file " + path.string());
    }
    std::vector<float> values;
    std::int32_t dim = 0;
    std::int32_t first_dim = -1;
    std::vector<float> row;
    while (in.read(reinterpret_cast<char*>(&dim), sizeof dim)) {
        if (dim <= 0) {
            throw DataError("fvecs: non-positive dim in " + path.string());
        }
        if (first_dim < 0) {
            first_dim = dim;
        } else if (dim != first_dim) {
            throw DataError("fvecs: inconsistent dims in " + path.string());
        }
        row.resize(static_cast<std::size_t>(dim));
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)))) {
            throw DataError("fvecs: truncated record in " + path.string());
        }
        values.insert(values.end(), row.begin(), row.end());
    }
    if (first_dim < 0) {
        throw DataError("fvecs: empty file " + path.string());
    }
    return Dataset(static_cast<std::size_t>(first_dim), metric, std::move(values));
}

void write_fvecs(const fs::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    const auto dim = static_cast<std::int32_t>(ds.dim());
    for (RowId r = 0; r < ds.size(); ++r) {
        out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
        auto row = ds.row(r);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size_bytes()));
    }
}

fs::path descriptor_path(const fs::path& raw_path) {
    fs::path p = raw_path;
    p += ".json";
    return p;
}

Dataset read_raw(const fs::path& path) {
    std::ifstream desc_in(descriptor_path(path));
    if (!desc_in) {
        throw DataError("missing descriptor " + descriptor_path(path).string());
    }
    nlohmann::json desc;
    try {
        desc_in >> desc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed descriptor " + descriptor_path(path).string() + ": " + e.what());
    }
    if (!desc.contains("n") || !desc.contains("dim") || !desc.contains("metric")) {
        throw DataError("descriptor must define n, dim, metric");
    }
    const auto n = desc["n"].get<std::uint64_t>();
    const auto dim = desc["dim"].get<std::uint64_t>();
    const auto metric = parse_metric(desc["metric"].get<std::string>());
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<float> values(n * dim);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)))) {
        throw DataError("raw matrix shorter than descriptor claims: " + path.string());
    }
    return Dataset(dim, metric, std::move(values));
}

void write_raw(const fs::path& path, const Dataset& ds) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + path.string());
        }
        auto raw = ds.raw();
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size_bytes()));
    }
    nlohmann::ordered_json desc;
    desc["n"] = ds.size();
    desc["dim"] = ds.dim();
    desc["metric"] = std::string(to_string(ds.metric()));
    std::ofstream dout(descriptor_path(path), std::ios::trunc);
    dout << desc.dump(2) << "\n";
}

Dataset load_dataset(const fs::path& path, DistanceMetric fvecs_metric) {
    if (path.extension() == ".fvecs") {
        return read_fvecs(path, fvecs_metric);
    }
    return read_raw(path);
}

Distribution parse_distribution(const std::string& name) {
    if (name == "uniform") {
        return Distribution::Uniform;
    }
    if (name == "gaussian-mixture" || name == "gmm") {
        return Distribution::GaussianMixture;
    }
    throw ConfigError("unknown distribution '" + name + "' (expected uniform or gaussian-mixture)");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::size_t extra) {
    if (spec.n == 0 || spec.dim == 0) {
        throw ConfigError("synthetic data needs n > 0 and dim > 0");
    }
    const std::size_t total = spec.n + extra;
    std::vector<float> values(total * spec.dim);
    Rng rng(derive_seed(spec.seed, "gen-data"));
    if (spec.distribution == Distribution::Uniform) {
        for (auto& v : values) {
            v = static_cast<float>(rng.uniform01());
        }
    } else {
        if (spec.components == 0) {
            throw ConfigError("gaussian mixture needs at least one component");
        }
        std::vector<float> means(spec.components * spec.dim);
        for (auto& m : means) {
            m = static_cast<float>(rng.uniform01());
        }
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t c = rng.below(spec.components);
            for (std::size_t d = 0; d < spec.dim; ++d) {
                values[i * spec.dim + d] =
                    means[c * spec.dim + d] + spec.component_stddev * static_cast<float>(rng.normal());
            }
        }
    }
    if (spec.metric == DistanceMetric::InnerProduct) {
        // Cosine-style data: callers fold cosine into IP by normalizing.
        for (std::size_t i = 0; i < total; ++i) {
            double norm = 0.0;
            for (std::size_t d = 0; d < spec.dim; ++d) {
                norm += static_cast<double>(values[i * spec.dim + d]) * values[i * spec.dim + d];
            }
            const auto inv = static_cast<float>(norm > 0.0 ? 1.0 / std::sqrt(norm) : 1.0);
            for (std::size_t d = 0; d < spec.dim; ++d) {
                values[i * spec.dim + d] *= inv;
            }
        }
    }
    std::vector<float> held(values.begin() + static_cast<std::ptrdiff_t>(spec.n * spec.dim), values.end());
    values.resize(spec.n * spec.dim);
    SyntheticData out{Dataset(spec.dim, spec.metric, std::move(values)), Dataset()};
    if (extra > 0) {
        out.held_out = Dataset(spec.dim, spec.metric, std::move(held));
    }
    return out;
}

}  // namespace fvs
