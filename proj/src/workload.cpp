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

#include "fvs/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fvs/errors.hpp"
#include "fvs/rng.hpp"

namespace fvs {

namespace {

constexpr std::string_view kBinaryMagic{"FVSWKLD\0", 8};
constexpr std::string_view kJsonFormat = "fvs-workload";

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw DataError("workload file truncated");
    }
    return v;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

std::uint64_t parse_hex64(const std::string& s) {
    try {
        return std::stoull(s, nullptr, 16);
    } catch (const std::exception&) {
        throw DataError("bad dataset hash in workload: " + s);
    }
}

}  // namespace

std::string_view to_string(Correlation c) {
    switch (c) {
        case Correlation::HighPositive:
            return "high_pos";
        case Correlation::MediumPositive:
            return "med_pos";
        case Correlation::LowPositive:
            return "low_pos";
        case Correlation::Negative:
            return "negative";
        case Correlation::None:
            return "none";
    }
    return "?";
}

Correlation parse_correlation(std::string_view name) {
    for (auto c : kAllCorrelations) {
        if (name == to_string(c)) {
            return c;
        }
    }
    if (name == "high" || name == "highpos" || name == "high-positive") {
        return Correlation::HighPositive;
    }
    if (name == "medium" || name == "medpos" || name == "medium-positive") {
        return Correlation::MediumPositive;
    }
    if (name == "low" || name == "lowpos" || name == "low-positive") {
        return Correlation::LowPositive;
    }
    if (name == "neg") {
        return Correlation::Negative;
    }
    throw ConfigError("unknown correlation: " + std::string(name));
}

RankedArray rank_all(const Dataset& ds, std::span<const float> query) {
    if (query.size() != ds.dim()) {
        throw DimensionMismatch("rank_all: query dim mismatch");
    }
    const std::size_t n = ds.size();
    std::vector<float> score(n);
    for (std::size_t i = 0; i < n; ++i) {
        score[i] = distance(ds.metric(), query, ds.row(i));
    }
    RankedArray out;
    out.ids.resize(n);
    std::iota(out.ids.begin(), out.ids.end(), RowId{0});
    std::sort(out.ids.begin(), out.ids.end(), [&](RowId a, RowId b) {
        return score[a] < score[b] || (score[a] == score[b] && a < b);
    });
    out.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.scores[i] = score[out.ids[i]];
    }
    return out;
}

std::size_t window_size(Correlation c, std::size_t n) {
    switch (c) {
        case Correlation::HighPositive:
            return (n + 2) / 3;
        case Correlation::MediumPositive:
            return (n + 1) / 2;
        case Correlation::LowPositive:
        case Correlation::Negative:
        case Correlation::None:
            return n;
    }
    return n;
}

std::size_t target_cardinality(double selectivity, std::size_t n) {
    if (!(selectivity > 0.0) || selectivity > 1.0) {
        throw ConfigError("selectivity must be in (0, 1]");
    }
    return static_cast<std::size_t>(std::llround(selectivity * static_cast<double>(n)));
}

FilterBitmap generate_bitmap(const RankedArray& ranked, double selectivity, Correlation corr, std::uint64_t seed,
                             double tau, std::optional<RowId> exclude) {
    const std::size_t n = ranked.size();
    const std::size_t target = target_cardinality(selectivity, n);
    const std::size_t window = window_size(corr, n);
    std::size_t eligible = window;
    if (exclude) {
        const auto end = ranked.ids.begin() + static_cast<std::ptrdiff_t>(window);
        if (std::find(ranked.ids.begin(), end, *exclude) != end) {
            --eligible;
        }
    }
    if (target > eligible) {
        throw WindowOverflow("selectivity " + std::to_string(selectivity) + " needs " + std::to_string(target) +
                             " rows but the " + std::string(to_string(corr)) + " window holds " +
                             std::to_string(eligible));
    }
    if (!(tau > 0.0)) {
        throw ConfigError("softmax temperature must be > 0");
    }

    // Normalized window scores; Negative flips the sign first.
    std::vector<double> z(window, 0.0);
    if (corr != Correlation::None && window > 0) {
        const double sign = corr == Correlation::Negative ? -1.0 : 1.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < window; ++i) {
            const double x = sign * ranked.scores[i];
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        const double span = hi - lo;
        for (std::size_t i = 0; i < window; ++i) {
            z[i] = span > 0.0 ? (sign * ranked.scores[i] - lo) / span : 0.0;
        }
    }

    // Exponential race: key = -ln(u) / w, keep the smallest `target` keys.
    Rng rng(seed);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(window);
    for (std::size_t i = 0; i < window; ++i) {
        const double u = rng.uniform_open0();
        if (exclude && ranked.ids[i] == *exclude) {
            continue;
        }
        const double w = corr == Correlation::None ? 1.0 : std::exp(-z[i] / tau);
        keys.emplace_back(-std::log(u) / w, i);
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(target), keys.end());
    FilterBitmap out(n);
    for (std::size_t i = 0; i < target; ++i) {
        out.set(ranked.ids[keys[i].second]);
    }
    return out;
}

double mean_normalized_rank(const RankedArray& ranked, const FilterBitmap& bitmap) {
    const std::size_t n = ranked.size();
    if (bitmap.cardinality() == 0 || n < 2) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (bitmap.probe(ranked.ids[i])) {
            sum += static_cast<double>(i) / static_cast<double>(n - 1);
        }
    }
    return sum / static_cast<double>(bitmap.cardinality());
}

std::vector<Neighbor> ground_truth(const Dataset& ds, std::span<const float> query, const FilterBitmap& bitmap,
                                   std::size_t k) {
    return brute_force_topk(ds, query, k, &bitmap);
}

BaseQueries queries_from(const Dataset& held_out) {
    BaseQueries q;
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        auto r = held_out.row(i);
        q.vectors.emplace_back(r.begin(), r.end());
        q.self_rows.emplace_back(std::nullopt);
    }
    return q;
}

BaseQueries sample_queries(const Dataset& ds, std::size_t count, std::uint64_t seed) {
    if (count > ds.size()) {
        throw ConfigError("cannot sample more queries than dataset rows");
    }
    Rng rng(derive_seed(seed, "queries"));
    std::vector<RowId> ids(ds.size());
    std::iota(ids.begin(), ids.end(), RowId{0});
    BaseQueries q;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(ids.size() - i);
        std::swap(ids[i], ids[j]);
        auto r = ds.row(ids[i]);
        q.vectors.emplace_back(r.begin(), r.end());
        q.self_rows.emplace_back(ids[i]);
    }
    return q;
}

Workload generate_workload(const Dataset& ds, const BaseQueries& queries, const WorkloadSpec& spec,
                           std::vector<std::string>* warnings) {
    if (spec.ks.empty()) {
        throw ConfigError("workload needs at least one k");
    }
    const std::size_t kmax = *std::max_element(spec.ks.begin(), spec.ks.end());
    for (double s : spec.selectivities) {
        const std::size_t card = target_cardinality(s, ds.size());
        if (card < kmax) {
            throw ConfigError("selectivity " + std::to_string(s) + " yields " + std::to_string(card) +
                              " rows, fewer than k = " + std::to_string(kmax));
        }
    }
    if (queries.vectors.size() != queries.self_rows.size()) {
        throw ConfigError("base query rows and self rows differ in length");
    }

    Workload w;
    w.header.dataset_hash = ds.content_hash();
    w.header.n = ds.size();
    w.header.dim = ds.dim();
    w.header.metric = ds.metric();
    w.header.ks = spec.ks;
    std::sort(w.header.ks.begin(), w.header.ks.end());
    w.header.ks.erase(std::unique(w.header.ks.begin(), w.header.ks.end()), w.header.ks.end());
    w.header.tau = spec.tau;
    w.header.seed = spec.seed;

    const std::uint64_t stream = derive_seed(spec.seed, "workload");
    const std::size_t ns = spec.selectivities.size();
    const std::size_t nc = spec.correlations.size();
    for (std::size_t qi = 0; qi < queries.vectors.size(); ++qi) {
        const auto& qv = queries.vectors[qi];
        if (qv.size() != ds.dim()) {
            throw DimensionMismatch("query " + std::to_string(qi) + " has the wrong dimension");
        }
        const RankedArray ranked = rank_all(ds, qv);
        for (std::size_t si = 0; si < ns; ++si) {
            for (std::size_t ci = 0; ci < nc; ++ci) {
                WorkloadEntry e;
                e.query_id = qi;
                e.query = qv;
                e.selectivity = spec.selectivities[si];
                e.correlation = spec.correlations[ci];
                e.seed = derive_seed(stream, (qi * ns + si) * nc + ci);
                try {
                    e.bitmap = generate_bitmap(ranked, e.selectivity, e.correlation, e.seed, spec.tau,
                                               queries.self_rows[qi]);
                } catch (const WindowOverflow& ex) {
                    if (warnings != nullptr) {
                        warnings->push_back(std::string("skipped query ") + std::to_string(qi) + ": " + ex.what());
                    }
                    continue;
                }
                auto top = ground_truth(ds, qv, e.bitmap, kmax);
                for (std::size_t k : w.header.ks) {
                    e.truth[k] = std::vector<Neighbor>(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k));
                }
                w.entries.push_back(std::move(e));
            }
        }
    }
    return w;
}

std::vector<std::pair<RowId, std::uint64_t>> encode_runs(const FilterBitmap& bitmap) {
    std::vector<std::pair<RowId, std::uint64_t>> runs;
    for (RowId r : bitmap.rowids()) {
        if (!runs.empty() && runs.back().first + runs.back().second == r) {
            ++runs.back().second;
        } else {
            runs.emplace_back(r, 1);
        }
    }
    return runs;
}

FilterBitmap decode_runs(std::size_t universe, std::span<const std::pair<RowId, std::uint64_t>> runs) {
    FilterBitmap out(universe);
    for (const auto& [start, len] : runs) {
        if (start + len > universe) {
            throw DataError("bitmap run past the dataset end");
        }
        for (std::uint64_t i = 0; i < len; ++i) {
            out.set(start + i);
        }
    }
    return out;
}

void write_workload_jsonl(const std::filesystem::path& path, const Workload& w) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    nlohmann::ordered_json h = {{"format", kJsonFormat},
                                {"version", w.header.version},
                                {"dataset_hash", hex64(w.header.dataset_hash)},
                                {"n", w.header.n},
                                {"dim", w.header.dim},
                                {"metric", to_string(w.header.metric)},
                                {"ks", w.header.ks},
                                {"tau", w.header.tau},
                                {"seed", w.header.seed}};
    out << h.dump() << "\n";
    for (const auto& e : w.entries) {
        nlohmann::ordered_json runs = nlohmann::ordered_json::array();
        for (const auto& [s, l] : encode_runs(e.bitmap)) {
            runs.push_back({s, l});
        }
        nlohmann::ordered_json truth = nlohmann::ordered_json::object();
        for (const auto& [k, list] : e.truth) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& nb : list) {
                arr.push_back({nb.rowid, nb.score});
            }
            truth[std::to_string(k)] = std::move(arr);
        }
        nlohmann::ordered_json rec = {{"query_id", e.query_id},
                                      {"selectivity", e.selectivity},
                                      {"correlation", to_string(e.correlation)},
                                      {"seed", e.seed},
                                      {"query", e.query},
                                      {"bitmap", std::move(runs)},
                                      {"truth", std::move(truth)}};
        out << rec.dump() << "\n";
    }
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

void write_workload_binary(const std::filesystem::path& path, const Workload& w) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
    put(out, w.header.version);
    put(out, w.header.dataset_hash);
    put(out, static_cast<std::uint64_t>(w.header.n));
    put(out, static_cast<std::uint64_t>(w.header.dim));
    put(out, static_cast<std::uint8_t>(w.header.metric));
    put(out, static_cast<std::uint32_t>(w.header.ks.size()));
    for (auto k : w.header.ks) {
        put(out, static_cast<std::uint64_t>(k));
    }
    put(out, w.header.tau);
    put(out, w.header.seed);
    put(out, static_cast<std::uint64_t>(w.entries.size()));
    for (const auto& e : w.entries) {
        put(out, e.query_id);
        put(out, static_cast<std::uint32_t>(e.query.size()));
        out.write(reinterpret_cast<const char*>(e.query.data()),
                  static_cast<std::streamsize>(e.query.size() * sizeof(float)));
        put(out, e.selectivity);
        put(out, static_cast<std::uint8_t>(e.correlation));
        put(out, e.seed);
        const auto runs = encode_runs(e.bitmap);
        put(out, static_cast<std::uint64_t>(runs.size()));
        for (const auto& [s, l] : runs) {
            put(out, static_cast<std::uint64_t>(s));
            put(out, l);
        }
        put(out, static_cast<std::uint32_t>(e.truth.size()));
        for (const auto& [k, list] : e.truth) {
            put(out, static_cast<std::uint64_t>(k));
            put(out, static_cast<std::uint64_t>(list.size()));
            for (const auto& nb : list) {
                put(out, static_cast<std::uint64_t>(nb.rowid));
                put(out, nb.score);
            }
        }
    }
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

namespace {

Workload read_binary(std::istream& in) {
    Workload w;
    w.header.version = get<std::uint32_t>(in);
    if (w.header.version != kWorkloadVersion) {
        throw DataError("unsupported workload version " + std::to_string(w.header.version));
    }
    w.header.dataset_hash = get<std::uint64_t>(in);
    w.header.n = get<std::uint64_t>(in);
    w.header.dim = get<std::uint64_t>(in);
    w.header.metric = static_cast<DistanceMetric>(get<std::uint8_t>(in));
    const auto nks = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nks; ++i) {
        w.header.ks.push_back(get<std::uint64_t>(in));
    }
    w.header.tau = get<double>(in);
    w.header.seed = get<std::uint64_t>(in);
    const auto count = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        WorkloadEntry e;
        e.query_id = get<std::uint64_t>(in);
        e.query.resize(get<std::uint32_t>(in));
        in.read(reinterpret_cast<char*>(e.query.data()), static_cast<std::streamsize>(e.query.size() * sizeof(float)));
        e.selectivity = get<double>(in);
        const auto corr = get<std::uint8_t>(in);
        if (corr >= kAllCorrelations.size()) {
            throw DataError("bad correlation code in workload");
        }
        e.correlation = static_cast<Correlation>(corr);
        e.seed = get<std::uint64_t>(in);
        std::vector<std::pair<RowId, std::uint64_t>> runs(get<std::uint64_t>(in));
        for (auto& r : runs) {
            r.first = get<std::uint64_t>(in);
            r.second = get<std::uint64_t>(in);
        }
        e.bitmap = decode_runs(w.header.n, runs);
        const auto nt = get<std::uint32_t>(in);
        for (std::uint32_t t = 0; t < nt; ++t) {
            const auto k = get<std::uint64_t>(in);
            std::vector<Neighbor> list(get<std::uint64_t>(in));
            for (auto& nb : list) {
                nb.rowid = get<std::uint64_t>(in);
                nb.score = get<float>(in);
            }
            e.truth[k] = std::move(list);
        }
        w.entries.push_back(std::move(e));
    }
    return w;
}

Workload read_jsonl(std::istream& in) {
    Workload w;
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty workload file");
    }
    try {
        const auto h = nlohmann::json::parse(line);
        if (h.at("format").get<std::string>() != kJsonFormat) {
            throw DataError("not a workload file");
        }
        w.header.version = h.at("version").get<std::uint32_t>();
        if (w.header.version != kWorkloadVersion) {
            throw DataError("unsupported workload version " + std::to_string(w.header.version));
        }
        w.header.dataset_hash = parse_hex64(h.at("dataset_hash").get<std::string>());
        w.header.n = h.at("n").get<std::size_t>();
        w.header.dim = h.at("dim").get<std::size_t>();
        w.header.metric = parse_metric(h.at("metric").get<std::string>());
        w.header.ks = h.at("ks").get<std::vector<std::size_t>>();
        w.header.tau = h.at("tau").get<double>();
        w.header.seed = h.at("seed").get<std::uint64_t>();
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const auto r = nlohmann::json::parse(line);
            WorkloadEntry e;
            e.query_id = r.at("query_id").get<std::uint64_t>();
            e.query = r.at("query").get<std::vector<float>>();
            e.selectivity = r.at("selectivity").get<double>();
            e.correlation = parse_correlation(r.at("correlation").get<std::string>());
            e.seed = r.at("seed").get<std::uint64_t>();
            std::vector<std::pair<RowId, std::uint64_t>> runs;
            for (const auto& run : r.at("bitmap")) {
                runs.emplace_back(run.at(0).get<RowId>(), run.at(1).get<std::uint64_t>());
            }
            e.bitmap = decode_runs(w.header.n, runs);
            for (const auto& [k, list] : r.at("truth").items()) {
                std::vector<Neighbor> nbs;
                for (const auto& p : list) {
                    nbs.push_back({p.at(0).get<RowId>(), p.at(1).get<float>()});
                }
                e.truth[std::stoull(k)] = std::move(nbs);
            }
            w.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed workload JSON: ") + ex.what());
    }
    return w;
}

}  // namespace

Workload read_workload(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open workload " + path.string());
    }
    std::string magic(kBinaryMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (in && magic == kBinaryMagic) {
        return read_binary(in);
    }
    in.clear();
    in.seekg(0);
    return read_jsonl(in);
}

}  // namespace fvs
