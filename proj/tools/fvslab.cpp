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

// fvslab: data synthesis, index builds, workloads, experiments and reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fvs/core.hpp"
#include "fvs/dataset_io.hpp"
#include "fvs/detail/kv.hpp"
#include "fvs/errors.hpp"
#include "fvs/graph_search.hpp"
#include "fvs/harness.hpp"
#include "fvs/hnsw.hpp"
#include "fvs/ledger.hpp"
#include "fvs/rng.hpp"
#include "fvs/scann.hpp"
#include "fvs/storage.hpp"
#include "fvs/workload.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kBelowTarget = 4 };

void banner(const std::string& command, const Json& config) {
    std::cout << "fvslab " << command << " effective-config " << config.dump() << "\n";
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool parse_on_off(const char* key, const std::string& v) { return fvs::detail::parse_bool(key, v); }

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
    std::size_t n = 10000;
    std::size_t dim = 32;
    std::string distribution = "uniform";
    std::size_t components = 50;
    float stddev = 0.05F;
    std::string metric = "l2";
    std::uint64_t seed = 0;
    std::size_t queries = 0;
    std::string out = "data.f32";
    std::string queries_out;
};

int cmd_gen_data(const GenDataOpts& o) {
    if (o.n == 0 || o.dim == 0) {
        throw fvs::ConfigError("gen-data: n and dim must be > 0");
    }
    fvs::SyntheticSpec spec;
    spec.n = o.n;
    spec.dim = o.dim;
    spec.distribution = fvs::parse_distribution(o.distribution);
    spec.components = o.components;
    spec.component_stddev = o.stddev;
    spec.metric = fvs::parse_metric(o.metric);
    spec.seed = fvs::derive_seed(o.seed, "data");
    const std::string queries_out = o.queries_out.empty() && o.queries > 0 ? o.out + ".queries" : o.queries_out;
    banner("gen-data", {{"n", o.n},
                        {"dim", o.dim},
                        {"distribution", o.distribution},
                        {"components", o.components},
                        {"stddev", o.stddev},
                        {"metric", std::string(fvs::to_string(spec.metric))},
                        {"seed", o.seed},
                        {"queries", o.queries},
                        {"out", o.out},
                        {"queries_out", queries_out}});
    const fvs::SyntheticData data = fvs::generate_synthetic(spec, o.queries);
    fvs::write_raw(o.out, data.base);
    if (o.queries > 0) {
        fvs::write_raw(queries_out, data.held_out);
    }
    std::cout << "dataset " << o.out << " hash " << hex64(data.base.content_hash()) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
    std::string input;
    std::string metric = "l2";
    std::string out;
};

int cmd_ingest(const IngestOpts& o) {
    const auto metric = fvs::parse_metric(o.metric);
    banner("ingest", {{"input", o.input}, {"metric", std::string(fvs::to_string(metric))}, {"out", o.out}});
    const fvs::Dataset ds = fvs::load_dataset(o.input, metric);
    if (ds.size() == 0) {
        throw fvs::DataError("ingest: " + o.input + " holds no vectors");
    }
    fvs::write_raw(o.out, ds);
    std::cout << "dataset " << o.out << " n " << ds.size() << " dim " << ds.dim() << " hash "
              << hex64(ds.content_hash()) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- build

struct BuildOpts {
    std::string data;
    std::string index = "hnsw";
    std::uint32_t m = 32;
    std::uint32_t ef_construction = 200;
    std::size_t num_leaves = 0;
    std::size_t kmeans_iters = 10;
    bool quantize = false;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
};

int cmd_build(const BuildOpts& o) {
    const fvs::Dataset ds = fvs::load_dataset(o.data);
    Json knobs;
    if (o.index == "hnsw") {
        knobs = {{"M", o.m}, {"ef_construction", o.ef_construction}};
    } else if (o.index == "scann") {
        knobs = {{"num_leaves", o.num_leaves}, {"kmeans_iters", o.kmeans_iters}, {"quantize", o.quantize}};
    } else {
        throw fvs::ConfigError("build: unknown index '" + o.index + "' (hnsw, scann)");
    }
    knobs["seed"] = o.seed;
    const std::string key = hex64(ds.content_hash()) + "|" + o.index + "|" + knobs.dump();
    const fs::path out = fs::path(o.out_dir) / (o.index + "-" + hex64(ds.content_hash()).substr(0, 8) + "-" +
                                               hex64(fnv1a(key)).substr(0, 12) + ".fvs");
    banner("build", {{"data", o.data}, {"index", o.index}, {"knobs", knobs}, {"out", out.string()}});
    fvs::PagedStore store;
    const fvs::HeapFile heap = fvs::load_heap(store, ds);
    const std::uint64_t seed = fvs::derive_seed(o.seed, "build");
    if (o.index == "hnsw") {
        fvs::HnswBuildParams p;
        p.M = o.m;
        p.ef_construction = o.ef_construction;
        p.seed = seed;
        const auto index = fvs::HnswIndex::build(ds, p, store, heap);
        std::cout << "hnsw nodes " << index.size() << "\n";
    } else {
        fvs::ScannBuildParams p;
        p.num_leaves = o.num_leaves;
        p.kmeans_iters = o.kmeans_iters;
        p.quantize = o.quantize;
        p.seed = seed;
        const auto index = fvs::ScannIndex::build(ds, p, store, heap);
        std::cout << "scann leaves " << index.num_leaves() << "\n";
    }
    fs::create_directories(o.out_dir);
    store.save(out);
    std::cout << "store " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------- workload

struct WorkloadOpts {
    std::string data;
    std::string queries;
    std::size_t sample_queries = 100;
    std::vector<double> selectivities{0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9};
    std::vector<std::string> correlations{"high_pos", "med_pos", "low_pos", "negative", "none"};
    std::vector<std::size_t> ks{10};
    double tau = fvs::kDefaultTemperature;
    std::uint64_t seed = 0;
    std::string out = "workload.jsonl";
};

int cmd_workload(const WorkloadOpts& o) {
    const fvs::Dataset ds = fvs::load_dataset(o.data);
    fvs::WorkloadSpec spec;
    spec.selectivities = o.selectivities;
    for (const auto& c : o.correlations) {
        spec.correlations.push_back(fvs::parse_correlation(c));
    }
    spec.ks = o.ks;
    spec.tau = o.tau;
    spec.seed = o.seed;
    Json corr = Json::array();
    for (auto c : spec.correlations) {
        corr.push_back(std::string(fvs::to_string(c)));
    }
    banner("workload", {{"data", o.data},
                        {"queries", o.queries},
                        {"sample_queries", o.queries.empty() ? o.sample_queries : 0},
                        {"selectivities", o.selectivities},
                        {"correlations", corr},
                        {"ks", o.ks},
                        {"tau", o.tau},
                        {"seed", o.seed},
                        {"out", o.out}});
    fvs::BaseQueries queries;
    if (!o.queries.empty()) {
        queries = fvs::queries_from(fvs::load_dataset(o.queries, ds.metric()));
    } else {
        queries = fvs::sample_queries(ds, o.sample_queries, fvs::derive_seed(o.seed, "queries"));
    }
    std::vector<std::string> warnings;
    const fvs::Workload w = fvs::generate_workload(ds, queries, spec, &warnings);
    for (const auto& msg : warnings) {
        std::cerr << "warning: " << msg << "\n";
    }
    if (fs::path(o.out).extension() == ".bin") {
        fvs::write_workload_binary(o.out, w);
    } else {
        fvs::write_workload_jsonl(o.out, w);
    }
    std::cout << "workload " << o.out << " entries " << w.entries.size() << "\n";
    return kOk;
}

// ---------------------------------------------------------------- run / tune

struct ExperimentOpts {
    std::string data;
    std::string hnsw_store;
    std::string scann_store;
    std::string workload;
    std::vector<std::string> strategies{"sweeping", "iterative_scan", "acorn", "navix", "scann"};
    std::vector<std::size_t> ks{10};
    double target = 0.95;
    std::size_t workers = 16;
    std::size_t repetitions = 5;
    std::uint64_t seed = 0;
    double holdout = 0.2;
    std::vector<std::size_t> ef_grid;
    std::vector<std::size_t> leaves_grid;
    std::string tm = "on";
    std::string adaptive_skip = "on";
    std::size_t max_scan_tuples = 0;
    double theta_low = 0.05;
    double theta_high = 0.5;
    std::size_t window = 256;
    std::size_t reorder_factor = 4;
    std::string weights;
    std::string dataset_name;
    std::string out = "results.csv";
};

// Loaded artifacts kept alive for the strategies that reference them.
struct Artifacts {
    fvs::Dataset ds;
    std::optional<fvs::PagedStore> hnsw_store;
    std::optional<fvs::PagedStore> scann_store;
    std::optional<fvs::HnswIndex> hnsw;
    std::optional<fvs::ScannIndex> scann;
    fvs::Workload workload;
};

fvs::CostWeights parse_weights(const std::string& text, std::size_t dim) {
    fvs::CostWeights w = fvs::CostWeights::defaults(dim);
    fvs::detail::for_each_kv(text, [&](std::string_view key, std::string_view value) {
        for (fvs::Counter c : fvs::kAllCounters) {
            if (fvs::counter_name(c) == key) {
                w[c] = fvs::detail::parse_double(key, value);
                return;
            }
        }
        throw fvs::ConfigError("unknown cost weight '" + std::string(key) + "'");
    });
    return w;
}

Json experiment_banner(const ExperimentOpts& o, const fvs::CostWeights& weights) {
    Json w;
    for (fvs::Counter c : fvs::kAllCounters) {
        w[std::string(fvs::counter_name(c))] = weights[c];
    }
    return {{"data", o.data},
            {"hnsw_store", o.hnsw_store},
            {"scann_store", o.scann_store},
            {"workload", o.workload},
            {"strategies", o.strategies},
            {"ks", o.ks},
            {"target_recall", o.target},
            {"workers", o.workers},
            {"repetitions", o.repetitions},
            {"seed", o.seed},
            {"holdout", o.holdout},
            {"ef_grid", o.ef_grid},
            {"leaves_grid", o.leaves_grid},
            {"tm", o.tm},
            {"adaptive_skip", o.adaptive_skip},
            {"max_scan_tuples", o.max_scan_tuples},
            {"theta_low", o.theta_low},
            {"theta_high", o.theta_high},
            {"window", o.window},
            {"reorder_factor", o.reorder_factor},
            {"weights", w},
            {"dataset_name", o.dataset_name.empty() ? fs::path(o.data).stem().string() : o.dataset_name},
            {"out", o.out}};
}

std::vector<fvs::StrategySpec> make_strategies(const ExperimentOpts& o, Artifacts& a) {
    const auto check = [&](const fvs::PagedStore& store) {
        const fvs::HeapFile heap = fvs::HeapFile::open(store);
        if (heap.size() != a.ds.size() || heap.dim() != a.ds.dim()) {
            throw fvs::DataError("store does not match dataset " + o.data);
        }
    };
    std::vector<fvs::StrategySpec> out;
    for (const auto& name : o.strategies) {
        if (name == "scann") {
            if (!a.scann) {
                if (o.scann_store.empty()) {
                    throw fvs::ConfigError("strategy scann needs --scann-store");
                }
                a.scann_store = fvs::PagedStore::load(o.scann_store);
                check(*a.scann_store);
                a.scann = fvs::ScannIndex::open(*a.scann_store);
            }
            out.push_back({std::make_shared<fvs::ScannStrategyRunner>(*a.scann, o.reorder_factor), o.leaves_grid});
            continue;
        }
        fvs::GraphSearchConfig cfg;
        cfg.strategy = fvs::parse_graph_strategy(name);
        cfg.tm_enabled = parse_on_off("tm", o.tm);
        cfg.adaptive_skip = parse_on_off("adaptive_skip", o.adaptive_skip);
        cfg.max_scan_tuples = o.max_scan_tuples;
        cfg.theta_low = o.theta_low;
        cfg.theta_high = o.theta_high;
        cfg.window = o.window;
        if (!a.hnsw) {
            if (o.hnsw_store.empty()) {
                throw fvs::ConfigError("strategy " + name + " needs --hnsw-store");
            }
            a.hnsw_store = fvs::PagedStore::load(o.hnsw_store);
            check(*a.hnsw_store);
            a.hnsw = fvs::HnswIndex::open(*a.hnsw_store);
        }
        out.push_back({std::make_shared<fvs::GraphStrategyRunner>(*a.hnsw, cfg), o.ef_grid});
    }
    return out;
}

void load_common(const ExperimentOpts& o, Artifacts& a) {
    if (o.data.empty()) {
        throw fvs::ConfigError("--data is required");
    }
    if (o.workload.empty()) {
        throw fvs::ConfigError("--workload is required");
    }
    a.ds = fvs::load_dataset(o.data);
    a.workload = fvs::read_workload(o.workload);
    if (a.workload.header.dataset_hash != a.ds.content_hash()) {
        throw fvs::DataError("workload " + o.workload + " was generated for a different dataset");
    }
}

int cmd_run(const ExperimentOpts& o) {
    Artifacts a;
    load_common(o, a);
    const fvs::CostWeights weights = parse_weights(o.weights, a.ds.dim());
    const Json cfg = experiment_banner(o, weights);
    banner("run", cfg);
    fvs::RunConfig rc;
    rc.dataset = cfg["dataset_name"].get<std::string>();
    rc.strategies = make_strategies(o, a);
    rc.workload = &a.workload;
    rc.ks = o.ks;
    rc.target_recall = o.target;
    rc.workers = o.workers;
    rc.repetitions = o.repetitions;
    rc.weights = weights;
    rc.seed = o.seed;
    rc.holdout_fraction = o.holdout;
    const auto records = fvs::run_experiment(rc);
    std::ofstream out(o.out);
    if (!out) {
        throw fvs::ConfigError("cannot write " + o.out);
    }
    fvs::write_csv(out, records);
    std::size_t below = 0;
    for (const auto& r : records) {
        below += r.knobs.find("below_target") != std::string::npos ? 1 : 0;
    }
    std::cout << "rows " << records.size() << " below_target " << below << " csv " << o.out << "\n";
    return kOk;
}

int cmd_tune(const ExperimentOpts& o) {
    Artifacts a;
    load_common(o, a);
    const fvs::CostWeights weights = parse_weights(o.weights, a.ds.dim());
    banner("tune", experiment_banner(o, weights));
    const auto strategies = make_strategies(o, a);
    std::map<std::pair<double, fvs::Correlation>, std::vector<const fvs::WorkloadEntry*>> cells;
    for (const auto& e : a.workload.entries) {
        cells[{e.selectivity, e.correlation}].push_back(&e);
    }
    bool any_below = false;
    std::cout << "strategy,k,selectivity,correlation,knobs,recall\n";
    for (const auto& spec : strategies) {
        for (std::size_t k : o.ks) {
            const auto grid = spec.grid.empty() ? spec.strategy->default_grid(k) : spec.grid;
            for (const auto& [cell, entries] : cells) {
                const auto op = fvs::tune_to_recall(*spec.strategy, grid, entries, k, o.target);
                any_below = any_below || op.below_target;
                std::cout << spec.strategy->name() << "," << k << "," << cell.first << ","
                          << fvs::to_string(cell.second) << "," << spec.strategy->knobs_text(op.knob)
                          << (op.below_target ? ";below_target" : "") << "," << op.recall << "\n";
            }
        }
    }
    return any_below ? kBelowTarget : kOk;
}

// ---------------------------------------------------------------- report

struct ReportOpts {
    std::string csv = "results.csv";
    std::string svg;
    std::size_t dim = 0;
    std::string weights;
};

int cmd_report(const ReportOpts& o) {
    const fvs::CostWeights weights = parse_weights(o.weights, o.dim);
    Json w;
    for (fvs::Counter c : fvs::kAllCounters) {
        w[std::string(fvs::counter_name(c))] = weights[c];
    }
    banner("report", {{"csv", o.csv}, {"svg", o.svg}, {"dim", o.dim}, {"weights", w}});
    std::ifstream in(o.csv);
    if (!in) {
        throw fvs::DataError("cannot read " + o.csv);
    }
    const auto records = fvs::read_csv(in);
    fvs::ReportOptions opts{weights, o.svg};
    fvs::write_report(std::cout, records, opts);
    if (!o.svg.empty()) {
        std::ofstream svg(o.svg);
        if (!svg) {
            throw fvs::ConfigError("cannot write " + o.svg);
        }
        fvs::write_breakdown_svg(svg, records, weights);
    }
    return kOk;
}

void add_experiment_options(CLI::App* sub, ExperimentOpts& o) {
    sub->add_option("--data", o.data, "Dataset file")->envname("FVSLAB_DATA");
    sub->add_option("--hnsw-store", o.hnsw_store, "HNSW store file")->envname("FVSLAB_HNSW_STORE");
    sub->add_option("--scann-store", o.scann_store, "ScaNN store file")->envname("FVSLAB_SCANN_STORE");
    sub->add_option("--workload", o.workload, "Workload file")->envname("FVSLAB_WORKLOAD");
    sub->add_option("--strategies", o.strategies, "sweeping, iterative_scan, acorn, navix, scann")->delimiter(',');
    sub->add_option("--ks", o.ks, "Result sizes")->delimiter(',');
    sub->add_option("--target-recall", o.target, "Recall target")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--workers", o.workers, "Concurrent sessions")->envname("FVSLAB_WORKERS")->check(CLI::PositiveNumber);
    sub->add_option("--repetitions", o.repetitions, "Measured runs per cell")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Root seed");
    sub->add_option("--holdout", o.holdout, "Tuning fraction per cell")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--ef-grid", o.ef_grid, "ef values for graph strategies")->delimiter(',');
    sub->add_option("--leaves-grid", o.leaves_grid, "leaves_to_scan values for scann")->delimiter(',');
    sub->add_option("--tm", o.tm, "Translation map on/off");
    sub->add_option("--adaptive-skip", o.adaptive_skip, "ACORN skips 2-hop of passing neighbors on/off");
    sub->add_option("--max-scan-tuples", o.max_scan_tuples, "Iterative scan budget, 0 = 20*ef");
    sub->add_option("--theta-low", o.theta_low, "NaviX Blind/Directed threshold");
    sub->add_option("--theta-high", o.theta_high, "NaviX Directed/Onehop threshold");
    sub->add_option("--window", o.window, "NaviX selectivity window")->check(CLI::PositiveNumber);
    sub->add_option("--reorder-factor", o.reorder_factor, "ScaNN reorder multiplier")->check(CLI::PositiveNumber);
    sub->add_option("--weights", o.weights, "Cost weight overrides, e.g. page_accesses=500;dist_comps=64");
    sub->add_option("--dataset-name", o.dataset_name, "Dataset label for the CSV");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fvslab: filtered vector search lab"};
    app.require_subcommand(1);

    GenDataOpts gen;
    auto* s_gen = app.add_subcommand("gen-data", "Synthesize a dataset");
    s_gen->add_option("--n", gen.n, "Rows");
    s_gen->add_option("--dim", gen.dim, "Dimensions");
    s_gen->add_option("--distribution", gen.distribution, "uniform or gmm");
    s_gen->add_option("--components", gen.components, "Mixture components");
    s_gen->add_option("--stddev", gen.stddev, "Mixture component stddev");
    s_gen->add_option("--metric", gen.metric, "l2 or ip");
    s_gen->add_option("--seed", gen.seed, "Root seed");
    s_gen->add_option("--queries", gen.queries, "Held-out query rows");
    s_gen->add_option("--out", gen.out, "Output dataset file")->envname("FVSLAB_DATA");
    s_gen->add_option("--queries-out", gen.queries_out, "Output query file");

    IngestOpts ing;
    auto* s_ing = app.add_subcommand("ingest", "Convert .fvecs or raw vectors into a dataset file");
    s_ing->add_option("--input", ing.input, "Input file")->required();
    s_ing->add_option("--metric", ing.metric, "Metric for .fvecs input");
    s_ing->add_option("--out", ing.out, "Output dataset file")->envname("FVSLAB_DATA")->required();

    BuildOpts bld;
    auto* s_bld = app.add_subcommand("build", "Build an index store");
    s_bld->add_option("--data", bld.data, "Dataset file")->envname("FVSLAB_DATA")->required();
    s_bld->add_option("--index", bld.index, "hnsw or scann");
    s_bld->add_option("--m", bld.m, "HNSW M")->check(CLI::PositiveNumber);
    s_bld->add_option("--ef-construction", bld.ef_construction, "HNSW build beam")->check(CLI::PositiveNumber);
    s_bld->add_option("--num-leaves", bld.num_leaves, "ScaNN leaves, 0 = sqrt(N)");
    s_bld->add_option("--kmeans-iters", bld.kmeans_iters, "k-means iterations");
    s_bld->add_flag("--quantize", bld.quantize, "SQ8 leaf codes");
    s_bld->add_option("--seed", bld.seed, "Root seed");
    s_bld->add_option("--out-dir", bld.out_dir, "Store directory")->envname("FVSLAB_OUT_DIR");

    WorkloadOpts wl;
    auto* s_wl = app.add_subcommand("workload", "Generate a filtered query workload");
    s_wl->add_option("--data", wl.data, "Dataset file")->envname("FVSLAB_DATA")->required();
    s_wl->add_option("--queries", wl.queries, "Query file (default: sample dataset rows)");
    s_wl->add_option("--sample-queries", wl.sample_queries, "Rows to sample as queries");
    s_wl->add_option("--selectivities", wl.selectivities, "Selectivities")->delimiter(',');
    s_wl->add_option("--correlations", wl.correlations, "Correlation classes")->delimiter(',');
    s_wl->add_option("--ks", wl.ks, "Ground-truth sizes")->delimiter(',');
    s_wl->add_option("--tau", wl.tau, "Sampling temperature");
    s_wl->add_option("--seed", wl.seed, "Root seed");
    s_wl->add_option("--out", wl.out, "Output (.jsonl or .bin)")->envname("FVSLAB_WORKLOAD");

    ExperimentOpts run;
    auto* s_run = app.add_subcommand("run", "Tune and measure every cell, write CSV");
    add_experiment_options(s_run, run);
    s_run->add_option("--out", run.out, "CSV output")->envname("FVSLAB_OUT");

    ExperimentOpts tune;
    auto* s_tune = app.add_subcommand("tune", "Report the operating point per cell");
    add_experiment_options(s_tune, tune);

    ReportOpts rep;
    auto* s_rep = app.add_subcommand("report", "Summarize a results CSV");
    s_rep->add_option("--csv", rep.csv, "Results CSV")->envname("FVSLAB_OUT");
    s_rep->add_option("--svg", rep.svg, "Breakdown chart output");
    s_rep->add_option("--dim", rep.dim, "Vector dimension for default weights")->required();
    s_rep->add_option("--weights", rep.weights, "Cost weight overrides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (s_gen->parsed()) {
            return cmd_gen_data(gen);
        }
        if (s_ing->parsed()) {
            return cmd_ingest(ing);
        }
        if (s_bld->parsed()) {
            return cmd_build(bld);
        }
        if (s_wl->parsed()) {
            return cmd_workload(wl);
        }
        if (s_run->parsed()) {
            return cmd_run(run);
        }
        if (s_tune->parsed()) {
            return cmd_tune(tune);
        }
        return cmd_report(rep);
    } catch (const fvs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const fvs::GraphInfeasible& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const fvs::InsufficientCandidates& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const fvs::WindowOverflow& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const fvs::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    }
}
