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

#include "fvs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "fvs/rng.hpp"

namespace fvs {

namespace {

std::string fmt_double(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return {buf.data(), p};
}

double parse_double_field(const std::string& s, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw DataError(std::string("malformed CSV field ") + what + ": '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64_field(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw DataError(std::string("malformed CSV field ") + what + ": '" + s + "'");
    }
    return v;
}

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) {
        return 0.0;
    }
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

struct QueryOutcome {
    double latency_us = 0.0;
    double recall = 0.0;
    bool truncated = false;
    EventLedger ledger;
};

// Runs `entries` with `workers` sessions pulling from a shared cursor.
// Returns wall-clock seconds.
double run_sessions(const Strategy& strategy, std::span<const WorkloadEntry* const> entries, std::size_t k,
                    std::size_t knob, std::size_t workers, std::vector<QueryOutcome>& out) {
    out.assign(entries.size(), {});
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto session = [&] {
        try {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= entries.size() || failed.load()) {
                    return;
                }
                const WorkloadEntry& e = *entries[i];
                const auto truth = e.truth.find(k);
                if (truth == e.truth.end()) {
                    throw ConfigError("workload has no ground truth for k = " + std::to_string(k));
                }
                EventLedger ledger;
                const auto t0 = std::chrono::steady_clock::now();
                SearchResult r = strategy.search(e.query, k, knob, e.bitmap, ledger);
                const auto t1 = std::chrono::steady_clock::now();
                QueryOutcome& o = out[i];
                o.latency_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
                o.recall = recall_at_k(r.neighbors, truth->second, k);
                o.truncated = r.truncated;
                o.ledger = ledger;
            }
        } catch (...) {
            if (!failed.exchange(true)) {
                failure = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, std::max<std::size_t>(1, entries.size())));
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back(session);
    }
    for (auto& t : pool) {
        t.join();
    }
    const auto stop = std::chrono::steady_clock::now();
    if (failure) {
        std::rethrow_exception(failure);
    }
    return std::chrono::duration<double>(stop - start).count();
}

struct CellId {
    double selectivity;
    Correlation correlation;
    bool operator<(const CellId& o) const {
        return selectivity < o.selectivity || (selectivity == o.selectivity && correlation < o.correlation);
    }
};

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

double recall_at_k(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k) {
    if (k == 0) {
        throw ConfigError("recall_at_k: k must be >= 1");
    }
    std::unordered_set<RowId> want;
    for (std::size_t i = 0; i < truth.size() && i < k; ++i) {
        want.insert(truth[i].rowid);
    }
    std::unordered_set<RowId> seen;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < result.size() && i < k; ++i) {
        if (want.count(result[i].rowid) != 0 && seen.insert(result[i].rowid).second) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::string Strategy::knobs_text(std::size_t knob) const { return knob_name() + "=" + std::to_string(knob); }

std::vector<std::size_t> effort_grid(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> out;
    if (hi == 0) {
        return out;
    }
    lo = std::max<std::size_t>(lo, 1);
    for (std::size_t base = 1; base < hi; base *= 2) {
        for (std::size_t v : {base, base + base / 2}) {
            if (v >= lo && v < hi && (out.empty() || out.back() < v)) {
                out.push_back(v);
            }
        }
    }
    out.push_back(hi);
    return out;
}

std::string GraphStrategyRunner::name() const { return std::string(to_string(base_.strategy)); }

std::vector<std::size_t> GraphStrategyRunner::default_grid(std::size_t k) const {
    return effort_grid(std::max<std::size_t>(k, 10), index_->size());
}

SearchResult GraphStrategyRunner::search(std::span<const float> query, std::size_t k, std::size_t knob,
                                         const FilterBitmap& bitmap, EventLedger& ledger) const {
    GraphSearchConfig cfg = base_;
    cfg.ef = std::max(knob, k);
    return graph_search(*index_, query, k, bitmap, cfg, ledger);
}

std::string GraphStrategyRunner::knobs_text(std::size_t knob) const {
    std::string s = "ef=" + std::to_string(knob);
    switch (base_.strategy) {
        case GraphStrategy::Sweeping:
            break;
        case GraphStrategy::IterativeScan:
            s += ";max_scan_tuples=" + std::to_string(base_.max_scan_tuples == 0 ? 20 * knob : base_.max_scan_tuples);
            break;
        case GraphStrategy::Acorn:
            s += std::string(";tm=") + (base_.tm_enabled ? "on" : "off") +
                 ";adaptive_skip=" + (base_.adaptive_skip ? "on" : "off");
            break;
        case GraphStrategy::Navix:
            s += std::string(";tm=") + (base_.tm_enabled ? "on" : "off") + ";theta_low=" +
                 fmt_double(base_.theta_low) + ";theta_high=" + fmt_double(base_.theta_high) +
                 ";window=" + std::to_string(base_.window);
            break;
    }
    return s;
}

std::vector<std::size_t> ScannStrategyRunner::default_grid(std::size_t /*k*/) const {
    return effort_grid(1, index_->num_leaves());
}

SearchResult ScannStrategyRunner::search(std::span<const float> query, std::size_t k, std::size_t knob,
                                         const FilterBitmap& bitmap, EventLedger& ledger) const {
    return index_->filtered_search(query, k, knob, reorder_factor_, bitmap, ledger);
}

std::string ScannStrategyRunner::knobs_text(std::size_t knob) const {
    return "leaves_to_scan=" + std::to_string(knob) + ";reorder_factor=" + std::to_string(reorder_factor_);
}

OperatingPoint tune_to_recall(const Strategy& strategy, std::span<const std::size_t> grid,
                              std::span<const WorkloadEntry* const> slice, std::size_t k, double target) {
    if (slice.empty()) {
        throw ConfigError("tune_to_recall: empty workload slice");
    }
    if (grid.empty()) {
        throw ConfigError("tune_to_recall: empty knob grid");
    }
    OperatingPoint op;
    for (std::size_t knob : grid) {
        double sum = 0.0;
        for (const WorkloadEntry* e : slice) {
            const auto truth = e->truth.find(k);
            if (truth == e->truth.end()) {
                throw ConfigError("workload has no ground truth for k = " + std::to_string(k));
            }
            EventLedger ledger;
            const SearchResult r = strategy.search(e->query, k, knob, e->bitmap, ledger);
            sum += recall_at_k(r.neighbors, truth->second, k);
        }
        op.knob = knob;
        op.recall = sum / static_cast<double>(slice.size());
        if (op.recall >= target) {
            op.below_target = false;
            return op;
        }
    }
    op.below_target = true;
    return op;
}

std::vector<MetricsRecord> run_experiment(const RunConfig& config) {
    if (config.workload == nullptr) {
        throw ConfigError("run_experiment: no workload");
    }
    if (config.workers == 0) {
        throw ConfigError("workers must be >= 1");
    }
    if (config.repetitions == 0) {
        throw ConfigError("repetitions must be >= 1");
    }
    if (config.strategies.empty() || config.ks.empty()) {
        throw ConfigError("run_experiment: need at least one strategy and one k");
    }
    std::map<CellId, std::vector<const WorkloadEntry*>> cells;
    for (const auto& e : config.workload->entries) {
        cells[{e.selectivity, e.correlation}].push_back(&e);
    }
    const std::uint64_t stream = derive_seed(config.seed, "harness");

    std::vector<MetricsRecord> records;
    for (const auto& spec : config.strategies) {
        if (!spec.strategy) {
            throw ConfigError("run_experiment: null strategy");
        }
        for (std::size_t k : config.ks) {
            const std::vector<std::size_t> grid = spec.grid.empty() ? spec.strategy->default_grid(k) : spec.grid;
            for (const auto& [cell, entries] : cells) {
                // Deterministic holdout split per cell.
                std::uint64_t bits = 0;
                std::memcpy(&bits, &cell.selectivity, sizeof bits);
                Rng rng(derive_seed(stream, bits ^ (static_cast<std::uint64_t>(cell.correlation) << 56)));
                std::vector<std::size_t> order(entries.size());
                for (std::size_t i = 0; i < order.size(); ++i) {
                    order[i] = i;
                }
                for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                    std::swap(order[i], order[i + rng.below(order.size() - i)]);
                }
                const auto n_hold = std::max<std::size_t>(
                    1, static_cast<std::size_t>(
                           std::ceil(config.holdout_fraction * static_cast<double>(entries.size()))));
                std::vector<bool> is_hold(entries.size(), false);
                for (std::size_t i = 0; i < n_hold && i < order.size(); ++i) {
                    is_hold[order[i]] = true;
                }
                std::vector<const WorkloadEntry*> hold;
                std::vector<const WorkloadEntry*> measure;
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    (is_hold[i] ? hold : measure).push_back(entries[i]);
                }
                if (measure.empty()) {
                    measure = hold;
                }

                const OperatingPoint op = tune_to_recall(*spec.strategy, grid, hold, k, config.target_recall);
                std::string knobs = spec.strategy->knobs_text(op.knob);
                if (op.below_target) {
                    knobs += ";below_target";
                }

                std::vector<QueryOutcome> outcomes;
                for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
                    const double wall =
                        run_sessions(*spec.strategy, measure, k, op.knob, config.workers, outcomes);
                    MetricsRecord m;
                    m.dataset = config.dataset;
                    m.strategy = spec.strategy->name();
                    m.k = k;
                    m.selectivity = cell.selectivity;
                    m.correlation = std::string(to_string(cell.correlation));
                    m.knobs = knobs;
                    std::vector<double> lat;
                    double recall = 0.0;
                    double lat_sum = 0.0;
                    std::size_t truncated = 0;
                    for (const auto& o : outcomes) {
                        m.ledger += o.ledger;
                        recall += o.recall;
                        lat_sum += o.latency_us;
                        truncated += o.truncated ? 1 : 0;
                        lat.push_back(o.latency_us);
                    }
                    const auto n = static_cast<double>(outcomes.size());
                    m.recall = recall / n;
                    m.mean_latency_us = lat_sum / n;
                    m.p50_us = percentile(lat, 0.50);
                    m.p95_us = percentile(lat, 0.95);
                    m.qps = wall > 0.0 ? n / wall : 0.0;
                    m.weighted_total = weighted_breakdown(m.ledger, config.weights).total;
                    m.truncated_frac = static_cast<double>(truncated) / n;
                    records.push_back(std::move(m));
                }
            }
        }
    }
    return records;
}

void write_csv(std::ostream& out, std::span<const MetricsRecord> records) {
    out << kCsvHeader << "\n";
    for (const auto& m : records) {
        out << m.dataset << "," << m.strategy << "," << m.k << "," << fmt_double(m.selectivity) << ","
            << m.correlation << "," << m.knobs << "," << fmt_double(m.recall) << ","
            << fmt_double(m.mean_latency_us) << "," << fmt_double(m.p50_us) << "," << fmt_double(m.p95_us) << ","
            << fmt_double(m.qps);
        for (Counter c : kAllCounters) {
            out << "," << m.ledger[c];
        }
        out << "," << fmt_double(m.weighted_total) << "," << fmt_double(m.truncated_frac) << "\n";
    }
}

std::vector<MetricsRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kCsvHeader) {
        throw DataError("unexpected CSV header");
    }
    constexpr std::size_t kFields = 21;
    std::vector<MetricsRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != kFields) {
            throw DataError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(kFields) +
                            " fields, got " + std::to_string(f.size()));
        }
        MetricsRecord m;
        m.dataset = f[0];
        m.strategy = f[1];
        m.k = parse_u64_field(f[2], "k");
        m.selectivity = parse_double_field(f[3], "selectivity");
        m.correlation = f[4];
        m.knobs = f[5];
        m.recall = parse_double_field(f[6], "recall");
        m.mean_latency_us = parse_double_field(f[7], "mean_latency_us");
        m.p50_us = parse_double_field(f[8], "p50_us");
        m.p95_us = parse_double_field(f[9], "p95_us");
        m.qps = parse_double_field(f[10], "qps");
        for (std::size_t i = 0; i < kCounterCount; ++i) {
            m.ledger.counts[i] = parse_u64_field(f[11 + i], "counter");
        }
        m.weighted_total = parse_double_field(f[19], "weighted_total");
        m.truncated_frac = parse_double_field(f[20], "truncated_frac");
        out.push_back(std::move(m));
    }
    return out;
}

bool is_traversal_first(const std::string& strategy) {
    return strategy == "sweeping" || strategy == "iterative_scan";
}

std::optional<double> find_crossover(std::span<const MetricsRecord> records, const CrossoverKey& key) {
    // selectivity -> strategy -> (qps sum, count)
    std::map<double, std::map<std::string, std::pair<double, std::size_t>>> table;
    for (const auto& m : records) {
        if (m.dataset != key.dataset || m.k != key.k || m.correlation != key.correlation) {
            continue;
        }
        auto& slot = table[m.selectivity][m.strategy];
        slot.first += m.qps;
        ++slot.second;
    }
    for (const auto& [sel, by_strategy] : table) {
        double best_traversal = -1.0;
        double best_filter = -1.0;
        for (const auto& [name, acc] : by_strategy) {
            const double mean = acc.first / static_cast<double>(acc.second);
            double& best = is_traversal_first(name) ? best_traversal : best_filter;
            best = std::max(best, mean);
        }
        if (best_traversal >= 0.0 && best_filter >= 0.0 && best_traversal > best_filter) {
            return sel;
        }
    }
    return std::nullopt;
}

namespace {

struct CellAgg {
    double qps = 0.0;
    double recall = 0.0;
    std::size_t reps = 0;
    EventLedger ledger;
};

using CellKey = std::tuple<std::string, std::size_t, std::string, double, std::string>;  // ds,k,corr,sel,strategy

std::map<CellKey, CellAgg> aggregate(std::span<const MetricsRecord> records) {
    std::map<CellKey, CellAgg> out;
    for (const auto& m : records) {
        auto& a = out[{m.dataset, m.k, m.correlation, m.selectivity, m.strategy}];
        a.qps += m.qps;
        a.recall += m.recall;
        a.ledger += m.ledger;
        ++a.reps;
    }
    return out;
}

constexpr std::array<Counter, 6> kCostCounters = {Counter::PageAccess,        Counter::TupleMaterialize,
                                                  Counter::DistanceComputation, Counter::FilterCheck,
                                                  Counter::TranslationLookup, Counter::ReorderFetch};

}  // namespace

void write_report(std::ostream& out, std::span<const MetricsRecord> records, const ReportOptions& options) {
    const auto cells = aggregate(records);
    std::set<std::tuple<std::string, std::size_t, std::string>> groups;
    for (const auto& [key, agg] : cells) {
        groups.insert({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
    }
    out << std::fixed;
    for (const auto& [ds, k, corr] : groups) {
        std::set<std::string> strategies;
        std::set<double> sels;
        for (const auto& [key, agg] : cells) {
            if (std::get<0>(key) == ds && std::get<1>(key) == k && std::get<2>(key) == corr) {
                sels.insert(std::get<3>(key));
                strategies.insert(std::get<4>(key));
            }
        }
        out << "== dataset=" << ds << " k=" << k << " correlation=" << corr << " ==\n";
        out << "QPS (recall)\n" << std::setw(12) << "selectivity";
        for (const auto& s : strategies) {
            out << std::setw(22) << s;
        }
        out << "\n";
        for (double sel : sels) {
            out << std::setw(12) << std::setprecision(4) << sel;
            for (const auto& s : strategies) {
                auto it = cells.find({ds, k, corr, sel, s});
                if (it == cells.end()) {
                    out << std::setw(22) << "-";
                    continue;
                }
                const auto reps = static_cast<double>(it->second.reps);
                std::ostringstream cell;
                cell << std::fixed << std::setprecision(1) << it->second.qps / reps << " (" << std::setprecision(3)
                     << it->second.recall / reps << ")";
                out << std::setw(22) << cell.str();
            }
            out << "\n";
        }
        const auto cross = find_crossover(records, {ds, k, corr});
        if (cross) {
            out << "crossover: traversal-first overtakes filter-first at selectivity " << std::setprecision(4)
                << *cross << "\n";
        } else {
            out << "crossover: none\n";
        }
        out << "cost shares\n" << std::setw(12) << "selectivity" << std::setw(16) << "strategy";
        for (Counter c : kCostCounters) {
            out << std::setw(17) << counter_name(c);
        }
        out << "\n";
        for (double sel : sels) {
            for (const auto& s : strategies) {
                auto it = cells.find({ds, k, corr, sel, s});
                if (it == cells.end()) {
                    continue;
                }
                const auto fr = weighted_breakdown(it->second.ledger, options.weights).fractions();
                out << std::setw(12) << std::setprecision(4) << sel << std::setw(16) << s;
                for (Counter c : kCostCounters) {
                    out << std::setw(17) << std::setprecision(3) << fr[static_cast<std::size_t>(c)];
                }
                out << "\n";
            }
        }
        out << "\n";
    }
}

void write_breakdown_svg(std::ostream& out, std::span<const MetricsRecord> records, const CostWeights& weights) {
    const auto cells = aggregate(records);
    constexpr int kBarHeight = 16;
    constexpr int kGap = 4;
    constexpr int kLabelWidth = 360;
    constexpr int kBarWidth = 480;
    constexpr std::array<const char*, 6> kColors = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"};
    const int height = static_cast<int>(cells.size()) * (kBarHeight + kGap) + 60;
    out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kLabelWidth + kBarWidth + 20 << R"(" height=")"
        << height << R"(" font-family="monospace" font-size="11">)"
        << "\n";
    int x_legend = 10;
    for (std::size_t i = 0; i < kCostCounters.size(); ++i) {
        out << R"(<rect x=")" << x_legend << R"(" y="8" width="10" height="10" fill=")" << kColors[i] << R"("/>)"
            << R"(<text x=")" << x_legend + 14 << R"(" y="17">)" << counter_name(kCostCounters[i]) << "</text>\n";
        x_legend += 140;
    }
    int y = 40;
    for (const auto& [key, agg] : cells) {
        const auto& [ds, k, corr, sel, strategy] = key;
        out << R"(<text x="10" y=")" << y + 12 << R"(">)" << ds << " k=" << k << " " << corr
            << " s=" << fmt_double(sel) << " " << strategy << "</text>\n";
        const auto fr = weighted_breakdown(agg.ledger, weights).fractions();
        double x = kLabelWidth;
        for (std::size_t i = 0; i < kCostCounters.size(); ++i) {
            const double w = fr[static_cast<std::size_t>(kCostCounters[i])] * kBarWidth;
            if (w > 0.0) {
                out << R"(<rect x=")" << fmt_double(x) << R"(" y=")" << y << R"(" width=")" << fmt_double(w)
                    << R"(" height=")" << kBarHeight << R"(" fill=")" << kColors[i] << R"("/>)"
                    << "\n";
            }
            x += w;
        }
        y += kBarHeight + kGap;
    }
    out << "</svg>\n";
}

}  // namespace fvs
