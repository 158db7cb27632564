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

#include "fvs/graph_search.hpp"

#include <algorithm>
#include <sstream>

#include "fvs/detail/beam.hpp"
#include "fvs/detail/kv.hpp"

namespace fvs {

namespace {

using detail::Cand;
using detail::cand_less;

void check_args(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                const FilterBitmap& bitmap) {
    if (k == 0) {
        throw ConfigError("k must be >= 1");
    }
    if (ef < k) {
        throw ConfigError("ef (" + std::to_string(ef) + ") must be >= k (" + std::to_string(k) + ")");
    }
    if (query.size() != index.dim()) {
        throw DimensionMismatch("query dim " + std::to_string(query.size()) + " != index dim " +
                                std::to_string(index.dim()));
    }
    if (bitmap.universe() != index.size()) {
        throw ConfigError("bitmap universe does not match index size");
    }
    if (bitmap.cardinality() < k) {
        throw InsufficientCandidates("bitmap has " + std::to_string(bitmap.cardinality()) + " rows, k = " +
                                     std::to_string(k));
    }
}

// The heaptid of a node already read during this session; no extra cost.
RowId known_rowid(const HnswIndex& index, std::uint32_t node) {
    return index.rowid_of(index.translation_map(true).lookup(HnswIndex::tid_of_node(node)));
}

SearchResult finish(const HnswIndex& index, detail::MaxQueue& w, std::size_t k) {
    auto sorted = detail::drain_sorted(w);
    SearchResult out;
    for (std::size_t i = 0; i < sorted.size() && i < k; ++i) {
        out.neighbors.push_back({known_rowid(index, sorted[i].node), sorted[i].score});
    }
    std::sort(out.neighbors.begin(), out.neighbors.end(), closer);
    out.truncated = out.neighbors.size() < k;
    return out;
}

void push_bounded(detail::MaxQueue& w, Cand c, std::size_t ef) {
    w.push(c);
    if (w.size() > ef) {
        w.pop();
    }
}

bool admits(const detail::MaxQueue& w, Cand c, std::size_t ef) { return w.size() < ef || cand_less(c, w.top()); }

// Shared skeleton of the filter-first strategies. A policy decides, per
// expansion, which 2-hop lists to open.
class FilterFirst {
public:
    FilterFirst(const HnswIndex& index, std::span<const float> query, std::size_t ef, const FilterBitmap& bitmap,
                const TranslationMap& tm, EventLedger& ledger, SearchTrace* trace)
        : index_(index),
          query_(query),
          ef_(ef),
          bitmap_(bitmap),
          tm_(tm),
          ledger_(ledger),
          trace_(trace),
          visited_(index.size()),
          tag_(index.size(), 0) {}

    struct OneHop {
        std::uint32_t node;
        bool pass;
        float score;
        std::size_t first;  // into two_hop_
        std::size_t count;
    };

    template <typename Policy>
    void run(Policy&& policy) {
        const Cand ep = detail::zoom_in(index_, query_, ledger_);
        visited_.insert(ep.node);
        c_.push(ep);
        ledger_.add(Counter::FilterCheck);
        if (bitmap_.probe(known_rowid(index_, ep.node))) {
            w_.push(ep);
        }
        std::vector<IndexTid> nbrs;
        while (!c_.empty()) {
            const Cand c = c_.top();
            if (w_.size() >= ef_ && cand_less(w_.top(), c)) {
                break;
            }
            c_.pop();
            ledger_.add(Counter::Hop);
            ++epoch_;
            const std::uint64_t pa0 = ledger_[Counter::PageAccess];
            ExpansionTrace rec;
            rec.node = c.node;
            rec.fanout = index_.fanout(0);
            rec.heuristic = policy.heuristic();
            {
                PageView page = index_.access_node(HnswIndex::tid_of_node(c.node), ledger_);
                index_.node(page).neighbors(0, nbrs);
            }
            gather_one_hop(nbrs, policy.scores_one_hop());
            rec.one_hop = static_cast<std::uint32_t>(one_hop_.size());
            policy.expand(*this);
            rec.two_hop = static_cast<std::uint32_t>(two_hop_resolved_);
            rec.gather_accesses = ledger_[Counter::PageAccess] - pa0;
            policy.after_step(*this);
            score_pending();
            if (trace_ != nullptr) {
                trace_->expansions.push_back(rec);
            }
        }
    }

    // Step 2 and the 1-hop filter checks.
    void gather_one_hop(const std::vector<IndexTid>& nbrs, bool score_now) {
        one_hop_.clear();
        two_hop_.clear();
        pending_.clear();
        two_hop_resolved_ = 0;
        for (IndexTid t : nbrs) {
            const std::uint32_t n = HnswIndex::node_id(t);
            if (!visited_.insert(n)) {
                continue;
            }
            PageView page = index_.access_node(t, ledger_);
            NodeView nv = index_.node(page);
            OneHop h{n, false, 0.0F, two_hop_.size(), 0};
            const std::size_t cnt = nv.neighbor_count(0);
            for (std::size_t i = 0; i < cnt; ++i) {
                two_hop_.push_back(nv.neighbor(0, i));
            }
            h.count = cnt;
            if (score_now) {
                h.score = distance(index_.metric(), query_, nv.vector());
                ledger_.add(Counter::DistanceComputation);
            }
            ledger_.add(Counter::FilterCheck);
            h.pass = bitmap_.probe(index_.rowid_of(nv.heaptid()));
            if (h.pass) {
                pending_.push_back({n, h.score, score_now});
            }
            one_hop_.push_back(h);
        }
    }

    // Opens the 2-hop list of `h`; returns the number of new passers.
    std::size_t expand_two_hop(const OneHop& h) {
        std::size_t found = 0;
        for (std::size_t i = h.first; i < h.first + h.count; ++i) {
            const IndexTid t = two_hop_[i];
            const std::uint32_t m = HnswIndex::node_id(t);
            if (visited_.contains(m) || tag_[m] == epoch_) {
                continue;
            }
            tag_[m] = epoch_;
            ++two_hop_resolved_;
            const HeapTid ht = resolve_heaptid(index_, t, tm_, ledger_);
            ledger_.add(Counter::FilterCheck);
            if (bitmap_.probe(index_.rowid_of(ht))) {
                visited_.insert(m);
                pending_.push_back({m, 0.0F, false});
                ++found;
            }
        }
        return found;
    }

    // Step 5: score passers and admit them to C and W.
    void score_pending() {
        for (const Pending& p : pending_) {
            bool admit = false;
            float d = p.score;
            if (p.scored) {
                admit = admits(w_, {d, p.node}, ef_);
                if (admit) {
                    PageView page = index_.access_node(HnswIndex::tid_of_node(p.node), ledger_);
                    (void)materialize_vector(page, 0, ledger_);
                }
            } else {
                d = detail::score_node(index_, p.node, query_, ledger_, [&](float s) {
                    admit = admits(w_, {s, p.node}, ef_);
                    return admit;
                });
            }
            if (admit) {
                c_.push({d, p.node});
                push_bounded(w_, {d, p.node}, ef_);
            }
        }
    }

    [[nodiscard]] const std::vector<OneHop>& one_hop() const { return one_hop_; }
    detail::MaxQueue& results() { return w_; }
    [[nodiscard]] std::uint32_t budget() const { return index_.M(); }

private:
    struct Pending {
        std::uint32_t node;
        float score;
        bool scored;
    };

    const HnswIndex& index_;
    std::span<const float> query_;
    std::size_t ef_;
    const FilterBitmap& bitmap_;
    const TranslationMap& tm_;
    EventLedger& ledger_;
    SearchTrace* trace_;
    detail::MinQueue c_;
    detail::MaxQueue w_;
    detail::VisitedSet visited_;
    std::vector<std::uint32_t> tag_;
    std::uint32_t epoch_ = 0;
    std::vector<OneHop> one_hop_;
    std::vector<IndexTid> two_hop_;
    std::vector<Pending> pending_;
    std::size_t two_hop_resolved_ = 0;
};

struct AcornPolicy {
    bool adaptive_skip;
    [[nodiscard]] NavixHeuristic heuristic() const { return NavixHeuristic::Blind; }
    [[nodiscard]] bool scores_one_hop() const { return false; }
    void expand(FilterFirst& s) const {
        for (const auto& h : s.one_hop()) {
            if (!adaptive_skip || !h.pass) {
                s.expand_two_hop(h);
            }
        }
    }
    void after_step(FilterFirst&) const {}
};

struct NavixPolicy {
    NavixHeuristicState& state;
    NavixHeuristic current;

    [[nodiscard]] NavixHeuristic heuristic() const { return current; }
    [[nodiscard]] bool scores_one_hop() const { return current == NavixHeuristic::Directed; }

    void expand(FilterFirst& s) const {
        switch (current) {
            case NavixHeuristic::OnehopS:
                return;
            case NavixHeuristic::Blind:
                for (const auto& h : s.one_hop()) {
                    s.expand_two_hop(h);
                }
                return;
            case NavixHeuristic::Directed: {
                std::vector<const FilterFirst::OneHop*> ranked;
                std::size_t collected = 0;
                for (const auto& h : s.one_hop()) {
                    ranked.push_back(&h);
                    collected += h.pass ? 1 : 0;
                }
                std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
                    return cand_less({a->score, a->node}, {b->score, b->node});
                });
                for (const auto* h : ranked) {
                    if (collected >= s.budget()) {
                        break;
                    }
                    collected += s.expand_two_hop(*h);
                }
                return;
            }
        }
    }

    void after_step(FilterFirst& s) {
        for (const auto& h : s.one_hop()) {
            state.record(h.pass);
        }
        current = state.choose();
    }
};

}  // namespace

HeapTid resolve_heaptid(const HnswIndex& index, IndexTid tid, const TranslationMap& tm, EventLedger& ledger) {
    if (tm.enabled()) {
        ledger.add(Counter::TranslationLookup);
        return tm.lookup(tid);
    }
    PageView page = index.access_node(tid, ledger);
    return index.node(page).heaptid();
}

SearchResult sweeping_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                             const FilterBitmap& bitmap, EventLedger& ledger, std::size_t max_visited) {
    check_args(index, query, k, ef, bitmap);
    const Cand ep = detail::zoom_in(index, query, ledger);
    detail::BeamState state(index.size());
    state.visited.insert(ep.node);
    state.candidates.push(ep);
    ledger.add(Counter::FilterCheck);
    if (bitmap.probe(known_rowid(index, ep.node))) {
        state.results.push(ep);
    }
    detail::run_beam(index, query, state, ef, &bitmap, max_visited, ledger);
    return finish(index, state.results, k);
}

SearchResult iterative_scan(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                            const FilterBitmap& bitmap, std::size_t max_scan_tuples, EventLedger& ledger) {
    check_args(index, query, k, ef, bitmap);
    if (max_scan_tuples == 0) {
        max_scan_tuples = 20 * ef;
    }
    const std::size_t n = index.size();
    const Cand ep = detail::zoom_in(index, query, ledger);
    detail::BeamState state(n);
    state.visited.insert(ep.node);
    state.candidates.push(ep);
    state.results.push(ep);

    detail::MinQueue discarded;  // D
    std::vector<std::uint8_t> emitted(n, 0);
    std::vector<std::uint8_t> in_d(n, 0);
    std::vector<Cand> passing;
    std::size_t scanned = 0;
    SearchResult out;
    out.rounds = 0;

    for (;;) {
        ++out.rounds;
        detail::run_beam(index, query, state, ef, nullptr, detail::kUnbounded, ledger);

        auto round = detail::drain_sorted(state.results);
        for (const Cand& c : round) {
            if (emitted[c.node] == 0) {
                emitted[c.node] = 1;
                ++scanned;
                ledger.add(Counter::FilterCheck);
                if (bitmap.probe(known_rowid(index, c.node))) {
                    passing.push_back(c);
                }
            }
            if (state.expanded[c.node] == 0 && in_d[c.node] == 0) {
                in_d[c.node] = 1;
                discarded.push(c);
            }
        }
        while (!state.candidates.empty()) {
            const Cand c = state.candidates.top();
            state.candidates.pop();
            if (state.expanded[c.node] == 0 && in_d[c.node] == 0) {
                in_d[c.node] = 1;
                discarded.push(c);
            }
        }
        if (passing.size() >= k) {
            break;
        }
        if (scanned >= max_scan_tuples) {
            break;
        }
        std::size_t seeded = 0;
        while (!discarded.empty() && seeded < ef) {
            const Cand c = discarded.top();
            discarded.pop();
            in_d[c.node] = 0;
            if (state.expanded[c.node] != 0) {
                continue;
            }
            state.candidates.push(c);
            state.results.push(c);
            ++seeded;
        }
        if (seeded == 0) {
            break;
        }
    }

    std::sort(passing.begin(), passing.end(), cand_less);
    for (std::size_t i = 0; i < passing.size() && i < k; ++i) {
        out.neighbors.push_back({known_rowid(index, passing[i].node), passing[i].score});
    }
    std::sort(out.neighbors.begin(), out.neighbors.end(), closer);
    out.truncated = out.neighbors.size() < k;
    return out;
}

SearchResult acorn_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                          const FilterBitmap& bitmap, const TranslationMap& tm, bool adaptive_skip,
                          EventLedger& ledger, SearchTrace* trace) {
    check_args(index, query, k, ef, bitmap);
    FilterFirst search(index, query, ef, bitmap, tm, ledger, trace);
    search.run(AcornPolicy{adaptive_skip});
    return finish(index, search.results(), k);
}

NavixHeuristicState::NavixHeuristicState(double prior, double theta_low, double theta_high, std::size_t window)
    : prior_(std::clamp(prior, 0.0, 1.0)), theta_low_(theta_low), theta_high_(theta_high), ring_(window, 0) {
    if (window == 0) {
        throw ConfigError("NaviX window must be >= 1");
    }
    if (theta_low < 0.0 || theta_high < theta_low || theta_high > 1.0) {
        throw ConfigError("NaviX thresholds must satisfy 0 <= theta_low <= theta_high <= 1");
    }
}

double NavixHeuristicState::estimate() const {
    const auto w = static_cast<double>(ring_.size());
    return (static_cast<double>(passed_) + prior_ * (w - static_cast<double>(filled_))) / w;
}

NavixHeuristic NavixHeuristicState::choose() const {
    const double e = estimate();
    if (e >= theta_high_) {
        return NavixHeuristic::OnehopS;
    }
    if (e >= theta_low_) {
        return NavixHeuristic::Directed;
    }
    return NavixHeuristic::Blind;
}

void NavixHeuristicState::record(bool passed) {
    if (filled_ == ring_.size()) {
        passed_ -= ring_[head_];
    } else {
        ++filled_;
    }
    ring_[head_] = passed ? 1 : 0;
    passed_ += ring_[head_];
    head_ = (head_ + 1) % ring_.size();
}

SearchResult navix_search(const HnswIndex& index, std::span<const float> query, std::size_t k, std::size_t ef,
                          const FilterBitmap& bitmap, const TranslationMap& tm, NavixHeuristicState& state,
                          EventLedger& ledger, SearchTrace* trace) {
    check_args(index, query, k, ef, bitmap);
    FilterFirst search(index, query, ef, bitmap, tm, ledger, trace);
    search.run(NavixPolicy{state, state.choose()});
    return finish(index, search.results(), k);
}

std::string_view to_string(NavixHeuristic h) {
    switch (h) {
        case NavixHeuristic::Blind:
            return "blind";
        case NavixHeuristic::Directed:
            return "directed";
        case NavixHeuristic::OnehopS:
            return "onehop-s";
    }
    return "?";
}

std::string_view to_string(GraphStrategy s) {
    switch (s) {
        case GraphStrategy::Sweeping:
            return "sweeping";
        case GraphStrategy::IterativeScan:
            return "iterative_scan";
        case GraphStrategy::Acorn:
            return "acorn";
        case GraphStrategy::Navix:
            return "navix";
    }
    return "?";
}

GraphStrategy parse_graph_strategy(std::string_view name) {
    for (auto s : {GraphStrategy::Sweeping, GraphStrategy::IterativeScan, GraphStrategy::Acorn, GraphStrategy::Navix}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    if (name == "iterative-scan" || name == "iterative") {
        return GraphStrategy::IterativeScan;
    }
    throw ConfigError("unknown graph strategy: " + std::string(name));
}

GraphSearchConfig GraphSearchConfig::parse(std::string_view text) {
    GraphSearchConfig cfg;
    detail::for_each_kv(text, [&](std::string_view key, std::string_view value) {
        using detail::parse_bool;
        using detail::parse_double;
        using detail::parse_size;
        if (key == "strategy") {
            cfg.strategy = parse_graph_strategy(value);
        } else if (key == "ef") {
            cfg.ef = parse_size(key, value);
        } else if (key == "max_scan_tuples") {
            cfg.max_scan_tuples = parse_size(key, value);
        } else if (key == "tm_enabled") {
            cfg.tm_enabled = parse_bool(key, value);
        } else if (key == "adaptive_skip") {
            cfg.adaptive_skip = parse_bool(key, value);
        } else if (key == "theta_low") {
            cfg.theta_low = parse_double(key, value);
        } else if (key == "theta_high") {
            cfg.theta_high = parse_double(key, value);
        } else if (key == "window") {
            cfg.window = parse_size(key, value);
        } else {
            throw ConfigError("unknown graph search key: " + std::string(key));
        }
    });
    return cfg;
}

std::string GraphSearchConfig::to_text() const {
    std::ostringstream os;
    os << "strategy = " << to_string(strategy) << "\n"
       << "ef = " << ef << "\n"
       << "max_scan_tuples = " << max_scan_tuples << "\n"
       << "tm_enabled = " << (tm_enabled ? "true" : "false") << "\n"
       << "adaptive_skip = " << (adaptive_skip ? "true" : "false") << "\n"
       << "theta_low = " << theta_low << "\n"
       << "theta_high = " << theta_high << "\n"
       << "window = " << window << "\n";
    return os.str();
}

SearchResult graph_search(const HnswIndex& index, std::span<const float> query, std::size_t k,
                          const FilterBitmap& bitmap, const GraphSearchConfig& config, EventLedger& ledger,
                          SearchTrace* trace) {
    const TranslationMap tm = index.translation_map(config.tm_enabled);
    switch (config.strategy) {
        case GraphStrategy::Sweeping:
            return sweeping_search(index, query, k, config.ef, bitmap, ledger);
        case GraphStrategy::IterativeScan:
            return iterative_scan(index, query, k, config.ef, bitmap, config.max_scan_tuples, ledger);
        case GraphStrategy::Acorn:
            return acorn_search(index, query, k, config.ef, bitmap, tm, config.adaptive_skip, ledger, trace);
        case GraphStrategy::Navix: {
            NavixHeuristicState state(bitmap.selectivity(), config.theta_low, config.theta_high, config.window);
            return navix_search(index, query, k, config.ef, bitmap, tm, state, ledger, trace);
        }
    }
    throw ConfigError("unknown strategy");
}

}  // namespace fvs
