//
// compass.hpp
//
// Copyright 2026 The Compass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "compass/clustered_btrees.hpp"
#include "compass/core.hpp"
#include "compass/graph.hpp"

namespace compass {

struct CompassBuildConfig {
    std::uint32_t M = 16;
    std::uint32_t efc = 200;
    std::uint32_t nlist = 0; // 0 -> ceil(n / 100)
    std::uint64_t seed = 42;
    std::uint32_t kmeans_iters = 20;

    std::uint32_t nlist_or_default(std::size_t n) const {
        return nlist != 0 ? nlist : static_cast<std::uint32_t>((n + 99) / 100);
    }
};

// Proximity graph plus clustered B+-trees over the same dataset.
struct CompassIndex {
    GraphIndex graph;
    ClusteredBTrees cbt;
    const Dataset* dataset = nullptr;

    void validate() const {
        if (dataset == nullptr) {
            throw std::invalid_argument("CompassIndex: no dataset attached");
        }
        if (graph.size() != dataset->size() || cbt.assignments.size() != dataset->size()
            || cbt.dim != dataset->dim()) {
            throw std::invalid_argument("CompassIndex: graph and clustered B+-trees must cover the same dataset");
        }
    }
};

inline CompassIndex build_compass_index(const Dataset& dataset, const CompassBuildConfig& config) {
    CompassIndex index;
    index.graph = build_graph(dataset, config.M, config.efc, config.seed);
    index.cbt = build_clustered_btrees(dataset, config.nlist_or_default(dataset.size()), config.seed,
                                       config.kmeans_iters);
    index.dataset = &dataset;
    index.validate();
    return index;
}

struct QueryOutcome {
    std::vector<ScoredRecord> results; // ascending by (dist, id); all pass the predicate
    std::uint64_t n_dist_comps = 0;
    std::uint64_t n_predicate_evals = 0;
    std::uint64_t n_cbt_pulls = 0;
    std::uint64_t n_one_hop_branches = 0;
    std::uint64_t n_two_hop_branches = 0;
    std::uint64_t n_pivot_breaks = 0;
    std::uint64_t n_routing_dist_comps = 0;
    std::uint64_t n_centroid_dist_comps = 0;
    std::uint64_t visited_popcount = 0;
    double wall_time_sec = 0.0;
};

enum class SearchVariant { Full, GraphOnly, RelationalOnly };

// The orchestrator: pulls batches from the graph iterator and pivots to the
// relational iterator whenever the neighborhood passrate collapses, growing
// a global top queue until it reaches ef or both iterators are exhausted.
inline QueryOutcome compass_search_variant(const CompassIndex& index, std::span<const float> q, const Predicate& p,
                                           std::uint32_t k, SearchConfig config, SearchVariant variant) {
    index.validate();
    const Dataset& dataset = *index.dataset;
    if (q.size() != dataset.dim()) {
        throw std::invalid_argument("compass_search: query dimension mismatch");
    }
    config.validate(k);
    if (variant == SearchVariant::GraphOnly && index.cbt.nlist != 1) {
        throw std::invalid_argument("compass_search: graph_only requires an index built with nlist=1");
    }

    const auto t0 = std::chrono::steady_clock::now();
    QueryCounters counters;
    SharedSearchState shared(dataset.size());
    MaxDistHeap global_top;

    std::optional<GraphCursor> graph_cursor;
    if (variant != SearchVariant::RelationalOnly) {
        graph_cursor.emplace(
            GraphCursor(index.graph, RecordSearchContext{&dataset, &p, q.data(), &counters}, shared, k,
                        config.delta_efs_or_default(k), config.alpha, config.beta));
        graph_cursor->open();
    }
    CbtCursor cbt_cursor(index.cbt, dataset, q.data(), p, shared, counters, k, config);
    cbt_cursor.open();

    if (variant == SearchVariant::RelationalOnly) {
        while (global_top.size() < config.ef && !cbt_cursor.exhausted()) {
            for (const ScoredRecord& r : cbt_cursor.next()) {
                global_top.push(r);
            }
        }
    } else {
        while (global_top.size() < config.ef
               && !(graph_cursor->exhausted() && cbt_cursor.exhausted())) {
            const auto batch = graph_cursor->next();
            for (const ScoredRecord& r : batch.records) {
                global_top.push(r);
            }
            if (batch.sel < config.beta || (graph_cursor->exhausted() && !cbt_cursor.exhausted())) {
                for (const ScoredRecord& r : cbt_cursor.next()) {
                    global_top.push(r);
                }
            }
        }
    }

    while (global_top.size() > k) {
        global_top.pop();
    }

    QueryOutcome out;
    out.results = global_top.sorted();
    out.n_dist_comps = counters.dist_comps;
    out.n_predicate_evals = counters.predicate_evals;
    out.n_cbt_pulls = counters.cbt_pulls;
    out.n_one_hop_branches = counters.one_hop_branches;
    out.n_two_hop_branches = counters.two_hop_branches;
    out.n_pivot_breaks = counters.pivot_breaks;
    out.n_routing_dist_comps = counters.routing_dist_comps;
    out.n_centroid_dist_comps = counters.centroid_dist_comps;
    out.visited_popcount = shared.visited.popcount();
    out.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline QueryOutcome compass_search(const CompassIndex& index, std::span<const float> q, const Predicate& p,
                                   std::uint32_t k, const SearchConfig& config) {
    return compass_search_variant(index, q, p, k, config, SearchVariant::Full);
}

} // namespace compass
