//
// oracle.hpp
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

#include <cstdint>
#include <span>
#include <vector>

#include "compass/compass.hpp"
#include "compass/core.hpp"
#include "compass/graph.hpp"

namespace compass {

// Exact filtered top-k for one query: sorted ascending by (dist, id), every
// entry passes the predicate.
struct GroundTruthRow {
    std::vector<ScoredRecord> entries;
};

inline GroundTruthRow brute_force_filtered_knn(const Dataset& dataset, std::span<const float> q,
                                               const Predicate& p, std::uint32_t k) {
    if (q.size() != dataset.dim()) {
        throw std::invalid_argument("brute_force_filtered_knn: query dimension mismatch");
    }
    MaxDistHeap heap;
    const std::size_t n = dataset.size();
    for (std::uint32_t id = 0; id < n; ++id) {
        if (!evaluate_predicate(p, dataset.attributes_of(id))) {
            continue;
        }
        const ScoredRecord r{id, detail::squared_l2_raw(
                                     q.data(), dataset.vector_data() + static_cast<std::size_t>(id) * dataset.dim(),
                                     dataset.dim())};
        if (heap.size() < k) {
            heap.push(r);
        } else if (scored_before(r, heap.top())) {
            heap.pop();
            heap.push(r);
        }
    }
    GroundTruthRow row;
    row.entries = heap.sorted();
    return row;
}

// Filter-then-scan reference strategy. Same computation as the oracle, kept
// as a named strategy with its own counters for benchmark tables.
inline QueryOutcome prefilter_search(const Dataset& dataset, std::span<const float> q, const Predicate& p,
                                     std::uint32_t k) {
    if (q.size() != dataset.dim()) {
        throw std::invalid_argument("prefilter_search: query dimension mismatch");
    }
    QueryOutcome out;
    MaxDistHeap heap;
    const std::size_t n = dataset.size();
    for (std::uint32_t id = 0; id < n; ++id) {
        ++out.n_predicate_evals;
        if (!evaluate_predicate(p, dataset.attributes_of(id))) {
            continue;
        }
        ++out.n_dist_comps;
        const ScoredRecord r{id, detail::squared_l2_raw(
                                     q.data(), dataset.vector_data() + static_cast<std::size_t>(id) * dataset.dim(),
                                     dataset.dim())};
        if (heap.size() < k) {
            heap.push(r);
        } else if (scored_before(r, heap.top())) {
            heap.pop();
            heap.push(r);
        }
    }
    out.results = heap.sorted();
    return out;
}

// Search-then-filter reference strategy: unfiltered graph search of width k',
// doubling k' (capped at n, at most 8 rounds) until k survivors remain.
inline QueryOutcome postfilter_search(const GraphIndex& graph, const Dataset& dataset, std::span<const float> q,
                                      const Predicate& p, std::uint32_t k, std::uint32_t k0,
                                      std::uint32_t* rounds_out = nullptr) {
    if (q.size() != dataset.dim()) {
        throw std::invalid_argument("postfilter_search: query dimension mismatch");
    }
    if (k0 < k) {
        throw std::invalid_argument("postfilter_search: k0 must be >= k");
    }
    const std::size_t n = dataset.size();
    QueryOutcome out;
    std::uint32_t kprime = static_cast<std::uint32_t>(std::min<std::size_t>(k0, n));
    std::uint32_t rounds = 0;
    std::vector<ScoredRecord> survivors;
    while (true) {
        ++rounds;
        const auto candidates =
            knn_search(graph, dataset.vector_data(), dataset.dim(), q.data(), kprime, kprime, &out.n_dist_comps);
        survivors.clear();
        for (const ScoredRecord& r : candidates) {
            ++out.n_predicate_evals;
            if (evaluate_predicate(p, dataset.attributes_of(r.record_id))) {
                survivors.push_back(r);
            }
        }
        if (survivors.size() >= k || kprime >= n || rounds >= 8) {
            break;
        }
        kprime = static_cast<std::uint32_t>(std::min<std::size_t>(2ull * kprime, n));
    }
    if (survivors.size() > k) {
        survivors.resize(k);
    }
    out.results = std::move(survivors);
    if (rounds_out != nullptr) {
        *rounds_out = rounds;
    }
    return out;
}

} // namespace compass
