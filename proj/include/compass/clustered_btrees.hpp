//
// clustered_btrees.hpp
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
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "compass/core.hpp"
#include "compass/graph.hpp"
#include "compass/rng.hpp"

namespace compass {

// ---------------------------------------------------------------------------
// IVF clustering
// ---------------------------------------------------------------------------

struct KMeansResult {
    std::vector<float> centroids; // nlist * dim
    std::vector<std::uint32_t> assignments;
    std::uint32_t iterations = 0;
};

namespace detail {

inline std::uint32_t nearest_centroid(const float* point, const float* centroids, std::uint32_t nlist,
                                      std::size_t dim) {
    std::uint32_t best = 0;
    double best_d = squared_l2_raw(point, centroids, dim);
    for (std::uint32_t c = 1; c < nlist; ++c) {
        const double d = squared_l2_bounded(point, centroids + static_cast<std::size_t>(c) * dim, dim, best_d);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Moves the farthest member of the largest multi-member cluster into each
// empty cluster so every cluster ends non-empty.
inline void repair_empty_clusters(const float* data, std::size_t dim, std::vector<float>& centroids,
                                  std::vector<std::uint32_t>& assignments, std::vector<std::uint64_t>& counts) {
    const std::uint32_t nlist = static_cast<std::uint32_t>(counts.size());
    for (std::uint32_t empty = 0; empty < nlist; ++empty) {
        if (counts[empty] != 0) {
            continue;
        }
        std::uint32_t donor = nlist;
        for (std::uint32_t c = 0; c < nlist; ++c) {
            if (counts[c] >= 2 && (donor == nlist || counts[c] > counts[donor])) {
                donor = c;
            }
        }
        if (donor == nlist) {
            throw std::logic_error("kmeans: cannot repair empty cluster");
        }
        std::uint32_t farthest = 0;
        double farthest_d = -1.0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i] != donor) {
                continue;
            }
            const double d = squared_l2_raw(data + i * dim, centroids.data() + static_cast<std::size_t>(donor) * dim,
                                            dim);
            if (d > farthest_d) {
                farthest_d = d;
                farthest = static_cast<std::uint32_t>(i);
            }
        }
        assignments[farthest] = empty;
        --counts[donor];
        counts[empty] = 1;
        for (std::size_t j = 0; j < dim; ++j) {
            centroids[static_cast<std::size_t>(empty) * dim + j] = data[static_cast<std::size_t>(farthest) * dim + j];
        }
    }
}

} // namespace detail

// Lloyd k-means with k-means++ seeding; runs until the assignment reaches a
// fixpoint or max_iters. Empty clusters are re-seeded from the farthest
// member of the largest cluster.
inline KMeansResult build_clusters(const float* data, std::size_t n, std::size_t dim, std::uint32_t nlist,
                                   std::uint64_t seed, std::uint32_t max_iters = 20) {
    if (nlist == 0 || nlist > n) {
        throw std::invalid_argument("build_clusters: require 1 <= nlist <= n");
    }
    Rng rng(seed);
    std::vector<float> centroids(static_cast<std::size_t>(nlist) * dim);
    auto point = [&](std::size_t i) { return data + i * dim; };
    auto centroid = [&](std::uint32_t c) { return centroids.data() + static_cast<std::size_t>(c) * dim; };

    // k-means++ seeding
    {
        const std::size_t first = static_cast<std::size_t>(uniform_below(rng, n));
        std::copy(point(first), point(first) + dim, centroid(0));
        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        for (std::uint32_t c = 1; c < nlist; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = detail::squared_l2_bounded(point(i), centroid(c - 1), dim, best[i]);
                if (d < best[i]) {
                    best[i] = d;
                }
                total += best[i];
            }
            std::size_t pick = n - 1;
            if (total > 0.0) {
                const double r = uniform01(rng) * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += best[i];
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<std::size_t>(uniform_below(rng, n));
            }
            std::copy(point(pick), point(pick) + dim, centroid(c));
        }
    }

    KMeansResult result;
    result.assignments.assign(n, 0);
    std::vector<std::uint32_t> previous;
    std::vector<double> sums(static_cast<std::size_t>(nlist) * dim);
    std::vector<std::uint64_t> counts(nlist);

    auto assign_pass = [&](std::vector<std::uint32_t>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = detail::nearest_centroid(point(i), centroids.data(), nlist, dim);
        }
    };
    auto update_pass = [&]() {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = result.assignments[i];
            ++counts[c];
            double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            const float* p = point(i);
            for (std::size_t j = 0; j < dim; ++j) {
                s[j] += p[j];
            }
        }
        for (std::uint32_t c = 0; c < nlist; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            float* ct = centroid(c);
            const double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            for (std::size_t j = 0; j < dim; ++j) {
                ct[j] = static_cast<float>(s[j] / static_cast<double>(counts[c]));
            }
        }
        detail::repair_empty_clusters(data, dim, centroids, result.assignments, counts);
    };

    assign_pass(result.assignments);
    for (std::uint32_t it = 0; it < max_iters; ++it) {
        update_pass();
        previous = result.assignments;
        assign_pass(result.assignments);
        result.iterations = it + 1;
        if (result.assignments == previous) {
            break;
        }
    }
    // The final assignment pass may have re-emptied a cluster.
    std::fill(counts.begin(), counts.end(), 0);
    for (std::uint32_t c : result.assignments) {
        ++counts[c];
    }
    detail::repair_empty_clusters(data, dim, centroids, result.assignments, counts);

    result.centroids = std::move(centroids);
    return result;
}

inline KMeansResult build_clusters(const Dataset& dataset, std::uint32_t nlist, std::uint64_t seed,
                                   std::uint32_t max_iters = 20) {
    return build_clusters(dataset.vector_data(), dataset.size(), dataset.dim(), nlist, seed, max_iters);
}

// ---------------------------------------------------------------------------
// Per-cluster per-attribute sorted runs
// ---------------------------------------------------------------------------

// IVF centroids plus, for every (cluster, attribute) pair, a value-sorted
// range-scannable run of (value, id) entries, and a small proximity graph
// over the centroids for on-demand cluster ranking.
struct ClusteredBTrees {
    std::uint32_t nlist = 0;
    std::size_t dim = 0;
    std::size_t num_attributes = 0;
    std::vector<float> centroids;             // nlist * dim
    std::vector<std::uint32_t> assignments;   // record id -> cluster
    std::vector<std::uint64_t> run_offsets;   // nlist * num_attributes + 1
    std::vector<double> run_values;           // sorted within each run
    std::vector<std::uint32_t> run_ids;
    GraphIndex centroid_graph;

    std::pair<std::uint64_t, std::uint64_t> run_range(std::uint32_t cluster, std::size_t attr) const {
        const std::size_t slot = static_cast<std::size_t>(cluster) * num_attributes + attr;
        return {run_offsets[slot], run_offsets[slot + 1]};
    }

    std::uint64_t cluster_size(std::uint32_t cluster) const {
        const auto [b, e] = run_range(cluster, 0);
        return e - b;
    }
};

// Entries sorted ascending by value, ties by record id.
inline void build_cluster_trees(const Dataset& dataset, const std::vector<std::uint32_t>& assignments,
                                std::uint32_t nlist, std::vector<std::uint64_t>& offsets,
                                std::vector<double>& values, std::vector<std::uint32_t>& ids) {
    const std::size_t n = dataset.size();
    const std::size_t m = dataset.num_attributes();
    if (assignments.size() != n) {
        throw std::invalid_argument("build_cluster_trees: assignment size mismatch");
    }
    std::vector<std::vector<std::uint32_t>> members(nlist);
    for (std::size_t i = 0; i < n; ++i) {
        if (assignments[i] >= nlist) {
            throw std::invalid_argument("build_cluster_trees: cluster id out of range");
        }
        members[assignments[i]].push_back(static_cast<std::uint32_t>(i));
    }
    offsets.assign(static_cast<std::size_t>(nlist) * m + 1, 0);
    values.clear();
    ids.clear();
    values.reserve(n * m);
    ids.reserve(n * m);
    std::vector<std::pair<double, std::uint32_t>> run;
    for (std::uint32_t c = 0; c < nlist; ++c) {
        for (std::size_t a = 0; a < m; ++a) {
            run.clear();
            for (std::uint32_t id : members[c]) {
                run.emplace_back(dataset.attributes_of(id)[a], id);
            }
            std::sort(run.begin(), run.end());
            for (const auto& [v, id] : run) {
                values.push_back(v);
                ids.push_back(id);
            }
            offsets[static_cast<std::size_t>(c) * m + a + 1] = values.size();
        }
    }
}

inline GraphIndex build_centroid_graph(const std::vector<float>& centroids, std::uint32_t nlist, std::size_t dim,
                                       std::uint64_t seed) {
    GraphBuildConfig cfg;
    cfg.M = 16;
    cfg.efc = 100;
    cfg.seed = seed;
    return GraphIndex::build(centroids.data(), nlist, dim, cfg);
}

inline ClusteredBTrees assemble_clustered_btrees(const Dataset& dataset, std::vector<float> centroids,
                                                 std::vector<std::uint32_t> assignments, std::uint64_t seed) {
    if (dataset.num_attributes() == 0) {
        throw std::invalid_argument("clustered B+-trees require at least one attribute");
    }
    ClusteredBTrees cbt;
    cbt.dim = dataset.dim();
    cbt.num_attributes = dataset.num_attributes();
    cbt.nlist = static_cast<std::uint32_t>(centroids.size() / dataset.dim());
    cbt.centroids = std::move(centroids);
    cbt.assignments = std::move(assignments);
    build_cluster_trees(dataset, cbt.assignments, cbt.nlist, cbt.run_offsets, cbt.run_values, cbt.run_ids);
    cbt.centroid_graph = build_centroid_graph(cbt.centroids, cbt.nlist, cbt.dim, seed);
    return cbt;
}

inline ClusteredBTrees build_clustered_btrees(const Dataset& dataset, std::uint32_t nlist, std::uint64_t seed,
                                              std::uint32_t max_iters = 20) {
    KMeansResult km = build_clusters(dataset, nlist, seed, max_iters);
    return assemble_clustered_btrees(dataset, std::move(km.centroids), std::move(km.assignments), seed);
}

// ---------------------------------------------------------------------------
// Cluster scans
// ---------------------------------------------------------------------------

enum class ScanMode { DrivingRange, MergedLeaves, FullCluster };

struct ScanPlan {
    ScanMode mode = ScanMode::FullCluster;
    std::size_t driving_attr = 0;
    Interval driving_interval;
    std::vector<std::pair<std::size_t, Interval>> leaves;
};

// Picks how a cluster is enumerated for a predicate. A driving range must be
// a necessary condition, so it is taken from a direct range child of an AND
// root (or the root itself); any other shape falls back to a deduplicated
// merge over every leaf range, which covers all possible passers.
inline ScanPlan make_scan_plan(const Predicate& p) {
    ScanPlan plan;
    if (p.is_always_true()) {
        return plan;
    }
    auto leaves = predicate_attribute_ranges(p);
    if (leaves.empty()) {
        return plan; // degenerate constant-true composite
    }
    if (p.kind() == Predicate::Kind::Range) {
        plan.mode = ScanMode::DrivingRange;
        plan.driving_attr = p.attr_index();
        plan.driving_interval = p.interval();
        return plan;
    }
    if (p.kind() == Predicate::Kind::And) {
        for (const Predicate& child : p.children()) {
            if (child.kind() == Predicate::Kind::Range) {
                plan.mode = ScanMode::DrivingRange;
                plan.driving_attr = child.attr_index();
                plan.driving_interval = child.interval();
                return plan;
            }
        }
    }
    plan.mode = ScanMode::MergedLeaves;
    plan.leaves = std::move(leaves);
    return plan;
}

// Resumable candidate stream over one cluster. Yields ids that satisfy the
// plan's coarse range(s); callers re-check the full predicate.
class ClusterScan {
  public:
    ClusterScan() = default;

    ClusterScan(const ClusteredBTrees& cbt, std::uint32_t cluster, const ScanPlan& plan) {
        switch (plan.mode) {
            case ScanMode::FullCluster: {
                const auto [b, e] = cbt.run_range(cluster, 0);
                run_ = cbt.run_ids.data();
                pos_ = b;
                end_ = e;
                break;
            }
            case ScanMode::DrivingRange: {
                const auto [b, e] = cbt.run_range(cluster, plan.driving_attr);
                const double* vb = cbt.run_values.data();
                pos_ = static_cast<std::uint64_t>(
                    std::lower_bound(vb + b, vb + e, plan.driving_interval.lo) - vb);
                end_ = static_cast<std::uint64_t>(
                    std::upper_bound(vb + b, vb + e, plan.driving_interval.hi) - vb);
                if (end_ < pos_) {
                    end_ = pos_;
                }
                run_ = cbt.run_ids.data();
                break;
            }
            case ScanMode::MergedLeaves: {
                for (const auto& [attr, iv] : plan.leaves) {
                    const auto [b, e] = cbt.run_range(cluster, attr);
                    const double* vb = cbt.run_values.data();
                    const auto lo = std::lower_bound(vb + b, vb + e, iv.lo) - vb;
                    const auto hi = std::upper_bound(vb + b, vb + e, iv.hi) - vb;
                    for (auto i = lo; i < hi; ++i) {
                        merged_.push_back(cbt.run_ids[i]);
                    }
                }
                std::sort(merged_.begin(), merged_.end());
                merged_.erase(std::unique(merged_.begin(), merged_.end()), merged_.end());
                run_ = merged_.data();
                pos_ = 0;
                end_ = merged_.size();
                break;
            }
        }
    }

    bool done() const { return pos_ >= end_; }

    std::uint32_t next_candidate() { return run_[pos_++]; }

  private:
    const std::uint32_t* run_ = nullptr;
    std::uint64_t pos_ = 0;
    std::uint64_t end_ = 0;
    std::vector<std::uint32_t> merged_;
};

// Materializes the qualifying members of one cluster: every yielded id is
// re-checked against the full predicate and appears exactly once.
inline std::vector<std::uint32_t> cluster_range_scan(const ClusteredBTrees& cbt, const Dataset& dataset,
                                                     std::uint32_t cluster, const Predicate& p,
                                                     QueryCounters* counters = nullptr) {
    if (cluster >= cbt.nlist) {
        throw std::out_of_range("cluster_range_scan: invalid cluster");
    }
    if (p.is_always_true()) {
        throw std::invalid_argument("cluster_range_scan: predicate is constant true");
    }
    const ScanPlan plan = make_scan_plan(p);
    ClusterScan scan(cbt, cluster, plan);
    std::vector<std::uint32_t> out;
    while (!scan.done()) {
        const std::uint32_t id = scan.next_candidate();
        if (counters != nullptr) {
            ++counters->predicate_evals;
        }
        if (evaluate_predicate(p, dataset.attributes_of(id))) {
            out.push_back(id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Relational candidate proposal
// ---------------------------------------------------------------------------

// Cluster-graph step size: clusters fetched per beam increment of the
// centroid search.
inline constexpr std::uint32_t kClusterGraphStep = 8;

// Pull-based iterator that proposes close predicate-passing records from IVF
// clusters in approximate centroid-distance order. Shares the record-level
// candidate queue and visited bitmap with the graph cursor; the centroid
// search keeps fully private state.
class CbtCursor {
  public:
    CbtCursor(const ClusteredBTrees& cbt, const Dataset& dataset, const float* query, const Predicate& predicate,
              SharedSearchState& shared, QueryCounters& counters, std::uint32_t k, const SearchConfig& config)
        : cbt_(&cbt)
        , dataset_(&dataset)
        , query_(query)
        , predicate_(&predicate)
        , shared_(&shared)
        , counters_(&counters)
        , k_(k)
        , efi_(config.efi_or_default(k))
        , plan_(make_scan_plan(predicate))
        , cg_shared_(std::make_unique<SharedSearchState>(cbt.nlist))
        , cg_cursor_(cbt.centroid_graph,
                     CentroidSearchContext{cbt.centroids.data(), cbt.dim, query, &counters}, *cg_shared_,
                     /*batch_limit=*/1, kClusterGraphStep, config.alpha, config.beta) {}

    void open() { cg_cursor_.open(); }

    // Fetches up to efi new predicate-passing records from clusters in
    // centroid-proximity order, then hands out the closest ceil(k/2) of the
    // accumulated pool, publishing each to the shared candidate queue.
    std::vector<ScoredRecord> next() {
        ++counters_->cbt_pulls;
        std::uint32_t added = 0;
        while (added < efi_) {
            if (!scan_open_ || scan_.done()) {
                const auto cluster = next_cluster();
                if (!cluster.has_value()) {
                    break;
                }
                scan_ = ClusterScan(*cbt_, *cluster, plan_);
                scan_open_ = true;
                ++clusters_consumed_;
                continue;
            }
            const std::uint32_t id = scan_.next_candidate();
            if (shared_->visited.test(id)) {
                continue;
            }
            ++counters_->predicate_evals;
            if (!evaluate_predicate(*predicate_, dataset_->attributes_of(id))) {
                continue;
            }
            shared_->visited.set(id);
            ++counters_->dist_comps;
            const double d = detail::squared_l2_raw(
                query_, dataset_->vector_data() + static_cast<std::size_t>(id) * dataset_->dim(), dataset_->dim());
            relq_.push({id, d});
            ++added;
        }
        std::vector<ScoredRecord> records;
        const std::uint32_t batch = (k_ + 1) / 2;
        for (std::uint32_t i = 0; i < batch && !relq_.empty(); ++i) {
            const ScoredRecord r = relq_.pop();
            shared_->candidates.push(r);
            records.push_back(r);
        }
        exhausted_ = supply_done_ && (!scan_open_ || scan_.done()) && relq_.empty();
        return records;
    }

    bool exhausted() const { return exhausted_; }
    std::uint32_t clusters_consumed() const { return clusters_consumed_; }
    const MinDistHeap& relational_queue() const { return relq_; }
    const Bitmap& cluster_visited() const { return cg_shared_->visited; }

  private:
    std::optional<std::uint32_t> next_cluster() {
        if (supply_done_) {
            return std::nullopt;
        }
        while (clusters_consumed_ < cbt_->nlist) {
            auto batch = cg_cursor_.next();
            if (!batch.records.empty()) {
                return batch.records.front().record_id;
            }
            if (cg_cursor_.exhausted()) {
                break;
            }
        }
        supply_done_ = true;
        return std::nullopt;
    }

    const ClusteredBTrees* cbt_;
    const Dataset* dataset_;
    const float* query_;
    const Predicate* predicate_;
    SharedSearchState* shared_;
    QueryCounters* counters_;
    std::uint32_t k_;
    std::uint32_t efi_;
    ScanPlan plan_;
    std::unique_ptr<SharedSearchState> cg_shared_; // stable address under moves
    ProgressiveCursor<CentroidSearchContext> cg_cursor_;
    ClusterScan scan_;
    bool scan_open_ = false;
    bool supply_done_ = false;
    bool exhausted_ = false;
    std::uint32_t clusters_consumed_ = 0;
    MinDistHeap relq_;
};

inline CbtCursor cbt_open(const ClusteredBTrees& cbt, const Dataset& dataset, const float* query,
                          const Predicate& predicate, SharedSearchState& shared, QueryCounters& counters,
                          std::uint32_t k, const SearchConfig& config) {
    CbtCursor cursor(cbt, dataset, query, predicate, shared, counters, k, config);
    cursor.open();
    return cursor;
}

} // namespace compass
