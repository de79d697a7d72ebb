//
// bench.hpp
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
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "compass/compass.hpp"
#include "compass/oracle.hpp"
#include "compass/workload.hpp"

namespace compass {

// ef grid: 10..95 step 5, 100..190 step 10, 200..450 step 50, 500..1000
// step 100.
inline std::vector<std::uint32_t> paper_ef_schedule() {
    std::vector<std::uint32_t> efs;
    for (std::uint32_t ef = 10; ef < 100; ef += 5) {
        efs.push_back(ef);
    }
    for (std::uint32_t ef = 100; ef < 200; ef += 10) {
        efs.push_back(ef);
    }
    for (std::uint32_t ef = 200; ef < 500; ef += 50) {
        efs.push_back(ef);
    }
    for (std::uint32_t ef = 500; ef <= 1000; ef += 100) {
        efs.push_back(ef);
    }
    return efs;
}

enum class Strategy { Compass, GraphOnly, RelationalOnly, Prefilter, Postfilter };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Compass: return "compass";
        case Strategy::GraphOnly: return "graph_only";
        case Strategy::RelationalOnly: return "relational_only";
        case Strategy::Prefilter: return "prefilter";
        case Strategy::Postfilter: return "postfilter";
    }
    return "?";
}

inline Strategy strategy_from_name(const std::string& name) {
    if (name == "compass") return Strategy::Compass;
    if (name == "graph_only") return Strategy::GraphOnly;
    if (name == "relational_only") return Strategy::RelationalOnly;
    if (name == "prefilter") return Strategy::Prefilter;
    if (name == "postfilter") return Strategy::Postfilter;
    throw std::invalid_argument("unknown strategy: " + name);
}

struct BenchRow {
    std::uint32_t ef = 0;
    double mean_recall = 0.0;       // denominator k
    double mean_recall_truth = 0.0; // denominator |truth row|
    double qps = 0.0;
    double mean_n_dist_comps = 0.0;
    double mean_n_predicate_evals = 0.0;
    std::string mode;
    std::uint32_t n_attrs = 0;
    double passrate = 0.0;
    std::string strategy;
    // Diagnostics, not part of the CSV schema.
    std::uint64_t soundness_violations = 0;
    std::uint64_t counter_mismatches = 0;
    std::uint64_t two_hop_branches = 0;
    std::uint64_t pivot_breaks = 0;
    std::uint64_t cbt_pulls = 0;
};

// Runs every workload query single-threaded at one ef and aggregates. The
// wall clock covers only the query loop.
inline BenchRow run_workload(const CompassIndex& index, const Workload& workload,
                             const std::vector<GroundTruthRow>& truth, Strategy strategy, std::uint32_t ef,
                             SearchConfig base_config) {
    if (truth.size() != workload.queries.size()) {
        throw std::invalid_argument("run_workload: ground truth does not match workload");
    }
    BenchRow row;
    row.ef = ef;
    row.mode = workload.meta.mode;
    row.n_attrs = workload.meta.n_attrs;
    row.passrate = workload.meta.passrate;
    row.strategy = strategy_name(strategy);

    double recall_k_sum = 0.0;
    double recall_truth_sum = 0.0;
    double dist_sum = 0.0;
    double eval_sum = 0.0;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<QueryOutcome> outcomes;
    outcomes.reserve(workload.queries.size());
    for (const FilteredQuery& q : workload.queries) {
        SearchConfig config = base_config;
        config.ef = std::max(ef, q.k);
        QueryOutcome out;
        switch (strategy) {
            case Strategy::Compass:
                out = compass_search(index, q.vector, q.predicate, q.k, config);
                break;
            case Strategy::GraphOnly:
                out = compass_search_variant(index, q.vector, q.predicate, q.k, config, SearchVariant::GraphOnly);
                break;
            case Strategy::RelationalOnly:
                out = compass_search_variant(index, q.vector, q.predicate, q.k, config,
                                             SearchVariant::RelationalOnly);
                break;
            case Strategy::Prefilter:
                out = prefilter_search(*index.dataset, q.vector, q.predicate, q.k);
                break;
            case Strategy::Postfilter:
                out = postfilter_search(index.graph, *index.dataset, q.vector, q.predicate, q.k,
                                        std::max(q.k, ef));
                break;
        }
        outcomes.push_back(std::move(out));
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (std::size_t i = 0; i < workload.queries.size(); ++i) {
        const FilteredQuery& q = workload.queries[i];
        const QueryOutcome& out = outcomes[i];
        std::size_t hits = 0;
        {
            // Truth rows are (dist, id)-sorted; count id overlap.
            std::vector<std::uint32_t> truth_ids;
            truth_ids.reserve(truth[i].entries.size());
            for (const ScoredRecord& e : truth[i].entries) {
                truth_ids.push_back(e.record_id);
            }
            std::sort(truth_ids.begin(), truth_ids.end());
            for (const ScoredRecord& r : out.results) {
                if (std::binary_search(truth_ids.begin(), truth_ids.end(), r.record_id)) {
                    ++hits;
                }
            }
        }
        if (truth[i].entries.empty()) {
            const double perfect = out.results.empty() ? 1.0 : 0.0;
            recall_k_sum += perfect;
            recall_truth_sum += perfect;
        } else {
            recall_k_sum += static_cast<double>(hits) / static_cast<double>(q.k);
            recall_truth_sum += static_cast<double>(hits) / static_cast<double>(truth[i].entries.size());
        }
        dist_sum += static_cast<double>(out.n_dist_comps);
        eval_sum += static_cast<double>(out.n_predicate_evals);
        for (const ScoredRecord& r : out.results) {
            if (!evaluate_predicate(q.predicate, index.dataset->attributes_of(r.record_id))) {
                ++row.soundness_violations;
            }
        }
        const bool compass_family = strategy == Strategy::Compass || strategy == Strategy::GraphOnly
                                    || strategy == Strategy::RelationalOnly;
        if (compass_family && out.n_dist_comps != out.visited_popcount) {
            ++row.counter_mismatches;
        }
        row.two_hop_branches += out.n_two_hop_branches;
        row.pivot_breaks += out.n_pivot_breaks;
        row.cbt_pulls += out.n_cbt_pulls;
    }

    const double nq = static_cast<double>(workload.queries.size());
    row.mean_recall = recall_k_sum / nq;
    row.mean_recall_truth = recall_truth_sum / nq;
    row.qps = elapsed > 0.0 ? nq / elapsed : 0.0;
    row.mean_n_dist_comps = dist_sum / nq;
    row.mean_n_predicate_evals = eval_sum / nq;
    return row;
}

inline std::vector<BenchRow> run_sweep(const CompassIndex& index, const Workload& workload,
                                       const std::vector<GroundTruthRow>& truth, Strategy strategy,
                                       const std::vector<std::uint32_t>& schedule, const SearchConfig& config) {
    std::vector<BenchRow> rows;
    rows.reserve(schedule.size());
    for (std::uint32_t ef : schedule) {
        rows.push_back(run_workload(index, workload, truth, strategy, ef, config));
    }
    return rows;
}

inline constexpr const char* kBenchCsvHeader =
    "ef,mean_recall,mean_recall_truth,qps,mean_n_dist_comps,mean_n_predicate_evals,mode,n_attrs,passrate,strategy";

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    out << kBenchCsvHeader << "\n";
    char buf[256];
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%u,%.6f,%.6f,%.3f,%.3f,%.3f,%s,%u,%g,%s", r.ef, r.mean_recall,
                      r.mean_recall_truth, r.qps, r.mean_n_dist_comps, r.mean_n_predicate_evals, r.mode.c_str(),
                      r.n_attrs, r.passrate, r.strategy.c_str());
        out << buf << "\n";
    }
    if (!out) {
        throw DataError("write failed for " + path);
    }
}

} // namespace compass
