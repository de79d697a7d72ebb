//
// compass_cli.cpp
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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "compass/bench.hpp"
#include "compass/compass.hpp"
#include "compass/io.hpp"
#include "compass/oracle.hpp"
#include "compass/predicate_json.hpp"
#include "compass/workload.hpp"

namespace {

using namespace compass;

struct CommonDataFlags {
    std::string data;
    std::string attrs;
};

Dataset load_or_die(const CommonDataFlags& f) {
    std::size_t removed = 0;
    Dataset ds = load_dataset(f.data, f.attrs, &removed);
    if (removed > 0) {
        std::cerr << "note: removed " << removed << " duplicate vectors at ingest\n";
    }
    return ds;
}

std::vector<std::uint32_t> parse_ef_schedule(const std::string& spec) {
    if (spec == "paper") {
        return paper_ef_schedule();
    }
    std::vector<std::uint32_t> efs;
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const long v = std::stol(cell);
        if (v <= 0) {
            throw CLI::ValidationError("--ef-schedule entries must be positive");
        }
        efs.push_back(static_cast<std::uint32_t>(v));
    }
    if (efs.empty()) {
        throw CLI::ValidationError("--ef-schedule is empty");
    }
    return efs;
}

// Rebuilds a single-cluster view over the same dataset: one global sorted
// run per attribute behind a trivial centroid graph.
ClusteredBTrees single_cluster_view(const Dataset& ds, std::uint64_t seed) {
    std::vector<float> centroid(ds.dim(), 0.0f);
    std::vector<double> mean(ds.dim(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* v = ds.vector_data() + i * ds.dim();
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            mean[j] += v[j];
        }
    }
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        centroid[j] = static_cast<float>(mean[j] / static_cast<double>(ds.size()));
    }
    return assemble_clustered_btrees(ds, std::move(centroid),
                                     std::vector<std::uint32_t>(ds.size(), 0), seed);
}

int cmd_gen_data(const std::string& out_vectors, const std::string& out_attrs, std::size_t n, std::size_t dim,
                 std::size_t m, std::uint64_t seed, const std::string& dist, std::uint32_t components,
                 double spread, const std::string& out_queries, std::size_t n_queries,
                 const std::string& out_workload, const std::string& mode, std::uint32_t n_attrs, double passrate,
                 std::uint32_t k) {
    std::vector<float> base;
    std::vector<float> queries;
    if (dist == "uniform") {
        base = generate_uniform_vectors(n, dim, seed);
        queries = generate_uniform_vectors(n_queries, dim, seed + 1);
    } else {
        base = generate_gaussian_mixture(n, dim, components, spread, seed);
        queries = generate_gaussian_mixture(n_queries, dim, components, spread, seed + 1);
    }
    std::vector<double> attrs = generate_attributes(n, m, seed + 2);
    const std::size_t removed = deduplicate_records(base, dim, attrs, m);
    if (removed > 0) {
        std::cerr << "note: regenerated dataset contained " << removed << " duplicate vectors; removed\n";
    }

    auto to_rows = [dim](const std::vector<float>& flat) {
        std::vector<std::vector<float>> rows(flat.size() / dim);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].assign(flat.begin() + i * dim, flat.begin() + (i + 1) * dim);
        }
        return rows;
    };
    write_fvecs(out_vectors, to_rows(base));
    write_attributes_csv(out_attrs, attrs, m);
    std::cout << "wrote " << base.size() / dim << " vectors to " << out_vectors << " and attributes to "
              << out_attrs << "\n";

    if (!out_queries.empty()) {
        write_fvecs(out_queries, to_rows(queries));
        std::cout << "wrote " << n_queries << " query vectors to " << out_queries << "\n";
    }
    if (!out_workload.empty()) {
        const ComposeMode cm = mode == "disj" ? ComposeMode::Disjunction : ComposeMode::Conjunction;
        Workload w = compose_workload(to_rows(queries), cm, n_attrs, passrate, k, seed + 3);
        write_workload_jsonl(out_workload, w);
        std::cout << "wrote workload (" << w.queries.size() << " queries, mode=" << w.meta.mode
                  << ", n_attrs=" << n_attrs << ", passrate=" << passrate << ") to " << out_workload << "\n";
    }
    return 0;
}

int cmd_build(const CommonDataFlags& dataf, const std::string& out, std::uint32_t M, std::uint32_t efc,
              std::uint32_t nlist, std::uint64_t seed, std::uint32_t kmeans_iters) {
    const Dataset ds = load_or_die(dataf);
    CompassBuildConfig cfg;
    cfg.M = M;
    cfg.efc = efc;
    cfg.nlist = nlist;
    cfg.seed = seed;
    cfg.kmeans_iters = kmeans_iters;
    const CompassIndex index = build_compass_index(ds, cfg);

    BundleHeader header;
    header.dataset_hash = hash_dataset(ds);
    header.dim = static_cast<std::uint32_t>(ds.dim());
    header.n = ds.size();
    header.m = static_cast<std::uint32_t>(ds.num_attributes());
    header.M = M;
    header.efc = efc;
    header.nlist = cfg.nlist_or_default(ds.size());
    header.graph_seed = seed;
    header.cluster_seed = seed;
    const auto sizes = save_bundle(out, header, index.graph, index.cbt);
    std::uint64_t total = 0;
    for (const auto& s : sizes) {
        std::cout << "section " << s.name << ": " << s.bytes << " bytes\n";
        total += s.bytes;
    }
    std::cout << "index bundle " << out << ": " << std::filesystem::file_size(out) << " bytes (" << total
              << " in sections)\n";
    return 0;
}

int cmd_gt(const CommonDataFlags& dataf, const std::string& workload_path, const std::string& out,
           std::uint32_t k_override) {
    const Dataset ds = load_or_die(dataf);
    const Workload w = read_workload_jsonl(workload_path);
    const std::uint64_t dhash = hash_dataset(ds);
    const std::uint64_t whash = hash_workload(w);
    const std::uint32_t k = k_override != 0 ? k_override : w.meta.k;

    if (std::filesystem::exists(out)) {
        const GroundTruthFile existing = load_ground_truth(out);
        if (existing.dataset_hash == dhash && existing.workload_hash == whash && existing.k == k) {
            std::cout << "ground truth cache hit: " << out << "\n";
            return 0;
        }
        throw DataError(out + ": exists but is bound to different inputs; remove it to regenerate");
    }
    GroundTruthFile gt;
    gt.dataset_hash = dhash;
    gt.workload_hash = whash;
    gt.k = k;
    gt.rows.reserve(w.queries.size());
    for (const FilteredQuery& q : w.queries) {
        gt.rows.push_back(brute_force_filtered_knn(ds, q.vector, q.predicate, k));
    }
    save_ground_truth(out, gt);
    std::cout << "wrote ground truth for " << gt.rows.size() << " queries to " << out << "\n";
    return 0;
}

int cmd_bench(const CommonDataFlags& dataf, const std::string& index_path, const std::string& workload_path,
              const std::string& gt_path, const std::string& out, const std::string& strategy_name_,
              const std::string& ef_schedule, std::uint32_t ef_single, const SearchConfig& config,
              std::uint64_t seed) {
    const Dataset ds = load_or_die(dataf);
    const Workload w = read_workload_jsonl(workload_path);
    LoadedBundle bundle = load_bundle(index_path);
    if (bundle.header.dataset_hash != hash_dataset(ds)) {
        throw DataError(index_path + ": dataset hash mismatch; bundle was built from different data");
    }
    const GroundTruthFile gt = load_ground_truth(gt_path);
    if (gt.dataset_hash != hash_dataset(ds) || gt.workload_hash != hash_workload(w)) {
        throw DataError(gt_path + ": ground truth is bound to different inputs");
    }

    CompassIndex index{std::move(bundle.graph), std::move(bundle.cbt), &ds};
    const Strategy strategy = strategy_from_name(strategy_name_);
    ClusteredBTrees single;
    if (strategy == Strategy::GraphOnly && index.cbt.nlist != 1) {
        index.cbt = single_cluster_view(ds, seed);
    }

    std::vector<std::uint32_t> schedule =
        ef_single != 0 ? std::vector<std::uint32_t>{ef_single} : parse_ef_schedule(ef_schedule);
    const auto rows = run_sweep(index, w, gt.rows, strategy, schedule, config);
    write_bench_csv(out, rows);
    std::cout << kBenchCsvHeader << "\n";
    for (const auto& r : rows) {
        std::printf("%u,%.6f,%.6f,%.3f,%.3f,%.3f,%s,%u,%g,%s\n", r.ef, r.mean_recall, r.mean_recall_truth, r.qps,
                    r.mean_n_dist_comps, r.mean_n_predicate_evals, r.mode.c_str(), r.n_attrs, r.passrate,
                    r.strategy.c_str());
    }
    std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
    return 0;
}

int cmd_query(const CommonDataFlags& dataf, const std::string& index_path, const std::string& predicate_json,
              const std::string& vector_csv, const std::string& queries_path, long qid, std::uint32_t k,
              const SearchConfig& config_in, const std::string& strategy_name_, std::uint64_t seed) {
    const Dataset ds = load_or_die(dataf);
    LoadedBundle bundle = load_bundle(index_path);
    if (bundle.header.dataset_hash != hash_dataset(ds)) {
        throw DataError(index_path + ": dataset hash mismatch; bundle was built from different data");
    }
    CompassIndex index{std::move(bundle.graph), std::move(bundle.cbt), &ds};

    std::vector<float> q;
    if (!vector_csv.empty()) {
        std::stringstream ss(vector_csv);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            q.push_back(std::stof(cell));
        }
    } else {
        const auto rows = read_fvecs(queries_path);
        if (qid < 0 || static_cast<std::size_t>(qid) >= rows.size()) {
            throw DataError(queries_path + ": qid out of range");
        }
        q = rows[static_cast<std::size_t>(qid)];
    }

    nlohmann::json pj;
    try {
        pj = nlohmann::json::parse(predicate_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("predicate JSON parse error: ") + e.what());
    }
    const Predicate p = predicate_from_json(pj);

    SearchConfig config = config_in;
    config.ef = std::max(config.ef, k);
    const Strategy strategy = strategy_from_name(strategy_name_);
    QueryOutcome out;
    switch (strategy) {
        case Strategy::Compass:
            out = compass_search(index, q, p, k, config);
            break;
        case Strategy::GraphOnly:
            if (index.cbt.nlist != 1) {
                index.cbt = single_cluster_view(ds, seed);
            }
            out = compass_search_variant(index, q, p, k, config, SearchVariant::GraphOnly);
            break;
        case Strategy::RelationalOnly:
            out = compass_search_variant(index, q, p, k, config, SearchVariant::RelationalOnly);
            break;
        case Strategy::Prefilter:
            out = prefilter_search(ds, q, p, k);
            break;
        case Strategy::Postfilter:
            out = postfilter_search(index.graph, ds, q, p, k, std::max(k, config.ef));
            break;
    }

    nlohmann::json j;
    j["ids"] = nlohmann::json::array();
    j["dists"] = nlohmann::json::array();
    for (const ScoredRecord& r : out.results) {
        j["ids"].push_back(r.record_id);
        j["dists"].push_back(r.dist);
    }
    j["counters"] = {{"n_dist_comps", out.n_dist_comps},
                     {"n_predicate_evals", out.n_predicate_evals},
                     {"n_cbt_pulls", out.n_cbt_pulls},
                     {"n_one_hop_branches", out.n_one_hop_branches},
                     {"n_two_hop_branches", out.n_two_hop_branches},
                     {"n_pivot_breaks", out.n_pivot_breaks},
                     {"n_routing_dist_comps", out.n_routing_dist_comps},
                     {"n_centroid_dist_comps", out.n_centroid_dist_comps},
                     {"visited_popcount", out.visited_popcount}};
    j["wall_time_sec"] = out.wall_time_sec;
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filtered vector search over proximity graphs and clustered B+-trees"};
    app.require_subcommand(1);

    CommonDataFlags dataf;
    SearchConfig config;
    std::uint64_t seed = 42;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate synthetic vectors, attributes, queries, and a workload");
    std::string g_out = "base.fvecs", g_attrs = "attrs.csv", g_dist = "gaussian-mixture";
    std::string g_queries, g_workload, g_mode = "conj";
    std::size_t g_n = 100000, g_dim = 32, g_m = 4, g_nq = 200;
    std::uint32_t g_components = 64, g_nattrs = 1, g_k = 10;
    double g_spread = 0.7, g_passrate = 0.3;
    gen->add_option("--out", g_out, "Output fvecs path");
    gen->add_option("--attrs", g_attrs, "Output attribute CSV path");
    gen->add_option("--n", g_n, "Number of records");
    gen->add_option("--dim", g_dim, "Vector dimensionality");
    gen->add_option("--m", g_m, "Number of attributes");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--dist", g_dist, "Vector distribution: gaussian-mixture | uniform");
    gen->add_option("--components", g_components, "Mixture components");
    gen->add_option("--spread", g_spread, "Mixture component standard deviation");
    gen->add_option("--queries", g_queries, "Also write query vectors (fvecs)");
    gen->add_option("--n-queries", g_nq, "Number of query vectors");
    gen->add_option("--workload", g_workload, "Also write a workload (JSONL)");
    gen->add_option("--mode", g_mode, "Workload mode: conj | disj")->check(CLI::IsMember({"conj", "disj"}));
    gen->add_option("--n-attrs", g_nattrs, "Attributes per predicate");
    gen->add_option("--passrate", g_passrate, "Per-attribute passrate");
    gen->add_option("--k", g_k, "Result count per query");

    // build
    auto* build = app.add_subcommand("build", "Build an index bundle from data files");
    std::string b_out = "index.cmpb";
    std::uint32_t b_M = 16, b_efc = 200, b_nlist = 0, b_iters = 20;
    build->add_option("--data", dataf.data, "Base vectors (fvecs)")->required();
    build->add_option("--attrs", dataf.attrs, "Attributes (CSV)")->required();
    build->add_option("--out", b_out, "Output bundle path");
    build->add_option("--M", b_M, "Graph max out-degree");
    build->add_option("--efc", b_efc, "Graph construction expansion factor");
    build->add_option("--nlist", b_nlist, "Cluster count (0 = n/100)");
    build->add_option("--seed", seed, "Build seed");
    build->add_option("--kmeans-iters", b_iters, "Max Lloyd iterations");

    // gt
    auto* gt = app.add_subcommand("gt", "Compute exact filtered ground truth for a workload");
    std::string t_workload, t_out = "gt.cgt";
    std::uint32_t t_k = 0;
    gt->add_option("--data", dataf.data, "Base vectors (fvecs)")->required();
    gt->add_option("--attrs", dataf.attrs, "Attributes (CSV)")->required();
    gt->add_option("--workload", t_workload, "Workload (JSONL)")->required();
    gt->add_option("--out", t_out, "Output ground-truth path");
    gt->add_option("--k", t_k, "Override k (0 = workload k)");

    // bench
    auto* bench = app.add_subcommand("bench", "Sweep ef and report recall/QPS/#Comp as CSV");
    std::string n_index, n_workload, n_gt, n_out = "report.csv", n_strategy = "compass", n_schedule = "paper";
    std::uint32_t n_ef = 0;
    bench->add_option("--data", dataf.data, "Base vectors (fvecs)")->required();
    bench->add_option("--attrs", dataf.attrs, "Attributes (CSV)")->required();
    bench->add_option("--index", n_index, "Index bundle")->required();
    bench->add_option("--workload", n_workload, "Workload (JSONL)")->required();
    bench->add_option("--gt", n_gt, "Ground truth file")->required();
    bench->add_option("--out", n_out, "Output CSV path");
    bench->add_option("--strategy", n_strategy,
                      "compass | graph_only | relational_only | prefilter | postfilter");
    bench->add_option("--ef-schedule", n_schedule, "'paper' or comma-separated ef values");
    bench->add_option("--ef", n_ef, "Single ef (overrides the schedule)");
    bench->add_option("--alpha", config.alpha, "One-hop passrate threshold");
    bench->add_option("--beta", config.beta, "Pivot passrate threshold");
    bench->add_option("--delta-efs", config.delta_efs, "Graph beam step (0 = k)");
    bench->add_option("--efi", config.efi, "Relational fetch budget (0 = 2k)");
    bench->add_option("--seed", seed, "Seed for derived single-cluster view");

    // query
    auto* query = app.add_subcommand("query", "Run one query and print results as JSON");
    std::string q_index, q_predicate = R"({"true":true})", q_vector, q_queries, q_strategy = "compass";
    long q_qid = 0;
    std::uint32_t q_k = 10;
    query->add_option("--data", dataf.data, "Base vectors (fvecs)")->required();
    query->add_option("--attrs", dataf.attrs, "Attributes (CSV)")->required();
    query->add_option("--index", q_index, "Index bundle")->required();
    query->add_option("--predicate", q_predicate, "Predicate JSON");
    query->add_option("--vector", q_vector, "Query vector as comma-separated floats");
    query->add_option("--queries", q_queries, "Query vectors file (fvecs)");
    query->add_option("--qid", q_qid, "Query index into --queries");
    query->add_option("--k", q_k, "Result count");
    query->add_option("--ef", config.ef, "Expansion factor");
    query->add_option("--alpha", config.alpha, "One-hop passrate threshold");
    query->add_option("--beta", config.beta, "Pivot passrate threshold");
    query->add_option("--delta-efs", config.delta_efs, "Graph beam step (0 = k)");
    query->add_option("--efi", config.efi, "Relational fetch budget (0 = 2k)");
    query->add_option("--strategy", q_strategy, "Search strategy");
    query->add_option("--seed", seed, "Seed for derived single-cluster view");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(g_out, g_attrs, g_n, g_dim, g_m, seed, g_dist, g_components, g_spread, g_queries,
                                g_nq, g_workload, g_mode, g_nattrs, g_passrate, g_k);
        }
        if (build->parsed()) {
            return cmd_build(dataf, b_out, b_M, b_efc, b_nlist, seed, b_iters);
        }
        if (gt->parsed()) {
            return cmd_gt(dataf, t_workload, t_out, t_k);
        }
        if (bench->parsed()) {
            return cmd_bench(dataf, n_index, n_workload, n_gt, n_out, n_strategy, n_schedule, n_ef, config, seed);
        }
        if (query->parsed()) {
            return cmd_query(dataf, q_index, q_predicate, q_vector, q_queries, q_qid, q_k, config, q_strategy,
                             seed);
        }
    } catch (const compass::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
