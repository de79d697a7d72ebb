//
// test_graph.cpp
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

#include <catch2/catch_amalgamated.hpp>

#include <deque>
#include <set>

#include "compass/graph.hpp"
#include "compass/oracle.hpp"
#include "test_helpers.hpp"

using namespace compass;

namespace {

// A cursor plus the per-query state it needs, for driving the graph iterator
// standalone.
struct CursorHarness {
    CursorHarness(const GraphIndex& graph, const Dataset& ds, std::vector<float> query, Predicate predicate,
                  std::uint32_t k, SearchConfig config = {})
        : q(std::move(query)), p(std::move(predicate)), shared(graph.size()) {
        cursor.emplace(graph, RecordSearchContext{&ds, &p, q.data(), &counters}, shared, k,
                       config.delta_efs_or_default(k), config.alpha, config.beta);
    }

    void open() { cursor->open(); }

    std::vector<float> q;
    Predicate p;
    SharedSearchState shared;
    QueryCounters counters;
    std::optional<GraphCursor> cursor;
};

std::set<std::uint32_t> heap_ids(const std::vector<ScoredRecord>& raw) {
    std::set<std::uint32_t> s;
    for (const auto& r : raw) {
        s.insert(r.record_id);
    }
    return s;
}

} // namespace

TEST_CASE("build rejects bad parameters") {
    const Dataset ds = test::random_dataset(10, 4, 1, 1);
    CHECK_THROWS_AS(GraphIndex::build(ds.vector_data(), 0, 4, {16, 200, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(ds, 1, 200, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(ds, 16, 8, 1), std::invalid_argument);
}

TEST_CASE("single-record graph") {
    const Dataset ds = test::random_dataset(1, 4, 1, 2);
    const GraphIndex g = build_graph(ds, 16, 200, 1);
    CHECK(g.size() == 1);
    CHECK(g.entry_node() == 0);
    CHECK(g.neighbors0(0).empty());
}

TEST_CASE("three records with non-binding degree cap form a complete layer 0") {
    std::vector<float> vecs{0.0f, 0.0f, 1.0f, 0.0f, 0.0f, 1.0f};
    const Dataset ds(2, std::move(vecs), std::vector<double>{0.5, 0.5, 0.5}, test::unit_schema(1));
    const GraphIndex g = build_graph(ds, 2, 10, 7);
    for (std::uint32_t id = 0; id < 3; ++id) {
        const auto nbrs = g.neighbors0(id);
        std::set<std::uint32_t> got(nbrs.begin(), nbrs.end());
        std::set<std::uint32_t> want{0, 1, 2};
        want.erase(id);
        CHECK(got == want);
    }
}

TEST_CASE("builds are deterministic for a fixed seed") {
    const Dataset ds = test::random_dataset(500, 8, 1, 3);
    const GraphIndex a = build_graph(ds, 8, 50, 9);
    const GraphIndex b = build_graph(ds, 8, 50, 9);
    REQUIRE(a.num_layers() == b.num_layers());
    for (std::size_t li = 0; li < a.num_layers(); ++li) {
        CHECK(a.layer(li).nodes == b.layer(li).nodes);
        CHECK(a.layer(li).offsets == b.layer(li).offsets);
        CHECK(a.layer(li).neighbors == b.layer(li).neighbors);
    }
    CHECK(a.entry_node() == b.entry_node());
}

TEST_CASE("every record is reachable from the entry node on layer 0") {
    const Dataset ds = test::random_dataset(2000, 12, 1, 4);
    const GraphIndex g = build_graph(ds, 12, 60, 11);
    std::vector<bool> seen(g.size(), false);
    std::deque<std::uint32_t> frontier{g.entry_node()};
    seen[g.entry_node()] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const std::uint32_t cur = frontier.front();
        frontier.pop_front();
        for (std::uint32_t nb : g.neighbors0(cur)) {
            if (!seen[nb]) {
                seen[nb] = true;
                ++count;
                frontier.push_back(nb);
            }
        }
    }
    CHECK(count == g.size());
}

TEST_CASE("unfiltered search reaches 0.95 recall at ef=100 on 10k vectors") {
    const Dataset ds = test::random_dataset(10000, 32, 1, 5);
    const GraphIndex g = build_graph(ds, 16, 200, 13);
    Rng rng(14);
    double total = 0.0;
    const int n_queries = 50;
    for (int i = 0; i < n_queries; ++i) {
        const auto q = test::random_query(32, rng);
        std::uint64_t comps = 0;
        const auto got = knn_search(g, ds.vector_data(), ds.dim(), q.data(), 10, 100, &comps);
        const auto truth = brute_force_filtered_knn(ds, q, Predicate::always_true(), 10);
        total += recall(test::ids_of(got), test::ids_of(truth.entries));
    }
    CHECK(total / n_queries >= 0.95);
}

TEST_CASE("select_entry_point descends greedily") {
    SECTION("single-layer graph returns the entry unchanged") {
        const GraphIndex g = GraphIndex::from_layer0({{1}, {0}}, 1);
        std::vector<float> base{0.0f, 1.0f};
        std::uint64_t comps = 0;
        const float q = 0.9f;
        CHECK(select_entry_point(g, base.data(), 1, &q, &comps) == 1);
    }

    SECTION("descent never lands farther than the top entry") {
        const Dataset ds = test::random_dataset(3000, 16, 1, 6);
        const GraphIndex g = build_graph(ds, 8, 60, 15);
        Rng rng(16);
        for (int i = 0; i < 20; ++i) {
            const std::uint32_t target = static_cast<std::uint32_t>(uniform_below(rng, ds.size()));
            const auto qspan = ds.vector_of(target);
            std::uint64_t comps = 0;
            const std::uint32_t landed = select_entry_point(g, ds.vector_data(), ds.dim(), qspan.data(), &comps);
            const double d_land = squared_l2(qspan, ds.vector_of(landed));
            const double d_entry = squared_l2(qspan, ds.vector_of(g.entry_node()));
            CHECK(d_land <= d_entry);
        }
    }

    SECTION("landing quality beats the median pairwise distance") {
        const Dataset ds = test::random_dataset(10000, 16, 1, 7);
        const GraphIndex g = build_graph(ds, 16, 100, 17);
        // Median over a deterministic all-pairs sample.
        std::vector<double> dists;
        for (std::uint32_t i = 0; i < 400; ++i) {
            for (std::uint32_t j = i + 1; j < 400; ++j) {
                dists.push_back(squared_l2(ds.vector_of(i * 25), ds.vector_of(j * 25)));
            }
        }
        std::sort(dists.begin(), dists.end());
        const double median = dists[dists.size() / 2];
        Rng rng(18);
        int good = 0;
        for (int i = 0; i < 100; ++i) {
            const auto q = test::random_query(16, rng);
            std::uint64_t comps = 0;
            const std::uint32_t landed = select_entry_point(g, ds.vector_data(), ds.dim(), q.data(), &comps);
            if (squared_l2(std::span<const float>(q), ds.vector_of(landed)) <= median) {
                ++good;
            }
        }
        CHECK(good >= 95);
    }
}

TEST_CASE("open visits exactly the entry point") {
    const Dataset ds = test::random_dataset(50, 4, 1, 8);
    const GraphIndex g = build_graph(ds, 4, 20, 19);
    Rng rng(20);

    SECTION("entry passes the predicate") {
        CursorHarness h(g, ds, test::random_query(4, rng), Predicate::always_true(), 10);
        h.open();
        CHECK(h.shared.candidates.size() == 1);
        CHECK(h.shared.visited.popcount() == 1);
        CHECK(h.cursor->result_queue().size() == 1);
        CHECK(h.cursor->efs() == 0);
    }

    SECTION("entry fails the predicate") {
        CursorHarness h(g, ds, test::random_query(4, rng), Predicate::range(0, 2.0, 3.0), 10);
        h.open();
        CHECK(h.shared.candidates.size() == 1);
        CHECK(h.shared.visited.popcount() == 1);
        CHECK(h.cursor->result_queue().empty());
    }
}

TEST_CASE("visit routes records into the right queues") {
    // Line graph over 6 points; control efs_ through expand_search.
    std::vector<float> vecs{0.0f, 1.0f, 2.0f, 3.0f, 4.0f, 5.0f};
    const Dataset ds(1, std::move(vecs), std::vector<double>(6, 0.5), test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1}, {0, 2}, {1, 3}, {2, 4}, {3, 5}, {4}}, 0, 2);

    SearchConfig cfg;
    cfg.delta_efs = 2;
    CursorHarness h(g, ds, {0.0f}, Predicate::always_true(), 10, cfg);
    h.cursor->expand_search(); // efs = 2

    h.cursor->visit(0, true); // dist 0
    CHECK(h.cursor->top_queue().size() == 1);
    CHECK(h.shared.candidates.size() == 1);
    CHECK(h.cursor->result_queue().size() == 1);

    h.cursor->visit(5, true); // dist 25, beam underfull -> accepted
    h.cursor->visit(4, true); // dist 16, beam full, closer than max -> evicts 5
    CHECK(h.cursor->top_queue().size() == 2);
    CHECK(heap_ids(h.cursor->top_queue().raw()) == std::set<std::uint32_t>{0, 4});
    CHECK(heap_ids(h.cursor->recycle_queue().raw()) == std::set<std::uint32_t>{5});

    h.cursor->visit(3, true); // dist 9 -> evicts 4
    CHECK(heap_ids(h.cursor->top_queue().raw()) == std::set<std::uint32_t>{0, 3});

    const std::size_t shared_before = h.shared.candidates.size();
    h.cursor->visit(2, false); // dist 4 < max(top)=9 -> accepted even though it fails the predicate
    CHECK(h.shared.candidates.size() == shared_before + 1);
    const std::size_t results_before = h.cursor->result_queue().size();
    h.cursor->visit(1, false); // dist 1, passes=false -> no result entry
    CHECK(h.cursor->result_queue().size() == results_before);

    CHECK_THROWS_AS(h.cursor->visit(0, true), std::logic_error);

    // All six visited; distance count must match.
    CHECK(h.counters.dist_comps == 6);
    CHECK(h.shared.visited.popcount() == 6);
}

TEST_CASE("visit rejects far records into the recycle queue without sharing them") {
    std::vector<float> vecs{0.0f, 1.0f, 10.0f};
    const Dataset ds(1, std::move(vecs), std::vector<double>(3, 0.5), test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1}, {0}, {0}}, 0, 2);
    SearchConfig cfg;
    cfg.delta_efs = 1;
    CursorHarness h(g, ds, {0.0f}, Predicate::always_true(), 10, cfg);
    h.cursor->expand_search(); // efs = 1
    h.cursor->visit(0, true);
    const std::size_t shared_before = h.shared.candidates.size();
    h.cursor->visit(2, true); // dist 100 > max(top)=0, beam full -> recycle only
    CHECK(h.shared.candidates.size() == shared_before);
    CHECK(heap_ids(h.cursor->recycle_queue().raw()) == std::set<std::uint32_t>{2});
    // 2 was never shared; the cursor is not exhausted even with an empty result queue.
    CHECK_FALSE(h.cursor->exhausted());
}

TEST_CASE("expand_search reinstates recycled records and publishes unshared ones") {
    std::vector<float> vecs{0.0f, 1.0f, 2.0f, 3.0f};
    const Dataset ds(1, std::move(vecs), std::vector<double>(4, 0.5), test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1}, {0, 2}, {1, 3}, {2}}, 0, 2);
    SearchConfig cfg;
    cfg.delta_efs = 1;
    CursorHarness h(g, ds, {0.0f}, Predicate::always_true(), 10, cfg);
    h.cursor->expand_search(); // efs = 1
    h.cursor->visit(0, true);
    h.cursor->visit(3, true); // rejected -> recycle, unshared
    h.cursor->visit(2, true); // rejected -> recycle, unshared
    CHECK(h.cursor->recycle_queue().size() == 2);
    const std::size_t shared_before = h.shared.candidates.size();
    const std::size_t result_before = h.cursor->result_queue().size();

    h.cursor->expand_search(); // efs = 2: pulls record 2 (closer) into the beam
    CHECK(h.cursor->top_queue().size() == 2);
    CHECK(h.shared.candidates.size() == shared_before + 1);
    CHECK(h.cursor->result_queue().size() == result_before + 1);
    CHECK(heap_ids(h.cursor->recycle_queue().raw()) == std::set<std::uint32_t>{3});

    SECTION("expanding with an empty recycle queue only raises efs") {
        h.cursor->expand_search(); // pulls 3
        CHECK(h.cursor->recycle_queue().empty());
        const auto efs_before = h.cursor->efs();
        h.cursor->expand_search();
        CHECK(h.cursor->efs() == efs_before + 1);
        CHECK(h.cursor->top_queue().size() == 3);
    }
}

TEST_CASE("progressive state matches a fresh replay at the enlarged beam") {
    // Oracle: rerun the queue-maintenance rules from scratch at the final
    // beam width over the identical visit order and compare the partition.
    const Dataset ds = test::random_dataset(400, 8, 2, 9);
    const GraphIndex g = build_graph(ds, 8, 40, 21);
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const auto q = test::random_query(8, rng);
        const Predicate p = generate_range_predicate(trial % 2, 0.5, rng);
        CursorHarness h(g, ds, q, p, 10);
        h.open();

        // Drive a few steps, recording the visit order.
        std::vector<std::uint32_t> order;
        {
            // The entry visit already happened in open().
            for (std::uint32_t id = 0; id < ds.size(); ++id) {
                if (h.shared.visited.test(id)) {
                    order.push_back(id);
                }
            }
        }
        for (int step = 0; step < 4; ++step) {
            const auto before = h.shared.visited;
            (void)h.cursor->next();
            for (std::uint32_t id = 0; id < ds.size(); ++id) {
                if (h.shared.visited.test(id) && !before.test(id)) {
                    order.push_back(id);
                }
            }
        }
        h.cursor->expand_search();

        // Replay: constant beam = current efs, same visit order.
        const std::uint32_t efs = h.cursor->efs();
        MaxDistHeap top;
        MinDistHeap recycle;
        for (std::uint32_t id : order) {
            const ScoredRecord r{id, squared_l2(std::span<const float>(q), ds.vector_of(id))};
            if (top.size() < efs || top.empty() || r.dist < top.top().dist) {
                top.push(r);
                while (top.size() > efs) {
                    recycle.push(top.pop());
                }
            } else {
                recycle.push(r);
            }
        }
        CHECK(heap_ids(h.cursor->top_queue().raw()) == heap_ids(top.raw()));
        CHECK(heap_ids(h.cursor->recycle_queue().raw()) == heap_ids(recycle.raw()));
    }
}

TEST_CASE("neighborhood passrate") {
    std::vector<float> vecs(6, 0.0f);
    for (std::size_t i = 0; i < 6; ++i) {
        vecs[i] = static_cast<float>(i);
    }
    std::vector<double> attrs{0.9, 0.9, 0.9, 0.9, 0.1, 0.1};
    const Dataset ds(1, std::move(vecs), std::move(attrs), test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1, 2, 3, 4}, {0}, {0}, {0}, {5}, {4}}, 0, 4);

    const Predicate high = Predicate::range(0, 0.5, 1.0);
    CHECK(neighborhood_passrate(g, ds, 1, high) == 1.0);            // all neighbors pass
    CHECK(neighborhood_passrate(g, ds, 0, high) == 0.75);           // 3 of 4
    CHECK(neighborhood_passrate(g, ds, 4, high) == 0.0);            // every neighbor fails
    CHECK(neighborhood_passrate(g, ds, 1, Predicate::always_true()) == 1.0);

    // A node with no outgoing edges has passrate 0 by definition.
    const GraphIndex g2 = GraphIndex::from_layer0({{}, {0}}, 0, 2);
    const Dataset ds2(1, std::vector<float>{0.0f, 1.0f}, std::vector<double>{0.5, 0.5}, test::unit_schema(1));
    CHECK(neighborhood_passrate(g2, ds2, 0, high) == 0.0);
}

TEST_CASE("one-hop expansion visits every unvisited neighbor regardless of predicate") {
    std::vector<float> vecs{0.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    std::vector<double> attrs{0.9, 0.9, 0.1, 0.9, 0.1};
    const Dataset ds(1, std::move(vecs), std::move(attrs), test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1, 2, 3, 4}, {0}, {0}, {0}, {0}}, 0, 4);
    const Predicate p = Predicate::range(0, 0.5, 1.0);

    CursorHarness h(g, ds, {0.0f}, p, 10);
    h.open();
    h.cursor->expand_search();
    const std::uint64_t before = h.counters.dist_comps;
    h.cursor->one_hop_expand(0);
    CHECK(h.counters.dist_comps == before + 4); // exactly the unvisited neighbors
    CHECK(h.shared.visited.popcount() == 5);
    // Failing neighbors got distances but no result entries.
    CHECK(heap_ids(h.cursor->result_queue().raw()) == std::set<std::uint32_t>{0, 1, 3});

    const std::uint64_t again = h.counters.dist_comps;
    h.cursor->one_hop_expand(0); // everything already visited
    CHECK(h.counters.dist_comps == again);
}

TEST_CASE("two-hop expansion visits only passing records and respects the 2M cap") {
    SECTION("nothing passes: no distances, shared queue untouched") {
        std::vector<float> vecs{0.0f, 1.0f, 2.0f, 3.0f};
        std::vector<double> attrs{0.9, 0.1, 0.1, 0.1};
        const Dataset ds(1, std::move(vecs), std::move(attrs), test::unit_schema(1));
        const GraphIndex g = GraphIndex::from_layer0({{1, 2}, {3}, {3}, {}}, 0, 2);
        CursorHarness h(g, ds, {0.0f}, Predicate::range(0, 0.5, 1.0), 10);
        h.open();
        h.cursor->expand_search();
        const std::uint64_t dist_before = h.counters.dist_comps;
        const std::size_t shared_before = h.shared.candidates.size();
        h.cursor->two_hop_expand(0);
        CHECK(h.counters.dist_comps == dist_before);
        CHECK(h.shared.candidates.size() == shared_before);
        CHECK(h.counters.predicate_evals > 0); // attributes were checked
    }

    SECTION("all one-hop neighbors pass: same visits as a passer-restricted one-hop") {
        std::vector<float> vecs{0.0f, 1.0f, 2.0f};
        std::vector<double> attrs{0.9, 0.9, 0.9};
        const Dataset ds(1, std::move(vecs), std::move(attrs), test::unit_schema(1));
        const GraphIndex g = GraphIndex::from_layer0({{1, 2}, {0}, {0}}, 0, 2);
        CursorHarness h(g, ds, {0.0f}, Predicate::range(0, 0.5, 1.0), 10);
        h.open();
        h.cursor->expand_search();
        h.cursor->two_hop_expand(0);
        CHECK(h.shared.visited.popcount() == 3);
    }

    SECTION("a hub with 100 passing two-hop neighbors at M=16 visits exactly 32 of them") {
        // Node 0 links to four relays; each relay links to 25 leaves.
        std::vector<std::vector<std::uint32_t>> adj(1 + 4 + 100);
        adj[0] = {1, 2, 3, 4};
        std::uint32_t leaf = 5;
        for (std::uint32_t relay = 1; relay <= 4; ++relay) {
            for (int i = 0; i < 25; ++i) {
                adj[relay].push_back(leaf++);
            }
        }
        const std::size_t n = adj.size();
        std::vector<float> vecs(n);
        std::vector<double> attrs(n, 0.9);
        for (std::size_t i = 0; i < n; ++i) {
            vecs[i] = static_cast<float>(i);
        }
        // Relays fail the predicate so only two-hop leaves get visited.
        for (std::uint32_t relay = 1; relay <= 4; ++relay) {
            attrs[relay] = 0.1;
        }
        const Dataset ds(1, std::move(vecs), std::move(attrs), test::unit_schema(1));
        const GraphIndex g = GraphIndex::from_layer0(std::move(adj), 0, 16);
        CursorHarness h(g, ds, {0.0f}, Predicate::range(0, 0.5, 1.0), 10);
        h.open();
        h.cursor->expand_search();
        const std::uint64_t before = h.counters.dist_comps;
        h.cursor->two_hop_expand(0);
        CHECK(h.counters.dist_comps - before == 32); // 2M
    }
}

TEST_CASE("repeated next with a constant-true predicate recovers the exact top-ef set") {
    const std::size_t n = 400;
    const Dataset ds = test::random_dataset(n, 8, 1, 10);
    const GraphIndex g = build_graph(ds, 8, 60, 23);
    Rng rng(24);
    const auto q = test::random_query(8, rng);

    CursorHarness h(g, ds, q, Predicate::always_true(), 10);
    h.open();
    std::set<std::uint32_t> emitted;
    std::set<std::uint32_t> visited_prev;
    for (int guard = 0; guard < 10000 && !h.cursor->exhausted(); ++guard) {
        const auto batch = h.cursor->next();
        for (const auto& r : batch.records) {
            CHECK(!emitted.contains(r.record_id));
            emitted.insert(r.record_id);
        }
        // Progressive consistency: the visited set only grows.
        std::set<std::uint32_t> visited_now;
        for (std::uint32_t id = 0; id < n; ++id) {
            if (h.shared.visited.test(id)) {
                visited_now.insert(id);
            }
        }
        CHECK(std::includes(visited_now.begin(), visited_now.end(), visited_prev.begin(), visited_prev.end()));
        visited_prev = std::move(visited_now);
    }
    CHECK(emitted.size() == n); // union of batches == exact top-n
    // Unfiltered degeneration: two-hop and pivot branches never fire.
    CHECK(h.counters.two_hop_branches == 0);
    CHECK(h.counters.pivot_breaks == 0);
    // Computed-once across the whole drive.
    CHECK(h.counters.dist_comps == h.shared.visited.popcount());
}

TEST_CASE("next on an empty shared queue reports sel = 0") {
    std::vector<float> vecs{0.0f, 1.0f};
    const Dataset ds(1, std::move(vecs), std::vector<double>{0.5, 0.5}, test::unit_schema(1));
    const GraphIndex g = GraphIndex::from_layer0({{1}, {0}}, 0, 2);
    CursorHarness h(g, ds, {0.0f}, Predicate::always_true(), 10);
    h.open();
    (void)h.cursor->next();          // drains the two-node graph
    const auto batch = h.cursor->next(); // shared queue now empty on entry
    CHECK(batch.sel == 0.0);
    CHECK(batch.records.empty());
}

TEST_CASE("filtered traversal emits only predicate passers and counts distances once") {
    const Dataset ds = test::random_dataset(600, 8, 2, 11);
    const GraphIndex g = build_graph(ds, 8, 60, 25);
    Rng rng(26);
    for (int trial = 0; trial < 5; ++trial) {
        const auto q = test::random_query(8, rng);
        const Predicate p = generate_range_predicate(0, 0.3, rng);
        CursorHarness h(g, ds, q, p, 10);
        h.open();
        for (int step = 0; step < 30 && !h.cursor->exhausted(); ++step) {
            const auto batch = h.cursor->next();
            for (const auto& r : batch.records) {
                CHECK(evaluate_predicate(p, ds.attributes_of(r.record_id)));
            }
        }
        CHECK(h.counters.dist_comps == h.shared.visited.popcount());
        // Heap partition: every visited record the graph routed sits in
        // exactly one of top/recycle.
        CHECK(h.cursor->top_queue().size() + h.cursor->recycle_queue().size() == h.shared.visited.popcount());
    }
}
