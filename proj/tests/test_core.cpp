//
// test_core.cpp
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

#include <cmath>

#include "compass/core.hpp"
#include "compass/rng.hpp"
#include "test_helpers.hpp"

using namespace compass;

TEST_CASE("squared_l2 basics") {
    const std::vector<float> z{0.0f, 0.0f};
    CHECK(squared_l2(z, z) == 0.0);
    const std::vector<float> a{0.0f, 0.0f};
    const std::vector<float> b{3.0f, 4.0f};
    CHECK(squared_l2(a, b) == 25.0);
    CHECK_THROWS_AS(squared_l2(std::vector<float>{1.0f}, b), std::invalid_argument);
}

TEST_CASE("squared_l2 matches a scalar reference loop on random 32-d pairs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<float> u(32), v(32);
        for (auto& x : u) {
            x = static_cast<float>(uniform_in(rng, -2.0, 2.0));
        }
        for (auto& x : v) {
            x = static_cast<float>(uniform_in(rng, -2.0, 2.0));
        }
        double ref = 0.0;
        for (std::size_t i = 0; i < 32; ++i) {
            const double d = static_cast<double>(u[i]) - static_cast<double>(v[i]);
            ref += d * d;
        }
        const double got = squared_l2(u, v);
        CHECK(std::abs(got - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("squared_l2 is symmetric") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + uniform_below(rng, 40);
        std::vector<float> u(d), v(d);
        for (auto& x : u) {
            x = static_cast<float>(uniform_in(rng, -5.0, 5.0));
        }
        for (auto& x : v) {
            x = static_cast<float>(uniform_in(rng, -5.0, 5.0));
        }
        CHECK(squared_l2(u, v) == squared_l2(v, u));
    }
}

TEST_CASE("evaluate_predicate on the two-attribute example") {
    const std::vector<double> attrs{62.0, 6.0};
    const Predicate both = Predicate::conjunction({Predicate::range(0, 50, 70), Predicate::range(1, 0, 10)});
    CHECK(evaluate_predicate(both, attrs));
    CHECK_FALSE(evaluate_predicate(Predicate::range(1, 10, 20), attrs));
    CHECK(evaluate_predicate(Predicate::always_true(), attrs));
}

TEST_CASE("evaluate_predicate rejects out-of-range attribute indexes") {
    const std::vector<double> attrs{0.5};
    CHECK_THROWS_AS(evaluate_predicate(Predicate::range(3, 0, 1), attrs), std::out_of_range);
}

TEST_CASE("AND with a constant-true child is a no-op") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> attrs{uniform01(rng), uniform01(rng)};
        const Predicate leaf = Predicate::range(uniform_below(rng, 2), uniform01(rng) * 0.5, 0.5 + uniform01(rng) * 0.5);
        const Predicate with_true = Predicate::conjunction({leaf, Predicate::always_true()});
        CHECK(evaluate_predicate(with_true, attrs) == evaluate_predicate(leaf, attrs));
    }
}

TEST_CASE("conjunction implies every leaf, disjunction implies some leaf") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Predicate> leaves;
        for (int i = 0; i < 3; ++i) {
            const double lo = uniform01(rng) * 0.8;
            leaves.push_back(Predicate::range(i, lo, lo + 0.2));
        }
        const std::vector<double> attrs{uniform01(rng), uniform01(rng), uniform01(rng)};
        if (evaluate_predicate(Predicate::conjunction(leaves), attrs)) {
            for (const auto& leaf : leaves) {
                CHECK(evaluate_predicate(leaf, attrs));
            }
        }
        if (evaluate_predicate(Predicate::disjunction(leaves), attrs)) {
            bool any = false;
            for (const auto& leaf : leaves) {
                any = any || evaluate_predicate(leaf, attrs);
            }
            CHECK(any);
        }
    }
}

TEST_CASE("predicate construction rejects malformed trees") {
    CHECK_THROWS_AS(Predicate::range(0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Predicate::conjunction({}), std::invalid_argument);
    CHECK_THROWS_AS(Predicate::disjunction({}), std::invalid_argument);
}

TEST_CASE("recall basics") {
    const std::vector<std::uint32_t> truth{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(recall(truth, truth) == 1.0);
    const std::vector<std::uint32_t> half{0, 1, 2, 3, 4, 100, 101, 102, 103, 104};
    CHECK(recall(half, truth) == 0.5);
    const std::vector<std::uint32_t> disjoint{20, 21};
    CHECK(recall(disjoint, truth) == 0.0);
    CHECK_THROWS_AS(recall(truth, std::vector<std::uint32_t>{}), std::invalid_argument);
}

TEST_CASE("recall is monotone when a correct id joins the result") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::uint32_t> truth;
        for (std::uint32_t i = 0; i < 10; ++i) {
            truth.push_back(i);
        }
        std::vector<std::uint32_t> result;
        for (int i = 0; i < 5; ++i) {
            result.push_back(static_cast<std::uint32_t>(uniform_below(rng, 30)));
        }
        const double before = recall(result, truth);
        result.push_back(static_cast<std::uint32_t>(uniform_below(rng, 10))); // correct id
        CHECK(recall(result, truth) >= before);
    }
}

TEST_CASE("predicate_attribute_ranges flattens leaves in document order") {
    const Predicate single = Predicate::range(0, 0, 5);
    auto r1 = predicate_attribute_ranges(single);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].first == 0);
    CHECK(r1[0].second.lo == 0.0);
    CHECK(r1[0].second.hi == 5.0);

    const Predicate conj = Predicate::conjunction({Predicate::range(0, 0, 5), Predicate::range(1, 1, 2)});
    auto r2 = predicate_attribute_ranges(conj);
    REQUIRE(r2.size() == 2);
    CHECK(r2[0].first == 0);
    CHECK(r2[1].first == 1);

    const Predicate disj = Predicate::disjunction({Predicate::range(0, 0, 5), Predicate::range(1, 1, 2)});
    auto r3 = predicate_attribute_ranges(disj);
    REQUIRE(r3.size() == 2);
    CHECK(r3[0].first == 0);
    CHECK(r3[1].first == 1);

    CHECK_THROWS_AS(predicate_attribute_ranges(Predicate::always_true()), std::invalid_argument);
}

TEST_CASE("nested predicates flatten left to right") {
    const Predicate nested = Predicate::conjunction(
        {Predicate::disjunction({Predicate::range(2, 0, 1), Predicate::range(0, 0.5, 0.6)}),
         Predicate::range(1, 0.1, 0.2)});
    auto r = predicate_attribute_ranges(nested);
    REQUIRE(r.size() == 3);
    CHECK(r[0].first == 2);
    CHECK(r[1].first == 0);
    CHECK(r[2].first == 1);
}

TEST_CASE("SearchConfig validation") {
    SearchConfig c;
    c.ef = 100;
    CHECK_NOTHROW(c.validate(10));
    CHECK_THROWS_AS(c.validate(0), std::invalid_argument);
    c.ef = 5;
    CHECK_THROWS_AS(c.validate(10), std::invalid_argument);
    c.ef = 100;
    c.beta = 0.5;
    c.alpha = 0.3;
    CHECK_THROWS_AS(c.validate(10), std::invalid_argument);
    c.beta = 0.05;
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(10), std::invalid_argument);
    CHECK(SearchConfig{}.delta_efs_or_default(10) == 10);
    CHECK(SearchConfig{}.efi_or_default(10) == 20);
}

TEST_CASE("Dataset validates alignment and domains") {
    Schema schema = test::unit_schema(2);
    std::vector<float> vecs{0.0f, 0.0f, 1.0f, 1.0f};
    std::vector<double> attrs{0.5, 0.5, 0.25, 0.75};
    CHECK_NOTHROW(Dataset(2, vecs, attrs, schema));
    CHECK_THROWS_AS(Dataset(2, std::vector<float>{0.0f}, attrs, schema), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(2, vecs, std::vector<double>{0.5, 0.5}, schema), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(2, vecs, std::vector<double>{0.5, 0.5, 0.25, 1.75}, schema), std::invalid_argument);
}

TEST_CASE("scored ordering breaks ties by id") {
    CHECK(scored_before({1, 0.5}, {2, 0.5}));
    CHECK_FALSE(scored_before({2, 0.5}, {1, 0.5}));
    CHECK(scored_before({9, 0.4}, {1, 0.5}));
}

TEST_CASE("heaps pop in deterministic (dist, id) order") {
    MinDistHeap min_heap;
    MaxDistHeap max_heap;
    const std::vector<ScoredRecord> rs{{3, 1.0}, {1, 1.0}, {2, 0.5}, {0, 2.0}};
    for (const auto& r : rs) {
        min_heap.push(r);
        max_heap.push(r);
    }
    CHECK(min_heap.pop().record_id == 2);
    CHECK(min_heap.pop().record_id == 1);
    CHECK(min_heap.pop().record_id == 3);
    CHECK(min_heap.pop().record_id == 0);
    CHECK(max_heap.pop().record_id == 0);
    CHECK(max_heap.pop().record_id == 3);
    CHECK(max_heap.pop().record_id == 1);
    CHECK(max_heap.pop().record_id == 2);
}
