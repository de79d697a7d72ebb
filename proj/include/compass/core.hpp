//
// core.hpp
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

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace compass {

// ---------------------------------------------------------------------------
// Records and schema
// ---------------------------------------------------------------------------

struct AttributeSpec {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
};

using Schema = std::vector<AttributeSpec>;

// Aligned columns of vectors and relational attribute tuples. Record ids are
// the dense indices 0..n-1. Immutable after construction.
class Dataset {
  public:
    Dataset() = default;

    Dataset(std::size_t dim, std::vector<float> vectors, std::vector<double> attributes, Schema schema)
        : dim_(dim)
        , schema_(std::move(schema))
        , vectors_(std::move(vectors))
        , attributes_(std::move(attributes)) {
        if (dim_ == 0) {
            throw std::invalid_argument("Dataset: dimensionality must be positive");
        }
        if (vectors_.size() % dim_ != 0) {
            throw std::invalid_argument("Dataset: vector buffer is not a multiple of dim");
        }
        n_ = vectors_.size() / dim_;
        const std::size_t m = schema_.size();
        if (m == 0 ? !attributes_.empty() : attributes_.size() != n_ * m) {
            throw std::invalid_argument("Dataset: attribute rows do not align with vectors");
        }
        for (std::size_t i = 0; i < attributes_.size(); ++i) {
            const AttributeSpec& spec = schema_[i % m];
            if (attributes_[i] < spec.lo || attributes_[i] > spec.hi) {
                throw std::invalid_argument("Dataset: attribute value outside declared domain for '" + spec.name
                                            + "'");
            }
        }
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    std::size_t num_attributes() const { return schema_.size(); }
    const Schema& schema() const { return schema_; }

    std::span<const float> vector_of(std::uint32_t id) const {
        return {vectors_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }

    std::span<const double> attributes_of(std::uint32_t id) const {
        return {attributes_.data() + static_cast<std::size_t>(id) * schema_.size(), schema_.size()};
    }

    const float* vector_data() const { return vectors_.data(); }
    const double* attribute_data() const { return attributes_.data(); }

  private:
    std::size_t dim_ = 0;
    std::size_t n_ = 0;
    Schema schema_;
    std::vector<float> vectors_;     // n * dim
    std::vector<double> attributes_; // n * m
};

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

// Boolean tree of closed range conditions combined by AND/OR, plus a constant
// true leaf. Value semantics; immutable once built.
class Predicate {
  public:
    enum class Kind { Range, And, Or, True };

    static Predicate range(std::size_t attr_index, double lo, double hi) {
        if (lo > hi) {
            throw std::invalid_argument("Predicate::range: lo > hi");
        }
        Predicate p;
        p.kind_ = Kind::Range;
        p.attr_index_ = attr_index;
        p.interval_ = {lo, hi};
        return p;
    }

    static Predicate conjunction(std::vector<Predicate> children) {
        return combine(Kind::And, std::move(children));
    }

    static Predicate disjunction(std::vector<Predicate> children) {
        return combine(Kind::Or, std::move(children));
    }

    static Predicate always_true() {
        Predicate p;
        p.kind_ = Kind::True;
        return p;
    }

    Kind kind() const { return kind_; }
    bool is_always_true() const { return kind_ == Kind::True; }
    std::size_t attr_index() const { return attr_index_; }
    Interval interval() const { return interval_; }
    const std::vector<Predicate>& children() const { return children_; }

  private:
    static Predicate combine(Kind kind, std::vector<Predicate> children) {
        if (children.empty()) {
            throw std::invalid_argument("Predicate: AND/OR requires at least one child");
        }
        Predicate p;
        p.kind_ = kind;
        p.children_ = std::move(children);
        return p;
    }

    Kind kind_ = Kind::True;
    std::size_t attr_index_ = 0;
    Interval interval_;
    std::vector<Predicate> children_;
};

inline bool evaluate_predicate(const Predicate& p, std::span<const double> attrs) {
    switch (p.kind()) {
        case Predicate::Kind::True:
            return true;
        case Predicate::Kind::Range:
            if (p.attr_index() >= attrs.size()) {
                throw std::out_of_range("evaluate_predicate: attribute index out of range");
            }
            return p.interval().contains(attrs[p.attr_index()]);
        case Predicate::Kind::And:
            for (const Predicate& c : p.children()) {
                if (!evaluate_predicate(c, attrs)) {
                    return false;
                }
            }
            return true;
        case Predicate::Kind::Or:
            for (const Predicate& c : p.children()) {
                if (evaluate_predicate(c, attrs)) {
                    return true;
                }
            }
            return false;
    }
    return false;
}

namespace detail {
inline void collect_ranges(const Predicate& p, std::vector<std::pair<std::size_t, Interval>>& out) {
    switch (p.kind()) {
        case Predicate::Kind::Range:
            out.emplace_back(p.attr_index(), p.interval());
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
            for (const Predicate& c : p.children()) {
                collect_ranges(c, out);
            }
            break;
        case Predicate::Kind::True:
            break;
    }
}
} // namespace detail

// All range leaves in left-to-right tree order. Constant-true leaves carry no
// range and are skipped.
inline std::vector<std::pair<std::size_t, Interval>> predicate_attribute_ranges(const Predicate& p) {
    if (p.is_always_true()) {
        throw std::invalid_argument("predicate_attribute_ranges: predicate is constant true");
    }
    std::vector<std::pair<std::size_t, Interval>> out;
    detail::collect_ranges(p, out);
    return out;
}

// ---------------------------------------------------------------------------
// Queries and configuration
// ---------------------------------------------------------------------------

struct FilteredQuery {
    std::vector<float> vector;
    Predicate predicate = Predicate::always_true();
    std::uint32_t k = 10;
};

// Search-time knobs. delta_efs and efi default to 0, meaning "derive from k"
// (k and 2k respectively).
struct SearchConfig {
    std::uint32_t ef = 100;
    double alpha = 0.3;
    double beta = 0.05;
    std::uint32_t delta_efs = 0;
    std::uint32_t efi = 0;

    std::uint32_t delta_efs_or_default(std::uint32_t k) const { return delta_efs != 0 ? delta_efs : k; }
    std::uint32_t efi_or_default(std::uint32_t k) const { return efi != 0 ? efi : 2 * k; }

    void validate(std::uint32_t k) const {
        if (k == 0) {
            throw std::invalid_argument("SearchConfig: k must be positive");
        }
        if (ef < k) {
            throw std::invalid_argument("SearchConfig: ef must be >= k");
        }
        if (!(0.0 <= beta && beta < alpha && alpha <= 1.0)) {
            throw std::invalid_argument("SearchConfig: require 0 <= beta < alpha <= 1");
        }
    }
};

// A record id paired with its squared distance to the query in whose context
// it exists. Ordering for every queue is lexicographic on (dist, id) so that
// traversals are deterministic.
struct ScoredRecord {
    std::uint32_t record_id = 0;
    double dist = 0.0;
};

inline bool scored_before(const ScoredRecord& a, const ScoredRecord& b) {
    if (a.dist != b.dist) {
        return a.dist < b.dist;
    }
    return a.record_id < b.record_id;
}

// ---------------------------------------------------------------------------
// Distance
// ---------------------------------------------------------------------------

namespace detail {
// Unchecked squared Euclidean distance; four independent accumulators keep
// the summation order fixed while still vectorizing.
inline double squared_l2_raw(const float* a, const float* b, std::size_t d) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= d; i += 4) {
        const double d0 = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        const double d1 = static_cast<double>(a[i + 1]) - static_cast<double>(b[i + 1]);
        const double d2 = static_cast<double>(a[i + 2]) - static_cast<double>(b[i + 2]);
        const double d3 = static_cast<double>(a[i + 3]) - static_cast<double>(b[i + 3]);
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < d; ++i) {
        const double dd = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += dd * dd;
    }
    return s;
}

// Variant that gives up once the partial sum exceeds `bound`. Partial sums of
// non-negative terms only grow, so the early exit never changes an argmin.
inline double squared_l2_bounded(const float* a, const float* b, std::size_t d, double bound) {
    double s = 0.0;
    std::size_t i = 0;
    for (; i + 8 <= d; i += 8) {
        double t = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            const double dd = static_cast<double>(a[i + j]) - static_cast<double>(b[i + j]);
            t += dd * dd;
        }
        s += t;
        if (s > bound) {
            return s;
        }
    }
    for (; i < d; ++i) {
        const double dd = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += dd * dd;
    }
    return s;
}
} // namespace detail

inline double squared_l2(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("squared_l2: dimension mismatch");
    }
    return detail::squared_l2_raw(u.data(), v.data(), u.size());
}

// ---------------------------------------------------------------------------
// Recall
// ---------------------------------------------------------------------------

// |result ∩ truth| / |truth|. An empty truth set signals a ground-truth bug
// upstream and is rejected.
inline double recall(std::span<const std::uint32_t> result_ids, std::span<const std::uint32_t> truth_ids) {
    if (truth_ids.empty()) {
        throw std::invalid_argument("recall: ground-truth set is empty");
    }
    std::vector<std::uint32_t> truth(truth_ids.begin(), truth_ids.end());
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
    std::vector<std::uint32_t> result(result_ids.begin(), result_ids.end());
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    std::size_t hits = 0;
    auto it = truth.begin();
    for (std::uint32_t id : result) {
        it = std::lower_bound(it, truth.end(), id);
        if (it == truth.end()) {
            break;
        }
        if (*it == id) {
            ++hits;
            ++it;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Small shared utilities
// ---------------------------------------------------------------------------

class Bitmap {
  public:
    Bitmap() = default;
    explicit Bitmap(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    std::size_t size() const { return n_; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) {
            c += static_cast<std::size_t>(std::popcount(w));
        }
        return c;
    }

  private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

// Binary heap over ScoredRecord with (dist, id) ordering and cheap
// inspection of the raw storage for tests.
template <bool MinOnTop>
class ScoredHeap {
  public:
    bool empty() const { return h_.empty(); }
    std::size_t size() const { return h_.size(); }
    void clear() { h_.clear(); }

    void push(const ScoredRecord& r) {
        h_.push_back(r);
        std::push_heap(h_.begin(), h_.end(), cmp);
    }

    const ScoredRecord& top() const { return h_.front(); }

    ScoredRecord pop() {
        std::pop_heap(h_.begin(), h_.end(), cmp);
        ScoredRecord r = h_.back();
        h_.pop_back();
        return r;
    }

    const std::vector<ScoredRecord>& raw() const { return h_; }

    std::vector<ScoredRecord> sorted() const {
        std::vector<ScoredRecord> v = h_;
        std::sort(v.begin(), v.end(), scored_before);
        return v;
    }

  private:
    static bool cmp(const ScoredRecord& a, const ScoredRecord& b) {
        return MinOnTop ? scored_before(b, a) : scored_before(a, b);
    }

    std::vector<ScoredRecord> h_;
};

using MinDistHeap = ScoredHeap<true>;  // top() is the smallest distance
using MaxDistHeap = ScoredHeap<false>; // top() is the largest distance

// Per-query instrumentation. dist_comps counts distance computations that
// set a visited bit; routing and centroid work is tracked separately.
struct QueryCounters {
    std::uint64_t dist_comps = 0;
    std::uint64_t predicate_evals = 0;
    std::uint64_t routing_dist_comps = 0;
    std::uint64_t centroid_dist_comps = 0;
    std::uint64_t one_hop_branches = 0;
    std::uint64_t two_hop_branches = 0;
    std::uint64_t pivot_breaks = 0;
    std::uint64_t cbt_pulls = 0;
};

// Candidate queue and visited bitmap shared by the graph-side and the
// relational-side iterators of one query.
struct SharedSearchState {
    explicit SharedSearchState(std::size_t n) : visited(n) {}
    MinDistHeap candidates;
    Bitmap visited;
};

} // namespace compass
